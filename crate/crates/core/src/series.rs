//! Truncated Laurent series in up to four unit-modulus variables.
//!
//! A [`LaurentSeries`] stores a dense block of complex coefficients indexed by
//! integer exponent tuples inside an [`ExponentWindow`]. Every product is
//! computed against an explicit target window and anything that falls outside
//! of it is dropped, so the caller decides which coefficients are exact.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Maximum number of series variables.
pub const MAX_VARS: usize = 4;

/// Default bound on the number of coefficients a window may hold.
pub const DEFAULT_VOLUME_CAP: usize = 10_000_000;

/// Regulator for unit-modulus geometric factors, `z -> e^{-eps} z`, in
/// [`LaurentSeries::geometric_factor_regulated`].
pub const REGULATOR_EPS: f64 = 1e-12;

/// An exponential series is considered converged once the next term has a
/// max-norm below this.
pub const EXP_TERM_TOL: f64 = 1e-14;

/// Default cap on the number of terms of an exponential series.
pub const DEFAULT_EXP_ORDER: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("exponent {exps:?} lies outside the window {window}")]
    WindowViolation { exps: Vec<i32>, window: String },
    #[error("window volume {volume} exceeds the cap of {cap}")]
    WindowTooLarge { volume: usize, cap: usize },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("series have {0} and {1} variables")]
    VarMismatch(usize, usize),
    #[error("exponential series not converged after {order} terms (last term norm {norm:e})")]
    Truncation { order: usize, norm: f64 },
    #[error("geometric factor diverges, |z| = {0}")]
    Divergence(f64),
    #[error("non-finite coefficient at {0:?}")]
    NonFinite(Vec<i32>),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// Inclusive per-variable exponent bounds.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExponentWindow {
    nvars: usize,
    lo: [i32; MAX_VARS],
    hi: [i32; MAX_VARS],
    strides: [usize; MAX_VARS],
    volume: usize,
}

impl ExponentWindow {
    pub fn new(lo: &[i32], hi: &[i32]) -> Result<Self> {
        Self::with_cap(lo, hi, DEFAULT_VOLUME_CAP)
    }

    pub fn with_cap(lo: &[i32], hi: &[i32], cap: usize) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(SeriesError::VarMismatch(lo.len(), hi.len()));
        }
        let nvars = lo.len();
        if nvars == 0 || nvars > MAX_VARS {
            return Err(SeriesError::InvalidWindow(format!(
                "{nvars} variables (expected 1..={MAX_VARS})"
            )));
        }
        let mut l = [0; MAX_VARS];
        let mut h = [0; MAX_VARS];
        let mut volume: usize = 1;
        for v in 0..nvars {
            if lo[v] > hi[v] {
                return Err(SeriesError::InvalidWindow(format!(
                    "variable {v}: lower bound {} above upper bound {}",
                    lo[v], hi[v]
                )));
            }
            l[v] = lo[v];
            h[v] = hi[v];
            let extent = (hi[v] as i64 - lo[v] as i64 + 1) as usize;
            volume = volume.saturating_mul(extent);
        }
        if volume > cap {
            return Err(SeriesError::WindowTooLarge { volume, cap });
        }
        // row-major, last variable fastest
        let mut strides = [0usize; MAX_VARS];
        let mut s = 1usize;
        for v in (0..MAX_VARS).rev() {
            strides[v] = s;
            s *= (h[v] - l[v] + 1) as usize;
        }
        Ok(Self {
            nvars,
            lo: l,
            hi: h,
            strides,
            volume,
        })
    }

    /// Window holding a single exponent tuple.
    pub fn point(exps: &[i32]) -> Result<Self> {
        Self::new(exps, exps)
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    pub fn lo(&self) -> &[i32] {
        &self.lo[..self.nvars]
    }

    pub fn hi(&self) -> &[i32] {
        &self.hi[..self.nvars]
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn extent(&self, v: usize) -> i32 {
        self.hi[v] - self.lo[v] + 1
    }

    pub fn contains(&self, exps: &[i32]) -> bool {
        exps.len() == self.nvars
            && (0..self.nvars).all(|v| exps[v] >= self.lo[v] && exps[v] <= self.hi[v])
    }

    fn contains_padded(&self, e: &[i32; MAX_VARS]) -> bool {
        (0..MAX_VARS).all(|v| e[v] >= self.lo[v] && e[v] <= self.hi[v])
    }

    fn offset(&self, e: &[i32; MAX_VARS]) -> usize {
        (0..MAX_VARS)
            .map(|v| (e[v] - self.lo[v]) as usize * self.strides[v])
            .sum()
    }

    fn exps_at(&self, mut idx: usize) -> [i32; MAX_VARS] {
        let mut e = [0; MAX_VARS];
        for ((ev, &lo), &stride) in e.iter_mut().zip(&self.lo).zip(&self.strides) {
            *ev = lo + (idx / stride) as i32;
            idx %= stride;
        }
        e
    }

    /// Smallest window containing both `self` and `other`.
    pub fn hull(&self, other: &Self) -> Result<Self> {
        if self.nvars != other.nvars {
            return Err(SeriesError::VarMismatch(self.nvars, other.nvars));
        }
        let lo: Vec<i32> = (0..self.nvars)
            .map(|v| self.lo[v].min(other.lo[v]))
            .collect();
        let hi: Vec<i32> = (0..self.nvars)
            .map(|v| self.hi[v].max(other.hi[v]))
            .collect();
        Self::new(&lo, &hi)
    }

    /// Grow every bound outward by `by[v]`.
    pub fn expanded(&self, by: &[i32]) -> Result<Self> {
        let lo: Vec<i32> = (0..self.nvars).map(|v| self.lo[v] - by[v]).collect();
        let hi: Vec<i32> = (0..self.nvars).map(|v| self.hi[v] + by[v]).collect();
        Self::new(&lo, &hi)
    }

    /// Widen each variable so that its extent grows by `fraction`, split
    /// evenly between both sides (rounded up).
    pub fn widened(&self, fraction: f64) -> Result<Self> {
        let by: Vec<i32> = (0..self.nvars)
            .map(|v| ((self.extent(v) as f64 * fraction) / 2.0).ceil() as i32)
            .collect();
        self.expanded(&by)
    }

    fn check_exps(&self, exps: &[i32]) -> Result<[i32; MAX_VARS]> {
        if exps.len() != self.nvars {
            return Err(SeriesError::VarMismatch(exps.len(), self.nvars));
        }
        if !self.contains(exps) {
            return Err(SeriesError::WindowViolation {
                exps: exps.to_vec(),
                window: self.to_string(),
            });
        }
        Ok(pad(exps))
    }
}

impl fmt::Display for ExponentWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for v in 0..self.nvars {
            if v > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}..={}", self.lo[v], self.hi[v])?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for ExponentWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExponentWindow{self}")
    }
}

fn pad(exps: &[i32]) -> [i32; MAX_VARS] {
    let mut e = [0; MAX_VARS];
    e[..exps.len()].copy_from_slice(exps);
    e
}

/// A single term `coeff * X_1^{e_1} ... X_k^{e_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub exps: Vec<i32>,
    pub coeff: Complex64,
}

impl Monomial {
    pub fn new(exps: &[i32], coeff: Complex64) -> Self {
        Self {
            exps: exps.to_vec(),
            coeff,
        }
    }
}

/// Dense truncated Laurent series.
#[derive(Clone, PartialEq)]
pub struct LaurentSeries {
    window: ExponentWindow,
    coeffs: Vec<Complex64>,
}

impl LaurentSeries {
    pub fn zero(window: &ExponentWindow) -> Self {
        Self {
            window: window.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); window.volume()],
        }
    }

    pub fn monomial(window: &ExponentWindow, exps: &[i32], coeff: Complex64) -> Result<Self> {
        let e = window.check_exps(exps)?;
        let mut s = Self::zero(window);
        let i = window.offset(&e);
        s.coeffs[i] = coeff;
        Ok(s)
    }

    /// Build a series from a list of terms; terms outside the window are
    /// dropped and repeated exponents accumulate.
    pub fn from_terms<'a>(
        window: &ExponentWindow,
        terms: impl IntoIterator<Item = (&'a [i32], Complex64)>,
    ) -> Result<Self> {
        let mut s = Self::zero(window);
        for (exps, c) in terms {
            if exps.len() != window.num_vars() {
                return Err(SeriesError::VarMismatch(exps.len(), window.num_vars()));
            }
            if window.contains(exps) {
                let i = window.offset(&pad(exps));
                s.coeffs[i] += c;
            }
        }
        Ok(s)
    }

    pub fn window(&self) -> &ExponentWindow {
        &self.window
    }

    pub fn num_vars(&self) -> usize {
        self.window.num_vars()
    }

    /// Stored coefficient; errors if `exps` is outside the window.
    pub fn coefficient(&self, exps: &[i32]) -> Result<Complex64> {
        let e = self.window.check_exps(exps)?;
        Ok(self.coeffs[self.window.offset(&e)])
    }

    /// Coefficient, or zero outside the window.
    pub fn get(&self, exps: &[i32]) -> Complex64 {
        if self.window.contains(exps) {
            self.coeffs[self.window.offset(&pad(exps))]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Nonzero terms in storage order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<i32>, Complex64)> + '_ {
        let nv = self.num_vars();
        self.nonzero()
            .into_iter()
            .map(move |(e, c)| (e[..nv].to_vec(), c))
    }

    fn nonzero(&self) -> Vec<([i32; MAX_VARS], Complex64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(i, &c)| (self.window.exps_at(i), c))
            .collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Errors on the first NaN or infinite coefficient.
    pub fn check_finite(&self) -> Result<()> {
        match self
            .coeffs
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            Some(i) => Err(SeriesError::NonFinite(
                self.window.exps_at(i)[..self.num_vars()].to_vec(),
            )),
            None => Ok(()),
        }
    }

    /// Copy into another window, dropping terms that do not fit.
    pub fn restrict(&self, window: &ExponentWindow) -> Result<Self> {
        if window.num_vars() != self.num_vars() {
            return Err(SeriesError::VarMismatch(window.num_vars(), self.num_vars()));
        }
        let mut out = Self::zero(window);
        for (e, c) in self.nonzero() {
            if window.contains_padded(&e) {
                out.coeffs[window.offset(&e)] = c;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            window: self.window.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + other` on the window of `self`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.num_vars() != self.num_vars() {
            return Err(SeriesError::VarMismatch(self.num_vars(), other.num_vars()));
        }
        let mut out = self.clone();
        if other.window == self.window {
            for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
                *a += b;
            }
        } else {
            for (e, c) in other.nonzero() {
                if self.window.contains_padded(&e) {
                    out.coeffs[self.window.offset(&e)] += c;
                }
            }
        }
        Ok(out)
    }

    /// Truncated product: the exact convolution restricted to `target`.
    pub fn mul(&self, other: &Self, target: &ExponentWindow) -> Result<Self> {
        if other.num_vars() != self.num_vars() {
            return Err(SeriesError::VarMismatch(self.num_vars(), other.num_vars()));
        }
        if target.num_vars() != self.num_vars() {
            return Err(SeriesError::VarMismatch(self.num_vars(), target.num_vars()));
        }
        let a = self.nonzero();
        let b = other.nonzero();
        let mut out = Self::zero(target);
        for (eb, cb) in &b {
            for (ea, ca) in &a {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
                if target.contains_padded(&e) {
                    out.coeffs[target.offset(&e)] += ca * cb;
                }
            }
        }
        Ok(out)
    }

    /// `exp(self)` on the window of `self`, using the default order cap.
    pub fn exp_series(&self) -> Result<Self> {
        self.exp_series_with_order(DEFAULT_EXP_ORDER)
    }

    /// `exp(self)` truncated to the window of `self`. The constant term is
    /// exponentiated as a scalar; the remaining terms are summed as a Taylor
    /// series until the next term falls below [`EXP_TERM_TOL`].
    pub fn exp_series_with_order(&self, max_order: usize) -> Result<Self> {
        let window = &self.window;
        let zero = [0i32; MAX_VARS];
        let (c0, rest) = if window.contains_padded(&zero) {
            let mut rest = self.clone();
            let i = window.offset(&zero);
            let c0 = rest.coeffs[i];
            rest.coeffs[i] = Complex64::new(0.0, 0.0);
            (c0, rest)
        } else {
            (Complex64::new(0.0, 0.0), self.clone())
        };
        let scalar = c0.exp();

        let mut sum = Self::zero(window);
        if window.contains_padded(&zero) {
            sum.coeffs[window.offset(&zero)] = Complex64::new(1.0, 0.0);
        }
        let mut term = sum.clone();
        let mut converged = rest.is_zero();
        let mut norm = 0.0;
        for j in 1..=max_order {
            if converged {
                break;
            }
            term = term
                .mul(&rest, window)?
                .scale(Complex64::new(1.0 / j as f64, 0.0));
            norm = term.max_norm();
            for (s, t) in sum.coeffs.iter_mut().zip(&term.coeffs) {
                *s += t;
            }
            if norm * scalar.norm() < EXP_TERM_TOL {
                converged = true;
            }
        }
        if !converged {
            return Err(SeriesError::Truncation {
                order: max_order,
                norm,
            });
        }
        let out = sum.scale(scalar);
        out.check_finite()?;
        Ok(out)
    }

    /// `(1 - z)^power` expanded inside `window`, with `power` = +1 or -1.
    ///
    /// The window bounds the sum over powers of `z`, so unit-modulus `z`
    /// needs no damping here. A regulator would shift the coefficient of
    /// `z^k` by `k * eps`.
    pub fn geometric_factor(z: &Monomial, power: i32, window: &ExponentWindow) -> Result<Self> {
        Self::geometric_factor_regulated(z, power, window, 0.0)
    }

    /// As [`Self::geometric_factor`] with an explicit regulator for
    /// unit-modulus `z`.
    pub fn geometric_factor_regulated(
        z: &Monomial,
        power: i32,
        window: &ExponentWindow,
        eps: f64,
    ) -> Result<Self> {
        if z.exps.len() != window.num_vars() {
            return Err(SeriesError::VarMismatch(z.exps.len(), window.num_vars()));
        }
        let one = Complex64::new(1.0, 0.0);
        let modulus = z.coeff.norm();
        match power {
            1 => {
                let zero = vec![0; window.num_vars()];
                LaurentSeries::from_terms(
                    window,
                    [(zero.as_slice(), one), (z.exps.as_slice(), -z.coeff)],
                )
            }
            -1 => {
                if modulus > 1.0 + 1e-12 {
                    return Err(SeriesError::Divergence(modulus));
                }
                let ratio = if (modulus - 1.0).abs() <= 1e-12 {
                    z.coeff * (-eps).exp()
                } else {
                    z.coeff
                };
                if z.exps.iter().all(|&e| e == 0) {
                    if ratio.norm() >= 1.0 - 1e-9 {
                        return Err(SeriesError::Divergence(modulus));
                    }
                    let zero = vec![0; window.num_vars()];
                    return LaurentSeries::from_terms(
                        window,
                        [(zero.as_slice(), one / (one - ratio))],
                    );
                }
                let (kmin, kmax) = line_range(&z.exps, window);
                let mut s = Self::zero(window);
                if kmin <= kmax {
                    let mut c = ratio.powi(kmin);
                    for k in kmin..=kmax {
                        let e: [i32; MAX_VARS] =
                            std::array::from_fn(
                                |v| {
                                    if v < z.exps.len() {
                                        z.exps[v] * k
                                    } else {
                                        0
                                    }
                                },
                            );
                        s.coeffs[window.offset(&e)] = c;
                        c *= ratio;
                    }
                }
                Ok(s)
            }
            _ => Err(SeriesError::InvalidWindow(format!(
                "geometric factor power must be +1 or -1, got {power}"
            ))),
        }
    }
}

/// Range of `k >= 0` for which `k * step` lies inside `window`.
fn line_range(step: &[i32], window: &ExponentWindow) -> (i32, i32) {
    let mut kmin = 0i32;
    let mut kmax = i32::MAX;
    for (v, &s) in step.iter().enumerate() {
        let (lo, hi) = (window.lo[v], window.hi[v]);
        if s == 0 {
            if lo > 0 || hi < 0 {
                return (1, 0);
            }
        } else if s > 0 {
            kmin = kmin.max(div_ceil(lo, s));
            kmax = kmax.min(hi.div_euclid(s));
        } else {
            kmin = kmin.max(div_ceil(-hi, -s));
            kmax = kmax.min((-lo).div_euclid(-s));
        }
    }
    (kmin, kmax)
}

fn div_ceil(a: i32, b: i32) -> i32 {
    -((-a).div_euclid(b))
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LaurentSeries")
            .field("window", &self.window)
            .field("terms", &self.terms().collect::<Vec<_>>())
            .finish()
    }
}
