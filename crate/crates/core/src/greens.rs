//! Fermion correlators as Gaussian averages of vertex operators.
//!
//! A fermion field on the ring is `psi(x) ~ K lambda(x) :exp(i phi(x)):`, with
//! `phi` linear in the boson modes. The ordered product of vertices
//! `psi^{sigma_j}(x_j, t_j)` therefore averages to
//!
//! ```text
//! prefactor * prod_{j<k} (1 - z_jk)^{sigma_j sigma_k}
//!           * exp(-1/2 sum_j dC_jj - sum_{j<k} sigma_j sigma_k dC_jk)
//! ```
//!
//! where `z_jk = (X_j / X_k) e^{-i w0 (t_j - t_k)}` with `X_j = e^{i x_j}`,
//! and `dC` is the part of the `phi` correlator that differs from the
//! undamped zero-temperature Fermi sea. The Klein factor and the
//! `lambda = e^{i (N-1) x}` factor give the prefactor monomial. The
//! ring-angle Fourier integral that turns `psi` back into level operators
//! `c_n` is a coefficient extraction from this Laurent series.
//!
//! Every `dC_jk` term proportional to `P_q` lies along the direction `X_j /
//! X_k`, so it is folded into a one-dimensional factor together with the
//! geometric factor of that pair. Thermal and squeezing terms (`M`, `A`,
//! `Abar`) and equal-time self terms go into a separate residual exponent.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{ModeCorrelator, ModeValues, ModelParams};
use crate::error::{Error, Result};
use crate::series::{ExponentWindow, LaurentSeries, Monomial};

/// Default padding added around the coefficients a caller asks for.
pub const DEFAULT_SLACK: i32 = 8;

/// Extracted coefficients must move by less than this when the window grows.
pub const WINDOW_CHECK_TOL: f64 = 1e-10;

/// Which field a vertex inserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    /// `psi`, removes a particle.
    Psi,
    /// `psi^+`, adds a particle.
    PsiDagger,
}

impl Field {
    pub fn sign(self) -> i32 {
        match self {
            Field::Psi => 1,
            Field::PsiDagger => -1,
        }
    }
}

/// One field insertion `psi^{(+)}(x_var, time)`. `order` is the 1-based
/// position of the operator in the product, read left to right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub var: usize,
    pub time: f64,
    pub field: Field,
    pub order: usize,
}

impl Vertex {
    pub fn new(var: usize, time: f64, field: Field, order: usize) -> Self {
        Self {
            var,
            time,
            field,
            order,
        }
    }
}

/// Window sizing and the widening self-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub slack: i32,
    /// Recompute with every window bound widened by 50% and fail if any
    /// extracted coefficient moves by more than [`WINDOW_CHECK_TOL`].
    pub verify: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            slack: DEFAULT_SLACK,
            verify: false,
        }
    }
}

impl TruncationPolicy {
    pub fn verified() -> Self {
        Self {
            verify: true,
            ..Self::default()
        }
    }
}

/// Weak-coupling decay function `nu(t) = exp(-i (w0' - w0) t - Gamma t / 2) - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFunction {
    /// `w0' - w0`
    pub frequency_shift: f64,
    pub rate: f64,
}

impl DecayFunction {
    pub fn new(params: &ModelParams, rate: f64) -> Self {
        Self {
            frequency_shift: params.omega0_prime - params.omega0,
            rate,
        }
    }

    pub fn nu(&self, t: f64) -> Complex64 {
        Complex64::from_polar((-0.5 * self.rate * t).exp(), -self.frequency_shift * t)
            - Complex64::new(1.0, 0.0)
    }
}

/// Validate a vertex list and return it sorted by operator order.
fn ordered_vertices(vertices: &[Vertex], nvars: usize) -> Result<Vec<Vertex>> {
    let mut v = vertices.to_vec();
    v.sort_by_key(|x| x.order);
    for (i, x) in v.iter().enumerate() {
        if x.order != i + 1 {
            return Err(Error::Configuration(
                "vertex orders must be a permutation of 1..=n".into(),
            ));
        }
        if x.var >= nvars {
            return Err(Error::Configuration(format!(
                "vertex variable {} outside the {nvars}-variable series",
                x.var
            )));
        }
        if v[..i].iter().any(|y| y.var == x.var) {
            return Err(Error::Configuration(format!(
                "variable {} used by two vertices",
                x.var
            )));
        }
    }
    let charge: i32 = v.iter().map(|x| x.field.sign()).sum();
    if charge != 0 {
        return Err(Error::Neutrality(charge));
    }
    Ok(v)
}

/// Prefactor monomial from the Klein factors and `lambda(x)`: acting from
/// the right on the `N`-particle sea, `psi` removes the top particle (level
/// `count - 1`) and `psi^+` fills the lowest empty level (`count`).
fn prefactor(params: &ModelParams, ordered: &[Vertex], nvars: usize) -> Monomial {
    let mut exps = vec![0; nvars];
    let mut phase = 0.0;
    let mut count = params.n_particles as i64;
    for v in ordered.iter().rev() {
        let level = match v.field {
            Field::Psi => {
                count -= 1;
                count
            }
            Field::PsiDagger => {
                count += 1;
                count - 1
            }
        };
        let s = v.field.sign() as i64;
        exps[v.var] += (s * level) as i32;
        phase -= params.omega0 * v.time * (s * level) as f64;
    }
    Monomial::new(&exps, Complex64::from_polar(1.0, phase))
}

fn mode_values(correlators: &[ModeCorrelator], tau: f64) -> Result<Vec<(usize, ModeValues)>> {
    correlators
        .iter()
        .map(|c| Ok((c.q(), c.eval(tau)?)))
        .collect()
}

fn check_modes(correlators: &[ModeCorrelator]) -> Result<()> {
    for (i, c) in correlators.iter().enumerate() {
        if c.q() == 0 {
            return Err(Error::Configuration("mode index q starts at 1".into()));
        }
        if correlators[..i].iter().any(|d| d.q() == c.q()) {
            return Err(Error::Configuration(format!(
                "mode q={} given twice",
                c.q()
            )));
        }
    }
    Ok(())
}

/// (j, k, [(q, coefficient of (X_j/X_k)^q)])
type Line = (usize, usize, Vec<(i32, Complex64)>);

/// Terms of the exponent, split into per-pair line coefficients (powers of
/// `X_j / X_k`) and residual monomials.
struct Exponent {
    lines: Vec<Line>,
    residual: Vec<(Vec<i32>, Complex64)>,
}

fn exponent_terms(
    params: &ModelParams,
    ordered: &[Vertex],
    correlators: &[ModeCorrelator],
    nvars: usize,
) -> Result<Exponent> {
    check_modes(correlators)?;
    let zero = Complex64::new(0.0, 0.0);
    let w0 = params.omega0;
    let n = ordered.len();
    let mut lines = Vec::new();
    let mut residual = Vec::new();
    let unit = |pairs: &[(usize, i32)]| {
        let mut e = vec![0; nvars];
        for &(v, k) in pairs {
            e[v] += k;
        }
        e
    };

    let equal_time = mode_values(correlators, 0.0)?;
    for vj in ordered {
        for &(q, val) in &equal_time {
            let (qf, qi) = (q as f64, q as i32);
            let scale = -0.5 / qf;
            let c0 = val.p - 1.0 + val.m;
            if c0 != zero {
                residual.push((vec![0; nvars], scale * c0));
            }
            if val.a != zero {
                residual.push((unit(&[(vj.var, 2 * qi)]), -scale * val.a));
            }
            if val.abar != zero {
                residual.push((unit(&[(vj.var, -2 * qi)]), -scale * val.abar));
            }
        }
    }

    for j in 0..n {
        for k in j + 1..n {
            let (vj, vk) = (ordered[j], ordered[k]);
            let ss = (vj.field.sign() * vk.field.sign()) as f64;
            let tau = vj.time - vk.time;
            let mut line = Vec::new();
            for (q, val) in mode_values(correlators, tau)? {
                let (qf, qi) = (q as f64, q as i32);
                let scale = -ss / qf;
                let dp = val.p - Complex64::from_polar(1.0, -qf * w0 * tau);
                if dp.norm() > 0.0 {
                    line.push((qi, scale * dp));
                }
                if val.m != zero {
                    residual.push((unit(&[(vk.var, qi), (vj.var, -qi)]), scale * val.m));
                }
                if val.a != zero {
                    residual.push((unit(&[(vj.var, qi), (vk.var, qi)]), -scale * val.a));
                }
                if val.abar != zero {
                    residual.push((unit(&[(vj.var, -qi), (vk.var, -qi)]), -scale * val.abar));
                }
            }
            lines.push((j, k, line));
        }
    }
    Ok(Exponent { lines, residual })
}

/// The exponent `dE` as a Laurent polynomial on `window`: every damped or
/// thermal contribution to `-1/2 sum dC_jj - sum sigma_j sigma_k dC_jk`.
pub fn delta_e_series(
    params: &ModelParams,
    vertices: &[Vertex],
    correlators: &[ModeCorrelator],
    window: &ExponentWindow,
) -> Result<LaurentSeries> {
    let nvars = window.num_vars();
    let ordered = ordered_vertices(vertices, nvars)?;
    let ex = exponent_terms(params, &ordered, correlators, nvars)?;
    let mut terms = ex.residual;
    for (j, k, line) in ex.lines {
        for (q, c) in line {
            let mut e = vec![0; nvars];
            e[ordered[j].var] += q;
            e[ordered[k].var] -= q;
            terms.push((e, c));
        }
    }
    Ok(LaurentSeries::from_terms(
        window,
        terms.iter().map(|(e, c)| (e.as_slice(), *c)),
    )?)
}

/// Gaussian expectation of an ordered vertex product as a Laurent series on
/// `window`. The window must contain the prefactor monomial and should be
/// sized with [`expectation_window`]; coefficients are exact wherever every
/// contributing partial product stays inside it.
pub fn gaussian_vertex_expectation(
    params: &ModelParams,
    vertices: &[Vertex],
    correlators: &[ModeCorrelator],
    window: &ExponentWindow,
) -> Result<LaurentSeries> {
    let nvars = window.num_vars();
    let ordered = ordered_vertices(vertices, nvars)?;
    let ex = exponent_terms(params, &ordered, correlators, nvars)?;
    let pre = prefactor(params, &ordered, nvars);
    let mut acc = LaurentSeries::monomial(window, &pre.exps, pre.coeff)?;

    // Pairs touching the outermost vertices first: along those directions the
    // exponents of the first and last variables move monotonically, so
    // intermediate products stay close to the targets.
    let last = ordered.len() - 1;
    let mut lines = ex.lines;
    lines.sort_by_key(|(j, k, _)| !(*j == 0 || *k == last));

    for (j, k, line) in lines {
        let (vj, vk) = (ordered[j], ordered[k]);
        let len = window.extent(vj.var).min(window.extent(vk.var));
        let mut lo = vec![0; nvars];
        let mut hi = vec![0; nvars];
        hi[vj.var] = len;
        lo[vk.var] = -len;
        let line_window = ExponentWindow::new(&lo, &hi)?;
        let mut dir = vec![0; nvars];
        dir[vj.var] = 1;
        dir[vk.var] = -1;

        let z = Monomial::new(
            &dir,
            Complex64::from_polar(1.0, -params.omega0 * (vj.time - vk.time)),
        );
        let power = vj.field.sign() * vk.field.sign();
        let mut factor = LaurentSeries::geometric_factor(&z, power, &line_window)?;
        if !line.is_empty() {
            let terms: Vec<(Vec<i32>, Complex64)> = line
                .iter()
                .map(|&(q, c)| (dir.iter().map(|d| d * q).collect(), c))
                .collect();
            let d = LaurentSeries::from_terms(
                &line_window,
                terms.iter().map(|(e, c)| (e.as_slice(), *c)),
            )?;
            factor = factor.mul(&d.exp_series()?, &line_window)?;
        }
        acc = acc.mul(&factor, window)?;
    }

    if !ex.residual.is_empty() {
        let r: Vec<i32> = (0..nvars)
            .map(|v| {
                if ordered.iter().any(|x| x.var == v) {
                    window.extent(v).min(16)
                } else {
                    0
                }
            })
            .collect();
        let neg: Vec<i32> = r.iter().map(|x| -x).collect();
        let res_window = ExponentWindow::new(&neg, &r)?;
        let res = LaurentSeries::from_terms(
            &res_window,
            ex.residual.iter().map(|(e, c)| (e.as_slice(), *c)),
        )?;
        acc = acc.mul(&res.exp_series()?, window)?;
    }
    acc.check_finite()?;
    Ok(acc)
}

/// Window covering the prefactor and all `targets`, padded by `slack`.
/// Variables of inner vertices get extra room for the excursion allowed by
/// the outer ones.
pub fn expectation_window(
    params: &ModelParams,
    vertices: &[Vertex],
    nvars: usize,
    targets: &[Vec<i32>],
    slack: i32,
) -> Result<ExponentWindow> {
    let ordered = ordered_vertices(vertices, nvars)?;
    let pre = prefactor(params, &ordered, nvars);
    let mut lo = pre.exps.clone();
    let mut hi = pre.exps.clone();
    for t in targets {
        if t.len() != nvars {
            return Err(Error::Configuration(format!(
                "target {t:?} does not have {nvars} exponents"
            )));
        }
        for v in 0..nvars {
            lo[v] = lo[v].min(t[v]);
            hi[v] = hi[v].max(t[v]);
        }
    }
    let outer = [ordered[0].var, ordered[ordered.len() - 1].var];
    let excursion = outer.iter().map(|&v| hi[v] - lo[v]).max().unwrap_or(0);
    let used: Vec<bool> = (0..nvars)
        .map(|v| ordered.iter().any(|x| x.var == v))
        .collect();
    for v in 0..nvars {
        if !used[v] {
            continue;
        }
        let pad = if outer.contains(&v) {
            slack
        } else {
            slack + excursion
        };
        lo[v] -= pad;
        hi[v] += pad;
    }
    Ok(ExponentWindow::new(&lo, &hi)?)
}

/// Coefficients of the vertex expectation at `targets`, with automatic
/// window sizing and the optional widening check.
pub fn expectation_coefficients(
    params: &ModelParams,
    vertices: &[Vertex],
    correlators: &[ModeCorrelator],
    nvars: usize,
    targets: &[Vec<i32>],
    policy: TruncationPolicy,
) -> Result<Vec<Complex64>> {
    let window = expectation_window(params, vertices, nvars, targets, policy.slack)?;
    let series = gaussian_vertex_expectation(params, vertices, correlators, &window)?;
    let values: Vec<Complex64> = targets
        .iter()
        .map(|t| series.coefficient(t))
        .collect::<std::result::Result<_, _>>()?;
    if policy.verify {
        let wide = window.widened(0.5)?;
        let series = gaussian_vertex_expectation(params, vertices, correlators, &wide)?;
        let mut worst: f64 = 0.0;
        for (t, v) in targets.iter().zip(&values) {
            worst = worst.max((series.coefficient(t)? - v).norm());
        }
        if worst >= WINDOW_CHECK_TOL {
            return Err(Error::Truncation(format!(
                "coefficients moved by {worst:e} when widening {window}"
            )));
        }
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagatorKind {
    /// `<c_{n'}^+(t) c_n>`
    Hole,
    /// `<c_n(t) c_{n'}^+>`
    Particle,
}

impl PropagatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PropagatorKind::Hole => "hole",
            PropagatorKind::Particle => "particle",
        }
    }
}

// Series variables of the two-point function: X = e^{ix} (index 0),
// X' = e^{ix'} (index 1).
fn two_point_vertices(kind: PropagatorKind, t: f64) -> [Vertex; 2] {
    match kind {
        PropagatorKind::Hole => [
            Vertex::new(1, t, Field::PsiDagger, 1),
            Vertex::new(0, 0.0, Field::Psi, 2),
        ],
        PropagatorKind::Particle => [
            Vertex::new(0, t, Field::Psi, 1),
            Vertex::new(1, 0.0, Field::PsiDagger, 2),
        ],
    }
}

/// Propagators for every pair `(n, n')` drawn from `levels`, returned
/// row-major (`n` outer). One Laurent series serves all pairs.
pub fn propagator_block(
    kind: PropagatorKind,
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    levels: &[i32],
    t: f64,
    policy: TruncationPolicy,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    let targets: Vec<Vec<i32>> = levels
        .iter()
        .flat_map(|&n| levels.iter().map(move |&np| vec![n, -np]))
        .collect();
    expectation_coefficients(
        params,
        &two_point_vertices(kind, t),
        correlators,
        2,
        &targets,
        policy,
    )
}

pub fn propagator(
    kind: PropagatorKind,
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    n: i32,
    n_prime: i32,
    t: f64,
    policy: TruncationPolicy,
) -> Result<Complex64> {
    params.validate()?;
    let v = expectation_coefficients(
        params,
        &two_point_vertices(kind, t),
        correlators,
        2,
        &[vec![n, -n_prime]],
        policy,
    )?;
    Ok(v[0])
}

/// Hole propagator `<c_{n'}^+(t) c_n>` from the series expansion.
pub fn hole_propagator(
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    n: i32,
    n_prime: i32,
    t: f64,
) -> Result<Complex64> {
    propagator(
        PropagatorKind::Hole,
        params,
        correlators,
        n,
        n_prime,
        t,
        TruncationPolicy::default(),
    )
}

/// Particle propagator `<c_n(t) c_{n'}^+>` from the series expansion.
pub fn particle_propagator(
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    n: i32,
    n_prime: i32,
    t: f64,
) -> Result<Complex64> {
    propagator(
        PropagatorKind::Particle,
        params,
        correlators,
        n,
        n_prime,
        t,
        TruncationPolicy::default(),
    )
}

fn partial_exp(nu: Complex64, terms: i32) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for m in 0..=terms {
        if m > 0 {
            term *= nu / m as f64;
        }
        sum += term;
    }
    sum
}

/// Weak-coupling hole propagator in closed form,
/// `e^{i w0 n t} sum_{m=0}^{n_F - n} nu(t)^m / m!`.
pub fn hole_propagator_weak_closed_form(
    params: &ModelParams,
    rate: f64,
    n: i32,
    t: f64,
) -> Result<Complex64> {
    let nf = params.fermi_level();
    if n > nf {
        return Err(Error::Domain(format!(
            "level {n} lies above the Fermi level {nf}"
        )));
    }
    let nu = DecayFunction::new(params, rate).nu(t);
    Ok(Complex64::from_polar(1.0, params.omega0 * n as f64 * t) * partial_exp(nu, nf - n))
}

/// Weak-coupling particle propagator in closed form,
/// `e^{-i w0 n t} sum_{m=0}^{n - n_F - 1} nu(t)^m / m!`.
pub fn particle_propagator_weak_closed_form(
    params: &ModelParams,
    rate: f64,
    n: i32,
    t: f64,
) -> Result<Complex64> {
    let nf = params.fermi_level();
    if n <= nf {
        return Err(Error::Domain(format!(
            "level {n} is not above the Fermi level {nf}"
        )));
    }
    let nu = DecayFunction::new(params, rate).nu(t);
    Ok(Complex64::from_polar(1.0, -params.omega0 * n as f64 * t) * partial_exp(nu, n - nf - 1))
}

/// Propagator values for one level pair on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensResult {
    pub kind: PropagatorKind,
    pub n: i32,
    pub n_prime: i32,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// Evaluate one propagator on a time grid; time points run in parallel and
/// results keep the grid order.
pub fn greens_on_grid(
    kind: PropagatorKind,
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    n: i32,
    n_prime: i32,
    times: &[f64],
    policy: TruncationPolicy,
) -> Result<GreensResult> {
    let values = times
        .par_iter()
        .map(|&t| propagator(kind, params, correlators, n, n_prime, t, policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(GreensResult {
        kind,
        n,
        n_prime,
        times: times.to_vec(),
        values,
    })
}
