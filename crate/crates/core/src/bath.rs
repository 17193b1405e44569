//! Model parameters, bath spectra and boson mode correlators.
//!
//! The bath force couples to the particle-hole modes `b_q` of the bosonized
//! Fermi sea. Each mode enters the fermion correlators only through four
//! functions of time:
//!
//! ```text
//! P(t) = <b_q(t) b_q^+>    M(t) = <b_q^+(t) b_q>
//! A(t) = <b_q(t) b_q>      Abar(t) = <b_q^+(t) b_q^+>
//! ```
//!
//! Three evaluation modes are available: an exponentially damped oscillation
//! without thermal or squeezing contributions ([`CorrelatorMode::WeakCoupling`]),
//! an undamped thermal oscillator ([`CorrelatorMode::Free`]), and the exact
//! stationary correlators of the damped center-of-mass oscillator computed
//! from its response function ([`CorrelatorMode::ExactCm`]).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

/// Trap and particle parameters, in units with `hbar = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of fermions `N`; the Fermi level is `N - 1`.
    pub n_particles: usize,
    pub omega0: f64,
    /// Renormalized center-of-mass frequency.
    pub omega0_prime: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default)]
    pub temperature: f64,
}

fn default_mass() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(n_particles: usize, omega0: f64, omega0_prime: f64) -> Result<Self> {
        let p = Self {
            n_particles,
            omega0,
            omega0_prime,
            mass: 1.0,
            temperature: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 particles, got {}",
                self.n_particles
            )));
        }
        let positive = [
            ("omega0", self.omega0),
            ("omega0_prime", self.omega0_prime),
            ("mass", self.mass),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Index of the highest occupied level, `n_F = N - 1`.
    pub fn fermi_level(&self) -> i32 {
        self.n_particles as i32 - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Ohmic,
}

/// Power spectrum of the bath force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpectrum {
    pub kind: SpectrumKind,
    /// Friction coefficient `eta = m * gamma`.
    pub eta: f64,
    pub omega_c: f64,
}

impl BathSpectrum {
    pub fn ohmic(eta: f64, omega_c: f64) -> Result<Self> {
        let b = Self {
            kind: SpectrumKind::Ohmic,
            eta,
            omega_c,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        if !(self.omega_c.is_finite() && self.omega_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega_c must be positive, got {}",
                self.omega_c
            )));
        }
        Ok(())
    }

    /// Damping rate of a single particle, `gamma = eta / m`.
    pub fn gamma(&self, mass: f64) -> f64 {
        self.eta / mass
    }

    /// Zero-temperature spectrum `(eta w / pi) theta(w_c - w) theta(w)`.
    pub fn spectrum(&self, omega: f64) -> f64 {
        match self.kind {
            SpectrumKind::Ohmic => {
                if omega > 0.0 && omega < self.omega_c {
                    self.eta * omega / PI
                } else {
                    0.0
                }
            }
        }
    }

    /// Spectrum at temperature `t` via detailed balance: emission
    /// `S(w)(1 + n_B(w))` for `w > 0`, absorption `S(|w|) n_B(|w|)` for
    /// `w < 0`. Experimental; the rest of the crate works at `T = 0`.
    pub fn spectrum_at_temperature(&self, omega: f64, temperature: f64) -> f64 {
        let w = omega.abs();
        let nb = bose(w, temperature);
        if omega > 0.0 {
            self.spectrum(w) * (1.0 + nb)
        } else {
            self.spectrum(w) * nb
        }
    }

    /// Ratio `S(q w0) / S(w0)` for the bath kind.
    fn relative_spectrum(&self, q: usize) -> f64 {
        match self.kind {
            SpectrumKind::Ohmic => q as f64,
        }
    }
}

/// Zero-temperature Ohmic spectrum; free-function form of
/// [`BathSpectrum::spectrum`].
pub fn ohmic_spectrum(bath: &BathSpectrum, omega: f64) -> f64 {
    bath.spectrum(omega)
}

/// Bose occupation `1 / (e^{w/T} - 1)`, zero at `T = 0`.
pub fn bose(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 || omega <= 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

/// Amplitudes `f_q` with which the bath drives the boson modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingProfile {
    amplitudes: Vec<f64>,
}

impl CouplingProfile {
    /// Only the center-of-mass mode couples: `f_1 = 1`.
    pub fn center_of_mass() -> Self {
        Self {
            amplitudes: vec![1.0],
        }
    }

    /// `f_q = 1` for `q = 1..=q_max`.
    pub fn uniform(q_max: usize) -> Self {
        Self {
            amplitudes: vec![1.0; q_max],
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter("empty coupling profile".into()));
        }
        if let Some(f) = amplitudes.iter().find(|f| !f.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite amplitude {f}")));
        }
        Ok(Self { amplitudes })
    }

    pub fn q_max(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, q: usize) -> f64 {
        if q == 0 {
            0.0
        } else {
            self.amplitudes.get(q - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// True when no mode beyond `q = 1` is driven.
    pub fn is_center_of_mass_only(&self) -> bool {
        self.amplitudes.iter().skip(1).all(|&f| f == 0.0)
    }
}

/// Total decay rate of the center-of-mass mode, `Gamma = N gamma`.
pub fn total_decay_rate(params: &ModelParams, bath: &BathSpectrum) -> f64 {
    params.n_particles as f64 * bath.gamma(params.mass)
}

/// Weak-coupling decay rates `Gamma_q` for `q = 1..=q_max` (index `q - 1`).
///
/// With only the center-of-mass mode driven, `Gamma_1 = f_1^2 N gamma`. For a
/// generic profile, `Gamma_q = f_q^2 q^2 Gamma / 2 * S(q w0) / (q S(w0))`, which
/// is `f_q^2 q^2 Gamma / 2` for the Ohmic bath. Modes with `f_q = 0` have zero
/// rate and stay free.
pub fn weak_coupling_rates(
    params: &ModelParams,
    bath: &BathSpectrum,
    profile: &CouplingProfile,
) -> Result<Vec<f64>> {
    params.validate()?;
    bath.validate()?;
    let gamma_total = total_decay_rate(params, bath);
    let cm_only = profile.is_center_of_mass_only();
    (1..=profile.q_max())
        .map(|q| {
            let f = profile.amplitude(q);
            if f == 0.0 {
                return Ok(0.0);
            }
            let frequency = q as f64 * params.omega0;
            if frequency >= bath.omega_c {
                return Err(Error::CutoffViolation {
                    q,
                    frequency,
                    omega_c: bath.omega_c,
                });
            }
            if cm_only {
                Ok(f * f * gamma_total)
            } else {
                let qf = q as f64;
                let spectral = bath.relative_spectrum(q) / qf;
                Ok(f * f * (qf * qf) * gamma_total / 2.0 * spectral)
            }
        })
        .collect()
}

/// Renormalized frequency from the pole of the local Ohmic response,
/// `sqrt(w0^2 - Gamma^2 / 4)`. A convenience for choosing `omega0_prime`.
pub fn renormalized_frequency(params: &ModelParams, bath: &BathSpectrum) -> f64 {
    let g = total_decay_rate(params, bath);
    (params.omega0 * params.omega0 - 0.25 * g * g)
        .max(0.0)
        .sqrt()
}

/// Values of the four mode correlators at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeValues {
    pub p: Complex64,
    pub m: Complex64,
    pub a: Complex64,
    pub abar: Complex64,
}

impl ModeValues {
    pub fn is_weak(&self) -> bool {
        self.m == Complex64::new(0.0, 0.0)
            && self.a == Complex64::new(0.0, 0.0)
            && self.abar == Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelatorMode {
    WeakCoupling,
    Free,
    ExactCm,
}

/// Stationary correlators of the damped center-of-mass oscillator.
///
/// The coordinate coupled to the bath responds with
/// `chi(w) = 1 / (m_eff (w0^2 - w^2 - i w K(w)))`, where `K(w) = Gamma w_c /
/// (w_c - i w)` is an Ohmic friction kernel with a Drude roll-off at the bath
/// cutoff. `K` keeps `Re chi^{-1}(0) = w0^2` (the trap frequency is the
/// renormalized one) and makes every moment of `Im chi` needed below finite.
/// The mass drops out of the boson correlators.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCm {
    pub omega0: f64,
    pub rate: f64,
    pub omega_c: f64,
    pub temperature: f64,
    pub tolerance: f64,
}

impl ExactCm {
    pub fn new(params: &ModelParams, bath: &BathSpectrum) -> Self {
        Self {
            omega0: params.omega0,
            rate: total_decay_rate(params, bath),
            omega_c: bath.omega_c,
            temperature: params.temperature,
            tolerance: 1e-8,
        }
    }

    /// `(2 m_eff w0 / pi) Im chi(w)`.
    fn weight(&self, w: f64) -> f64 {
        let (w0, g, wc) = (self.omega0, self.rate, self.omega_c);
        let r = wc * wc / (wc * wc + w * w);
        let re = w0 * w0 - w * w + g * w * w * r / wc;
        let im = -g * w * r;
        (2.0 * w0 / PI) * (-im) / (re * re + im * im)
    }

    fn coth_half(&self, w: f64) -> f64 {
        if self.temperature <= 0.0 {
            1.0
        } else {
            1.0 / (w / (2.0 * self.temperature)).tanh()
        }
    }

    /// Dimensionless moments `c0 = 2 m w0 C`, `c1 = 2 m C'`, `c2 = 2 m C'' / w0`
    /// of the coordinate autocorrelation `C(t) = <Q(t) Q(0)>`.
    fn moments(&self, t: f64) -> Result<[Complex64; 3]> {
        if self.temperature <= 0.0 {
            self.moments_zero_temperature(t)
        } else {
            self.moments_real_axis(t)
        }
    }

    /// Moments by direct quadrature along the real frequency axis.
    fn moments_real_axis(&self, t: f64) -> Result<[Complex64; 3]> {
        let w0 = self.omega0;
        let integrand = |w: f64| {
            if w <= 0.0 {
                return [Complex64::new(0.0, 0.0); 3];
            }
            let wt = self.weight(w);
            let ch = self.coth_half(w);
            let (s, c) = (w * t).sin_cos();
            let x = w / w0;
            [
                Complex64::new(wt * ch * c, -wt * s),
                Complex64::new(-wt * x * ch * s, -wt * x * c),
                Complex64::new(-wt * x * x * ch * c, wt * x * x * s),
            ]
        };
        let g = self.rate.max(1e-6 * w0);
        let mut breaks = vec![
            (w0 - 30.0 * g).max(0.25 * w0),
            (w0 - 3.0 * g).max(0.5 * w0),
            w0,
            w0 + 3.0 * g,
            w0 + 30.0 * g,
            2.0 * w0,
            self.omega_c,
            10.0 * self.omega_c.max(w0),
        ];
        breaks.sort_by(f64::total_cmp);
        let tol = Tolerance {
            rel: self.tolerance,
            abs: 1e-3 * self.tolerance,
            max_intervals: 400_000,
        };
        quad::integrate_to_infinity(integrand, 0.0, &breaks, tol)
    }

    /// Denominator of `chi(w) = (w_c - i w) / D(w)`,
    /// `D(w) = (w0^2 - w^2)(w_c - i w) - i Gamma w_c w`, for complex `w`.
    fn d(&self, w: Complex64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let (w0, g, wc) = (self.omega0, self.rate, self.omega_c);
        (w0 * w0 - w * w) * (wc - i * w) - i * g * wc * w
    }

    /// Roots of `D`, i.e. the poles of `chi`, by Durand-Kerner iteration on
    /// the monic cubic `w^3 + i w_c w^2 - (w0^2 + Gamma w_c) w - i w0^2 w_c`.
    fn poles(&self) -> [Complex64; 3] {
        let i = Complex64::new(0.0, 1.0);
        let (w0, g, wc) = (self.omega0, self.rate, self.omega_c);
        let coeffs = [
            i * wc,
            Complex64::new(-(w0 * w0 + g * wc), 0.0),
            -i * w0 * w0 * wc,
        ];
        let poly = |w: Complex64| ((w + coeffs[0]) * w + coeffs[1]) * w + coeffs[2];
        let seed = Complex64::new(0.4, 0.9);
        let scale = w0.max(wc);
        let mut r = [
            seed * scale,
            seed * seed * scale,
            seed * seed * seed * scale,
        ];
        for _ in 0..500 {
            let mut change: f64 = 0.0;
            for k in 0..3 {
                let mut den = Complex64::new(1.0, 0.0);
                for j in 0..3 {
                    if j != k {
                        den *= r[k] - r[j];
                    }
                }
                let step = poly(r[k]) / den;
                r[k] -= step;
                change = change.max(step.norm());
            }
            if change < 1e-15 * scale {
                break;
            }
        }
        r
    }

    /// Zero-temperature moments from `F_k(t) = int_0^inf W(w) w^k e^{-i w t} dw`
    /// with `W = (2 w0 / pi) Im chi`. For `t > 0` the contour is rotated onto
    /// the ray `w = y e^{-i theta}`, where the integrand decays without
    /// oscillating; the damped pole of `chi` swept over contributes a
    /// residue. Negative times follow from `F_k(-t) = conj F_k(t)`.
    fn moments_zero_temperature(&self, t: f64) -> Result<[Complex64; 3]> {
        if t < 0.0 {
            // c0 = F0, c1 = -i F1 / w0, c2 = -F2 / w0^2
            let c = self.moments_zero_temperature(-t)?;
            return Ok([c[0].conj(), -c[1].conj(), c[2].conj()]);
        }
        let i = Complex64::new(0.0, 1.0);
        let w0 = self.omega0;
        let theta = 0.5 * PI - 0.25;
        let dir = Complex64::from_polar(1.0, -theta);
        // W(w) continued off the real axis: (chi(w) - chi(-w)) / (2i), with the
        // difference written out as 2 i Gamma w_c^2 w / (D(w) D(-w))
        let (g, wc) = (self.rate, self.omega_c);
        let weight = |w: Complex64| (2.0 * w0 / PI) * g * wc * wc * w / (self.d(w) * self.d(-w));
        let integrand = |y: f64| {
            let w = dir * y;
            let base = weight(w) * (-i * w * t).exp() * dir;
            [base, base * w, base * w * w]
        };
        let breaks = [
            0.5 * w0,
            w0,
            2.0 * w0,
            self.omega_c,
            10.0 * self.omega_c.max(w0),
        ];
        let tol = Tolerance {
            rel: 1e-3 * self.tolerance,
            abs: 1e-6 * self.tolerance,
            max_intervals: 50_000,
        };
        let mut f = quad::integrate_to_infinity(integrand, 0.0, &breaks, tol)?;

        // poles inside the sector -theta < arg w < 0
        for p in self.poles() {
            let arg = p.arg();
            if !(arg < 0.0 && arg > -theta && p.re > 0.0) {
                continue;
            }
            let d_prime = -2.0 * p * (wc - i * p) - i * (w0 * w0 - p * p) - i * g * wc;
            let res_chi = (wc - i * p) / d_prime;
            let res = (2.0 * w0 / PI) * res_chi / (2.0 * i) * (-i * p * t).exp();
            let two_pi_i = Complex64::new(0.0, 2.0 * PI);
            f[0] -= two_pi_i * res;
            f[1] -= two_pi_i * res * p;
            f[2] -= two_pi_i * res * p * p;
        }
        Ok([f[0], -i * f[1] / w0, -f[2] / (w0 * w0)])
    }

    pub fn eval(&self, t: f64) -> Result<ModeValues> {
        let [c0, c1, c2] = self.moments(t)?;
        let i = Complex64::new(0.0, 1.0);
        Ok(ModeValues {
            p: c0 / 4.0 + i * c1 / 2.0 - c2 / 4.0,
            m: c0 / 4.0 - i * c1 / 2.0 - c2 / 4.0,
            a: (c0 + c2) / 4.0,
            abar: (c0 + c2) / 4.0,
        })
    }
}

/// Exact correlators of the damped center-of-mass mode at time `t`.
pub fn exact_cm_correlator(
    params: &ModelParams,
    bath: &BathSpectrum,
    t: f64,
) -> Result<ModeValues> {
    ExactCm::new(params, bath).eval(t)
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    WeakCoupling { frequency: f64, rate: f64 },
    Free { frequency: f64, temperature: f64 },
    ExactCm(ExactCm),
}

/// Time-dependent correlators of boson mode `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCorrelator {
    q: usize,
    kind: Kind,
}

impl ModeCorrelator {
    /// `P(t) = e^{-i w t - rate |t| / 2}`, `M = A = Abar = 0`.
    pub fn weak_coupling(q: usize, frequency: f64, rate: f64) -> Self {
        Self {
            q,
            kind: Kind::WeakCoupling { frequency, rate },
        }
    }

    /// Undamped oscillator at frequency `q w0` and temperature `T`.
    pub fn free(q: usize, omega0: f64, temperature: f64) -> Self {
        Self {
            q,
            kind: Kind::Free {
                frequency: q as f64 * omega0,
                temperature,
            },
        }
    }

    pub fn exact_cm(params: &ModelParams, bath: &BathSpectrum) -> Self {
        Self {
            q: 1,
            kind: Kind::ExactCm(ExactCm::new(params, bath)),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn mode(&self) -> CorrelatorMode {
        match self.kind {
            Kind::WeakCoupling { .. } => CorrelatorMode::WeakCoupling,
            Kind::Free { .. } => CorrelatorMode::Free,
            Kind::ExactCm(_) => CorrelatorMode::ExactCm,
        }
    }

    /// Correlators at time `t` (any sign).
    pub fn eval(&self, t: f64) -> Result<ModeValues> {
        let zero = Complex64::new(0.0, 0.0);
        match &self.kind {
            Kind::WeakCoupling { frequency, rate } => Ok(ModeValues {
                p: Complex64::from_polar((-0.5 * rate * t.abs()).exp(), -frequency * t),
                m: zero,
                a: zero,
                abar: zero,
            }),
            Kind::Free {
                frequency,
                temperature,
            } => {
                let nb = bose(*frequency, *temperature);
                let phase = Complex64::from_polar(1.0, -frequency * t);
                Ok(ModeValues {
                    p: phase * (1.0 + nb),
                    m: phase.conj() * nb,
                    a: zero,
                    abar: zero,
                })
            }
            Kind::ExactCm(cm) => cm.eval(t),
        }
    }
}

/// Correlator of mode `q` in the given evaluation mode. Weak coupling uses
/// frequency `q * omega0_prime`; the exact mode only exists for `q = 1`.
pub fn mode_correlator(
    params: &ModelParams,
    bath: Option<&BathSpectrum>,
    q: usize,
    rate: f64,
    mode: CorrelatorMode,
) -> Result<ModeCorrelator> {
    if q == 0 {
        return Err(Error::InvalidParameter("mode index q starts at 1".into()));
    }
    match mode {
        CorrelatorMode::WeakCoupling => Ok(ModeCorrelator::weak_coupling(
            q,
            q as f64 * params.omega0_prime,
            rate,
        )),
        CorrelatorMode::Free => Ok(ModeCorrelator::free(q, params.omega0, params.temperature)),
        CorrelatorMode::ExactCm => {
            if q != 1 {
                return Err(Error::Configuration(format!(
                    "exact correlators exist only for the center-of-mass mode, not q={q}"
                )));
            }
            let bath = bath.ok_or_else(|| {
                Error::Configuration("exact center-of-mass correlators need a bath".into())
            })?;
            Ok(ModeCorrelator::exact_cm(params, bath))
        }
    }
}

/// Weak-coupling correlators for every driven mode of a profile. Mode `q`
/// oscillates at `q * omega0_prime` unless `frequencies` overrides it.
pub fn weak_coupling_correlators(
    params: &ModelParams,
    bath: &BathSpectrum,
    profile: &CouplingProfile,
    frequencies: Option<&[f64]>,
) -> Result<Vec<ModeCorrelator>> {
    let rates = weak_coupling_rates(params, bath, profile)?;
    Ok(rates
        .iter()
        .enumerate()
        .filter(|(q, _)| profile.amplitude(q + 1) != 0.0)
        .map(|(i, &rate)| {
            let q = i + 1;
            let freq = frequencies
                .and_then(|f| f.get(i).copied())
                .unwrap_or(q as f64 * params.omega0_prime);
            ModeCorrelator::weak_coupling(q, freq, rate)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(n: usize) -> ModelParams {
        ModelParams::new(n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(1, 1.0, 1.0).is_err());
        assert!(ModelParams::new(4, 0.0, 1.0).is_err());
        assert!(ModelParams::new(4, 1.0, -1.0).is_err());
        let mut p = params(4);
        p.temperature = -0.1;
        assert!(p.validate().is_err());
        assert_eq!(params(31).fermi_level(), 30);
        assert!(BathSpectrum::ohmic(-1.0, 1.0).is_err());
        assert!(BathSpectrum::ohmic(1.0, 0.0).is_err());
    }

    #[test]
    fn ohmic_spectrum_examples() {
        let bath = BathSpectrum::ohmic(1.0, 10.0).unwrap();
        assert_eq!(ohmic_spectrum(&bath, -1.0), 0.0);
        assert_eq!(ohmic_spectrum(&bath, 20.0), 0.0);
        assert_abs_diff_eq!(ohmic_spectrum(&bath, PI), 1.0, epsilon = 1e-15);
        assert_eq!(bath.spectrum_at_temperature(-1.0, 0.0), 0.0);
        let t = 0.5;
        let ratio = bath.spectrum_at_temperature(1.0, t) / bath.spectrum_at_temperature(-1.0, t);
        assert_abs_diff_eq!(ratio, (1.0 / t).exp(), epsilon = 1e-12);
    }

    #[test]
    fn rate_anchors() {
        let p = params(100);
        let bath = BathSpectrum::ohmic(0.01, 50.0).unwrap();
        let r = weak_coupling_rates(&p, &bath, &CouplingProfile::center_of_mass()).unwrap();
        assert_eq!(r, vec![1.0]);

        let gamma = total_decay_rate(&p, &bath);
        let r = weak_coupling_rates(&p, &bath, &CouplingProfile::uniform(5)).unwrap();
        for (i, rq) in r.iter().enumerate() {
            let q = (i + 1) as f64;
            assert_eq!(*rq, q * q * gamma / 2.0);
        }
        assert_eq!(r[2], 9.0 * gamma / 2.0);

        let prof = CouplingProfile::from_amplitudes(vec![1.0, 0.0, 0.5]).unwrap();
        let r = weak_coupling_rates(&p, &bath, &prof).unwrap();
        assert_eq!(r[1], 0.0);
        assert_abs_diff_eq!(r[2], 0.25 * 9.0 * gamma / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn cutoff_is_enforced() {
        let p = params(10);
        let bath = BathSpectrum::ohmic(0.01, 3.5).unwrap();
        let err = weak_coupling_rates(&p, &bath, &CouplingProfile::uniform(4)).unwrap_err();
        assert!(matches!(err, Error::CutoffViolation { q: 4, .. }));
    }

    #[test]
    fn weak_and_free_correlators() {
        let c = ModeCorrelator::weak_coupling(1, 1.0, 0.2);
        let v = c.eval(0.0).unwrap();
        assert_eq!(v.p, Complex64::new(1.0, 0.0));
        assert!(v.is_weak());
        let t = 2.0 * 2f64.ln() / 0.2;
        assert_abs_diff_eq!(c.eval(t).unwrap().p.norm(), 0.5, epsilon = 1e-14);
        // P(-t) = conj P(t)
        let (a, b) = (c.eval(3.3).unwrap().p, c.eval(-3.3).unwrap().p);
        assert_abs_diff_eq!((a - b.conj()).norm(), 0.0, epsilon = 1e-15);

        let f = ModeCorrelator::free(2, 1.0, 0.0);
        let v = f.eval(PI).unwrap();
        assert_abs_diff_eq!(
            (v.p - Complex64::new(1.0, 0.0)).norm(),
            0.0,
            epsilon = 1e-14
        );
        assert!(v.is_weak());
        for t in [0.0, 0.7, -2.0, 40.0] {
            assert_abs_diff_eq!(f.eval(t).unwrap().p.norm(), 1.0, epsilon = 1e-14);
        }
        let hot = ModeCorrelator::free(1, 1.0, 0.7);
        let v0 = hot.eval(0.0).unwrap();
        assert_abs_diff_eq!((v0.p - v0.m).re, 1.0, epsilon = 1e-14);
        let (m1, m2) = (hot.eval(1.1).unwrap().m, hot.eval(-1.1).unwrap().m);
        assert_abs_diff_eq!((m1 - m2.conj()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mode_correlator_dispatch() {
        let p = ModelParams::new(10, 1.0, 0.9).unwrap();
        let c = mode_correlator(&p, None, 2, 0.1, CorrelatorMode::WeakCoupling).unwrap();
        assert_abs_diff_eq!(c.eval(1.0).unwrap().p.arg(), -1.8, epsilon = 1e-14);
        assert!(mode_correlator(&p, None, 1, 0.1, CorrelatorMode::ExactCm).is_err());
        let bath = BathSpectrum::ohmic(0.001, 10.0).unwrap();
        assert!(mode_correlator(&p, Some(&bath), 2, 0.1, CorrelatorMode::ExactCm).is_err());
        assert_eq!(
            mode_correlator(&p, Some(&bath), 1, 0.1, CorrelatorMode::ExactCm)
                .unwrap()
                .mode(),
            CorrelatorMode::ExactCm
        );
    }

    #[test]
    fn exact_cm_commutator_and_symmetry() {
        let p = params(10);
        let bath = BathSpectrum::ohmic(0.005, 10.0).unwrap();
        let v = exact_cm_correlator(&p, &bath, 0.0).unwrap();
        assert_abs_diff_eq!((v.p - v.m).re, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!((v.p - v.m).im, 0.0, epsilon = 1e-7);
        // ground-state squeezing of the damped oscillator is small but nonzero
        assert!(v.m.re > 0.0 && v.m.re < 0.05);
        let (a, b) = (
            exact_cm_correlator(&p, &bath, 2.5).unwrap(),
            exact_cm_correlator(&p, &bath, -2.5).unwrap(),
        );
        assert_abs_diff_eq!((a.p - b.p.conj()).norm(), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!((a.m - b.m.conj()).norm(), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!((a.abar - b.a.conj()).norm(), 0.0, epsilon = 1e-7);
    }

    #[test]
    fn rotated_contour_matches_real_axis() {
        let p = params(10);
        let bath = BathSpectrum::ohmic(0.01, 8.0).unwrap();
        let cm = ExactCm::new(&p, &bath);
        for t in [0.0, 0.7, -2.0, 9.0] {
            let a = cm.moments_zero_temperature(t).unwrap();
            let b = cm.moments_real_axis(t).unwrap();
            for k in 0..3 {
                assert!(
                    (a[k] - b[k]).norm() < 1e-7,
                    "t={t} k={k}: {} vs {}",
                    a[k],
                    b[k]
                );
            }
        }
    }

    #[test]
    fn exact_cm_free_limit() {
        let p = params(10);
        let bath = BathSpectrum::ohmic(1e-6, 10.0).unwrap();
        for t in [0.0, 1.0, 4.0] {
            let v = exact_cm_correlator(&p, &bath, t).unwrap();
            assert!((v.p - Complex64::from_polar(1.0, -t)).norm() < 1e-3);
            assert!(v.m.norm() < 1e-3 && v.a.norm() < 1e-3);
        }
    }

    #[test]
    fn exact_cm_envelope_matches_weak_coupling() {
        // Gamma = N gamma = 0.04 w0, wide cutoff
        let p = params(20);
        let bath = BathSpectrum::ohmic(0.002, 40.0).unwrap();
        let g = total_decay_rate(&p, &bath);
        for k in 0..=6 {
            let t = 0.5 * k as f64 / g;
            let v = exact_cm_correlator(&p, &bath, t).unwrap();
            let env = (-0.5 * g * t).exp();
            assert!(
                (v.p.norm() / env - 1.0).abs() < 0.05,
                "Gamma t = {}: {} vs {}",
                g * t,
                v.p.norm(),
                env
            );
        }
    }

    #[test]
    fn generic_correlators_skip_undriven_modes() {
        let p = ModelParams::new(10, 1.0, 0.95).unwrap();
        let bath = BathSpectrum::ohmic(0.01, 20.0).unwrap();
        let prof = CouplingProfile::from_amplitudes(vec![1.0, 0.0, 1.0]).unwrap();
        let c = weak_coupling_correlators(&p, &bath, &prof, None).unwrap();
        assert_eq!(c.iter().map(|c| c.q()).collect::<Vec<_>>(), vec![1, 3]);
        let c = weak_coupling_correlators(&p, &bath, &prof, Some(&[1.0, 2.0, 2.5])).unwrap();
        assert_abs_diff_eq!(c[1].eval(1.0).unwrap().p.arg(), -2.5, epsilon = 1e-14);
    }
}
