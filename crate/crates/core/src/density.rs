//! Reduced single-particle density matrix after a particle is injected above
//! the Fermi sea, from the four-point vertex expectation, plus the closed
//! forms valid at high excitation energy.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{
    weak_coupling_correlators, BathSpectrum, CouplingProfile, ModeCorrelator, ModelParams,
};
use crate::error::{Error, Result};
use crate::greens::{
    expectation_window, gaussian_vertex_expectation, DecayFunction, Field, TruncationPolicy,
    Vertex, WINDOW_CHECK_TOL,
};

/// Default cap on `m~1 + m~2` in the heating sum.
pub const HEAT_TRUNCATION: usize = 40;

/// The last shell of the heating sum must contribute less than this.
pub const HEAT_SHELL_TOL: f64 = 1e-12;

const NORM_TOL: f64 = 1e-10;

/// `sum_{n0} Psi_{n0} c_{n0}^+ |FS>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionState {
    amplitudes: Vec<(i32, Complex64)>,
}

impl InjectionState {
    pub fn new(amplitudes: Vec<(i32, Complex64)>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter(
                "injection state has no levels".into(),
            ));
        }
        for (i, &(n, a)) in amplitudes.iter().enumerate() {
            if n < 0 {
                return Err(Error::InvalidParameter(format!("negative level {n}")));
            }
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "amplitude of level {n} is not finite"
                )));
            }
            if amplitudes[..i].iter().any(|&(m, _)| m == n) {
                return Err(Error::InvalidParameter(format!("level {n} listed twice")));
            }
        }
        let norm: f64 = amplitudes.iter().map(|(_, a)| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "amplitudes have squared norm {norm}, expected 1"
            )));
        }
        let mut amplitudes = amplitudes;
        amplitudes.sort_by_key(|&(n, _)| n);
        Ok(Self { amplitudes })
    }

    pub fn single(n0: i32) -> Result<Self> {
        Self::new(vec![(n0, Complex64::new(1.0, 0.0))])
    }

    /// Equal real amplitudes `1 / sqrt(k)` on each of `levels`.
    pub fn equal_superposition(levels: &[i32]) -> Result<Self> {
        let a = Complex64::new(1.0 / (levels.len() as f64).sqrt(), 0.0);
        Self::new(levels.iter().map(|&n| (n, a)).collect())
    }

    pub fn amplitudes(&self) -> &[(i32, Complex64)] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n0: i32) -> Complex64 {
        self.amplitudes
            .iter()
            .find(|&&(n, _)| n == n0)
            .map_or(Complex64::new(0.0, 0.0), |&(_, a)| a)
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> + '_ {
        self.amplitudes.iter().map(|&(n, _)| n)
    }

    pub fn min_level(&self) -> i32 {
        self.amplitudes[0].0
    }

    pub fn max_level(&self) -> i32 {
        self.amplitudes[self.amplitudes.len() - 1].0
    }

    /// Injected levels must be empty in the initial sea.
    pub fn check_empty(&self, params: &ModelParams) -> Result<()> {
        let nf = params.fermi_level();
        if self.min_level() <= nf {
            return Err(Error::Domain(format!(
                "level {} is occupied (Fermi level {nf})",
                self.min_level()
            )));
        }
        Ok(())
    }
}

/// Inclusive range of levels `[lo, hi]` kept in a density matrix. Levels
/// below `lo` are taken as fully occupied, levels above `hi` as empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelWindow {
    pub lo: i32,
    pub hi: i32,
}

impl LevelWindow {
    pub fn new(lo: i32, hi: i32) -> Result<Self> {
        if lo < 0 || hi < lo {
            return Err(Error::InvalidParameter(format!(
                "bad level window {lo}:{hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Every level that can change: the bath only absorbs energy, so
    /// particles never rise above the highest injected level and holes never
    /// sink deeper than the injected excitation energy below the Fermi
    /// level. `slack` adds margin on both sides.
    pub fn covering(params: &ModelParams, state: &InjectionState, slack: i32) -> Self {
        let nf = params.fermi_level();
        let excitation = (state.max_level() - nf).max(1);
        Self {
            lo: (nf + 1 - excitation - slack).max(0),
            hi: state.max_level() + slack,
        }
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, n: i32) -> bool {
        (self.lo..=self.hi).contains(&n)
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        self.lo..=self.hi
    }
}

/// `rho_{nn'} = <c_{n'}^+ c_n>` on a level window at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub window: LevelWindow,
    pub time: f64,
    pub matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn element(&self, n: i32, n_prime: i32) -> Option<Complex64> {
        if self.window.contains(n) && self.window.contains(n_prime) {
            Some(
                self.matrix[(
                    (n - self.window.lo) as usize,
                    (n_prime - self.window.lo) as usize,
                )],
            )
        } else {
            None
        }
    }

    /// Sum of the diagonal inside the window.
    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Total particle number, counting the filled levels below the window.
    pub fn particle_count(&self) -> f64 {
        self.trace().re + self.window.lo as f64
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.window.len())
            .map(|i| self.matrix[(i, i)].re)
            .collect()
    }

    /// `max |rho_{nn'} - conj(rho_{n'n})|`
    pub fn hermiticity_residual(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

// Series variables: X (0), X' (1), Y (2), Y' (3) for
// <psi(y', 0) psi^+(x', t) psi(x, t) psi^+(y, 0)>.
const X: usize = 0;
const XP: usize = 1;
const Y: usize = 2;
const YP: usize = 3;

fn four_point_vertices(t: f64) -> [Vertex; 4] {
    [
        Vertex::new(YP, 0.0, Field::Psi, 1),
        Vertex::new(XP, t, Field::PsiDagger, 2),
        Vertex::new(X, t, Field::Psi, 3),
        Vertex::new(Y, 0.0, Field::PsiDagger, 4),
    ]
}

fn check_inputs(params: &ModelParams, state: &InjectionState, window: &LevelWindow) -> Result<()> {
    params.validate()?;
    state.check_empty(params)?;
    if window.lo < 0 || window.hi < window.lo {
        return Err(Error::InvalidParameter(format!(
            "bad level window {}:{}",
            window.lo, window.hi
        )));
    }
    if let Some(n) = state.levels().find(|&n| !window.contains(n)) {
        return Err(Error::Configuration(format!(
            "window {}:{} does not cover injected level {n}",
            window.lo, window.hi
        )));
    }
    Ok(())
}

fn assemble(
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    state: &InjectionState,
    t: f64,
    window: &LevelWindow,
    slack: i32,
    widen: bool,
) -> Result<DMatrix<Complex64>> {
    let vertices = four_point_vertices(t);
    let corners = [
        vec![window.lo, -window.lo, -state.min_level(), state.min_level()],
        vec![window.hi, -window.hi, -state.max_level(), state.max_level()],
    ];
    let mut sw = expectation_window(params, &vertices, 4, &corners, slack)?;
    if widen {
        sw = sw.widened(0.5)?;
    }
    let series = gaussian_vertex_expectation(params, &vertices, correlators, &sw)?;
    let amps = state.amplitudes();
    let dim = window.len();
    let mut rho = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (i, n) in window.levels().enumerate() {
        for (j, np) in window.levels().enumerate() {
            let mut v = Complex64::new(0.0, 0.0);
            for &(n0, a0) in amps {
                for &(n0p, a0p) in amps {
                    v += a0 * a0p.conj() * series.coefficient(&[n, -np, -n0, n0p])?;
                }
            }
            rho[(i, j)] = v;
        }
    }
    Ok(rho)
}

/// Four-point function `<c_{n0'} c_{n'}^+(t) c_n(t) c_{n0}^+>` in the sea.
#[allow(clippy::too_many_arguments)]
pub fn four_point_function(
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    n: i32,
    n_prime: i32,
    n0: i32,
    n0_prime: i32,
    t: f64,
    policy: TruncationPolicy,
) -> Result<Complex64> {
    let v = crate::greens::expectation_coefficients(
        params,
        &four_point_vertices(t),
        correlators,
        4,
        &[vec![n, -n_prime, -n0, n0_prime]],
        policy,
    )?;
    Ok(v[0])
}

/// Density matrix on `window` at time `t`, from the full four-point
/// expectation with the given mode correlators.
pub fn evolve_density(
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    state: &InjectionState,
    t: f64,
    window: &LevelWindow,
    policy: TruncationPolicy,
) -> Result<DensityMatrix> {
    check_inputs(params, state, window)?;
    let rho = assemble(params, correlators, state, t, window, policy.slack, false)?;
    if policy.verify {
        let wide = assemble(params, correlators, state, t, window, policy.slack, true)?;
        let worst = (&wide - &rho).iter().map(|d| d.norm()).fold(0.0, f64::max);
        if worst >= WINDOW_CHECK_TOL {
            return Err(Error::Truncation(format!(
                "density matrix moved by {worst:e} when widening the series window at t={t}"
            )));
        }
    }
    Ok(DensityMatrix {
        window: *window,
        time: t,
        matrix: rho,
    })
}

/// [`evolve_density`] on a time grid; results keep the grid order.
pub fn evolve_density_series(
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    state: &InjectionState,
    times: &[f64],
    window: &LevelWindow,
    policy: TruncationPolicy,
) -> Result<Vec<DensityMatrix>> {
    times
        .par_iter()
        .map(|&t| evolve_density(params, correlators, state, t, window, policy))
        .collect()
}

/// Weak-coupling correlators for every driven mode of `profile`, checking
/// that the profile reaches the injected excitation.
pub fn generic_correlators(
    params: &ModelParams,
    bath: &BathSpectrum,
    profile: &CouplingProfile,
    state: &InjectionState,
) -> Result<Vec<ModeCorrelator>> {
    let excitation = (state.max_level() - params.fermi_level()).max(0) as usize;
    if profile.q_max() < excitation {
        return Err(Error::Configuration(format!(
            "coupling profile stops at q={} but the injected excitation is {excitation} quanta",
            profile.q_max()
        )));
    }
    weak_coupling_correlators(params, bath, profile, None)
}

/// Density matrix when the bath drives every mode `q <= q_max` of the
/// profile, each as an independently damped oscillator.
pub fn evolve_density_generic(
    params: &ModelParams,
    bath: &BathSpectrum,
    profile: &CouplingProfile,
    state: &InjectionState,
    t: f64,
    window: &LevelWindow,
    policy: TruncationPolicy,
) -> Result<DensityMatrix> {
    let correlators = generic_correlators(params, bath, profile, state)?;
    evolve_density(params, &correlators, state, t, window, policy)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Probability that `m` quanta have gone to the bath,
/// `((-1)^m / m!) (nu + nu*)^m e^{nu + nu*}`.
pub fn rho_decay(decay: &DecayFunction, m: i64, t: f64) -> Result<f64> {
    if m < 0 {
        return Err(Error::Domain(format!("negative quantum number m={m}")));
    }
    let s = -2.0 * decay.nu(t).re;
    let m = m as usize;
    if m == 0 {
        return Ok((-s).exp());
    }
    Ok(s.powi(m as i32) * (-s).exp() / factorial(m))
}

/// Heating of the sea around the Fermi level, for absolute levels `n`, `n'`.
///
/// With offsets `a = n - n_F - 1`, `b = n' - n_F - 1` this is
/// `nu^{a-b} sum |nu|^{2s} (-1)^{m2 + m~2} / (m1! m2! m~1! m~2!)` over
/// `m~1 >= max(0, b+1)`, `m~2 >= 0`, `max(0, m~2 + a + 1) <= m1 <= a - b + s`,
/// `m2 = s - m1 + a - b`, with `s = m~1 + m~2 <= truncation`.
pub fn rho_heat(
    params: &ModelParams,
    decay: &DecayFunction,
    n: i32,
    n_prime: i32,
    t: f64,
    truncation: usize,
) -> Result<Complex64> {
    let nf = params.fermi_level();
    let a = (n - nf - 1) as i64;
    let b = (n_prime - nf - 1) as i64;
    let nu = decay.nu(t);
    let d = a - b;
    let mut total = Complex64::new(0.0, 0.0);
    let mut last_shell = 0.0;
    for s in 0..=truncation as i64 {
        let p = d + s;
        if p < 0 {
            continue;
        }
        // nu^{a-b} |nu|^{2s} = nu^{a-b+s} conj(nu)^s keeps the powers non-negative
        let weight = nu.powu(p as u32) * nu.conj().powu(s as u32);
        let mut shell = 0.0;
        for mt1 in (b + 1).max(0)..=s {
            let mt2 = s - mt1;
            for m1 in (mt2 + a + 1).max(0)..=p {
                let m2 = p - m1;
                let sign = if (m2 + mt2) % 2 == 0 { 1.0 } else { -1.0 };
                shell += sign
                    / (factorial(m1 as usize)
                        * factorial(m2 as usize)
                        * factorial(mt1 as usize)
                        * factorial(mt2 as usize));
            }
        }
        let contribution = weight * shell;
        total += contribution;
        last_shell = contribution.norm();
    }
    if last_shell >= HEAT_SHELL_TOL {
        return Err(Error::Truncation(format!(
            "heating sum shell {truncation} still contributes {last_shell:e}"
        )));
    }
    Ok(total)
}

/// Closed-form density matrix for high excitation,
/// `sum Psi_{n0} Psi*_{n0'} e^{i w0 (n0' - n0) t} delta_{n0-n, n0'-n'}
/// [rho_decay(n0 - n) + rho_heat(n, n')]`.
pub fn rho_limiting(
    params: &ModelParams,
    decay: &DecayFunction,
    state: &InjectionState,
    t: f64,
    window: &LevelWindow,
) -> Result<DensityMatrix> {
    params.validate()?;
    let dim = window.len();
    let mut rho = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    let amps = state.amplitudes();
    let mut heat = std::collections::HashMap::new();
    for (i, n) in window.levels().enumerate() {
        for (j, np) in window.levels().enumerate() {
            let mut v = Complex64::new(0.0, 0.0);
            for &(n0, a0) in amps {
                for &(n0p, a0p) in amps {
                    if n0 - n != n0p - np {
                        continue;
                    }
                    let m = (n0 - n) as i64;
                    let dec = if m < 0 { 0.0 } else { rho_decay(decay, m, t)? };
                    let h = match heat.get(&(n, np)) {
                        Some(&h) => h,
                        None => {
                            let h = rho_heat(params, decay, n, np, t, HEAT_TRUNCATION)?;
                            heat.insert((n, np), h);
                            h
                        }
                    };
                    let phase = Complex64::from_polar(1.0, params.omega0 * (n0p - n0) as f64 * t);
                    v += a0 * a0p.conj() * phase * (h + dec);
                }
            }
            rho[(i, j)] = v;
        }
    }
    Ok(DensityMatrix {
        window: *window,
        time: t,
        matrix: rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn weak(params: &ModelParams, rate: f64) -> Vec<ModeCorrelator> {
        vec![ModeCorrelator::weak_coupling(1, params.omega0_prime, rate)]
    }

    #[test]
    fn injection_validation() {
        assert!(InjectionState::new(vec![]).is_err());
        assert!(InjectionState::new(vec![(5, Complex64::new(0.5, 0.0))]).is_err());
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!(InjectionState::new(vec![(5, a), (5, a)]).is_err());
        let s = InjectionState::new(vec![(9, a), (7, a)]).unwrap();
        assert_eq!(s.min_level(), 7);
        assert_eq!(s.max_level(), 9);
        let p = ModelParams::new(7, 1.0, 1.0).unwrap();
        assert!(s.check_empty(&p).is_ok());
        let p = ModelParams::new(8, 1.0, 1.0).unwrap();
        assert!(matches!(s.check_empty(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn initial_state_readoff() {
        let p = ModelParams::new(10, 1.0, 0.8).unwrap();
        let a = Complex64::new(0.6, 0.0);
        let b = Complex64::new(0.0, 0.8);
        let state = InjectionState::new(vec![(11, a), (13, b)]).unwrap();
        let w = LevelWindow::new(4, 15).unwrap();
        let rho = evolve_density(
            &p,
            &weak(&p, 0.1),
            &state,
            0.0,
            &w,
            TruncationPolicy::verified(),
        )
        .unwrap();
        for n in w.levels() {
            for np in w.levels() {
                let mut e = state.amplitude(n) * state.amplitude(np).conj();
                if n == np && n <= 9 {
                    e += 1.0;
                }
                assert_abs_diff_eq!(
                    (rho.element(n, np).unwrap() - e).norm(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
        assert_abs_diff_eq!(rho.particle_count(), 11.0, epsilon = 1e-12);
    }

    #[test]
    fn free_phase_evolution() {
        let p = ModelParams::new(8, 1.0, 1.0).unwrap();
        let state = InjectionState::equal_superposition(&[9, 11]).unwrap();
        let w = LevelWindow::covering(&p, &state, 1);
        let t = 2.3;
        let r0 = evolve_density(
            &p,
            &weak(&p, 0.0),
            &state,
            0.0,
            &w,
            TruncationPolicy::default(),
        )
        .unwrap();
        let rt = evolve_density(
            &p,
            &weak(&p, 0.0),
            &state,
            t,
            &w,
            TruncationPolicy::default(),
        )
        .unwrap();
        for n in w.levels() {
            for np in w.levels() {
                let e =
                    r0.element(n, np).unwrap() * Complex64::from_polar(1.0, (np - n) as f64 * t);
                assert_abs_diff_eq!(
                    (rt.element(n, np).unwrap() - e).norm(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn invariants_under_damping() {
        let p = ModelParams::new(12, 1.0, 0.8).unwrap();
        let state = InjectionState::equal_superposition(&[14, 16]).unwrap();
        let w = LevelWindow::covering(&p, &state, 1);
        for gt in [0.3, 1.0, 4.0, 20.0] {
            let rho = evolve_density(
                &p,
                &weak(&p, 0.1),
                &state,
                gt / 0.1,
                &w,
                TruncationPolicy::verified(),
            )
            .unwrap();
            assert!(rho.hermiticity_residual() < 1e-10);
            assert!(rho.min_eigenvalue() > -1e-8);
            assert_abs_diff_eq!(rho.particle_count(), 13.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn single_injection_is_diagonal() {
        let p = ModelParams::new(10, 1.0, 0.9).unwrap();
        let state = InjectionState::single(15).unwrap();
        let w = LevelWindow::covering(&p, &state, 1);
        let rho = evolve_density(
            &p,
            &weak(&p, 0.1),
            &state,
            7.0,
            &w,
            TruncationPolicy::default(),
        )
        .unwrap();
        for n in w.levels() {
            for np in w.levels() {
                if n != np {
                    assert!(rho.element(n, np).unwrap().norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn decay_ladder() {
        let p = ModelParams::new(20, 1.0, 0.8).unwrap();
        let d = DecayFunction::new(&p, 0.1);
        assert_eq!(rho_decay(&d, 0, 0.0).unwrap(), 1.0);
        assert_eq!(rho_decay(&d, 3, 0.0).unwrap(), 0.0);
        assert!(matches!(rho_decay(&d, -1, 1.0), Err(Error::Domain(_))));
        for k in 0..20 {
            let t = 0.37 * k as f64 / 0.1;
            let sum: f64 = (0..=60).map(|m| rho_decay(&d, m, t).unwrap()).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
        let free = ModelParams::new(20, 1.0, 1.0).unwrap();
        let d = DecayFunction::new(&free, 0.1);
        let r = rho_decay(&d, 1, 0.1).unwrap() / 0.01;
        assert!((0.98..=1.0).contains(&r), "{r}");
        assert_abs_diff_eq!(
            rho_decay(&d, 1, 1e3).unwrap(),
            2.0 * (-2f64).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn heating_short_and_zero_time() {
        let p = ModelParams::new(20, 1.0, 1.0).unwrap();
        let d = DecayFunction::new(&p, 0.1);
        let nf = p.fermi_level();
        for n in nf - 5..=nf + 5 {
            let v = rho_heat(&p, &d, n, n, 0.0, HEAT_TRUNCATION).unwrap();
            let e = if n <= nf { 1.0 } else { 0.0 };
            assert_abs_diff_eq!((v - e).norm(), 0.0, epsilon = 1e-15);
        }
        let t = 0.5;
        let nu2 = d.nu(t).norm_sqr();
        let below = rho_heat(&p, &d, nf, nf, t, HEAT_TRUNCATION).unwrap();
        let above = rho_heat(&p, &d, nf + 1, nf + 1, t, HEAT_TRUNCATION).unwrap();
        assert!((below.re - (1.0 - nu2)).abs() < 1e-3 * (1.0 - nu2));
        assert!((above.re - nu2).abs() < 1e-3 * nu2 + 1e-4 * nu2);
    }

    #[test]
    fn heating_is_hermitian() {
        let p = ModelParams::new(20, 1.0, 0.7).unwrap();
        let d = DecayFunction::new(&p, 0.1);
        let nf = p.fermi_level();
        for t in [1.0, 10.0, 100.0] {
            for n in nf - 3..=nf + 3 {
                for np in nf - 3..=nf + 3 {
                    let x = rho_heat(&p, &d, n, np, t, HEAT_TRUNCATION).unwrap();
                    let y = rho_heat(&p, &d, np, n, t, HEAT_TRUNCATION).unwrap();
                    assert_abs_diff_eq!((x - y.conj()).norm(), 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn dephasing_envelope() {
        let p = ModelParams::new(21, 1.0, 0.8).unwrap();
        let nf = p.fermi_level();
        let d = DecayFunction::new(&p, 0.1);
        let a = Complex64::new(0.8, 0.0);
        let b = Complex64::new(0.0, 0.6);
        let (n1, n2) = (nf + 20, nf + 16);
        let state = InjectionState::new(vec![(n1, a), (n2, b)]).unwrap();
        let w = LevelWindow::new(0, n1).unwrap();
        for t in [2.0, 10.0, 40.0] {
            let rho = rho_limiting(&p, &d, &state, t, &w).unwrap();
            for m in 0..4 {
                let off = rho.element(n1 - m, n2 - m).unwrap().norm();
                let diag = rho.element(n1 - m, n1 - m).unwrap().norm();
                assert!(
                    (off / diag - 0.75).abs() < 1e-6,
                    "t={t} m={m}: {}",
                    off / diag
                );
            }
        }
    }

    #[test]
    fn generic_profile_needs_enough_modes() {
        let p = ModelParams::new(10, 1.0, 1.0).unwrap();
        let bath = BathSpectrum::ohmic(0.001, 50.0).unwrap();
        let state = InjectionState::single(15).unwrap();
        let w = LevelWindow::covering(&p, &state, 1);
        let r = evolve_density_generic(
            &p,
            &bath,
            &CouplingProfile::uniform(3),
            &state,
            1.0,
            &w,
            TruncationPolicy::default(),
        );
        assert!(matches!(r, Err(Error::Configuration(_))));
        let rho = evolve_density_generic(
            &p,
            &bath,
            &CouplingProfile::uniform(6),
            &state,
            0.0,
            &w,
            TruncationPolicy::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(rho.element(15, 15).unwrap().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.particle_count(), 11.0, epsilon = 1e-12);
    }
}
