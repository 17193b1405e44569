//! Fourier coefficients by uniform-grid quadrature.
//!
//! The vertex expectation is evaluated pointwise as a closed-form function
//! of the ring variables on circles `|X_j| = r_j`, with radii growing with
//! operator order so that every `|z_jk| < 1`. No series arithmetic is
//! involved.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::{ModeCorrelator, ModeValues, ModelParams};
use crate::error::{Error, Result};
use crate::greens::{Field, Vertex};

/// Grid doubling must change the result by less than this.
pub const RESOLUTION_TOL: f64 = 1e-8;

/// Log-ratio of contour radii between neighbouring vertices, for two and
/// for four vertices. Larger steps shrink aliasing on coarse grids but
/// amplify rounding by `r^{-e}`.
fn radius_step(n_vertices: usize) -> f64 {
    if n_vertices <= 2 {
        0.5
    } else {
        1.2
    }
}

/// Largest tolerated rounding amplification `prod_j r_j^{-e_j}`.
const MAX_AMPLIFICATION: f64 = 1e6;

/// Smallest radius step; below it the grid needed against aliasing grows
/// faster than the rounding it saves.
const MIN_RADIUS_STEP: f64 = 0.45;

/// Radius step for a target: the default, shrunk so that the rescaling of
/// the extracted coefficient stays below [`MAX_AMPLIFICATION`].
fn adapted_step(n_vertices: usize, orders: &[f64], exps: &[i32]) -> f64 {
    let mid = 0.5 * (n_vertices as f64 + 1.0);
    // log amplification per unit step
    let a: f64 = orders
        .iter()
        .zip(exps)
        .map(|(&o, &e)| -(e as f64) * (o - mid))
        .sum();
    let base = radius_step(n_vertices);
    if a <= 0.0 {
        return base;
    }
    (MAX_AMPLIFICATION.ln() / a).clamp(MIN_RADIUS_STEP.min(base), base)
}

fn grid_sum<F>(f: &F, dims: usize, exps: &[i32], grid: usize) -> Complex64
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let h = 2.0 * std::f64::consts::PI / grid as f64;
    let total = grid.pow(dims as u32);
    // Split the flat index range so the parallel reduction order is fixed.
    let chunk = grid.pow(dims.saturating_sub(1) as u32);
    let partial: Vec<Complex64> = (0..total / chunk)
        .into_par_iter()
        .map(|c| {
            let mut angles = vec![0.0; dims];
            let mut acc = Complex64::new(0.0, 0.0);
            for idx in c * chunk..(c + 1) * chunk {
                let mut rest = idx;
                let mut phase = 0.0;
                for d in (0..dims).rev() {
                    let k = rest % grid;
                    rest /= grid;
                    angles[d] = h * k as f64;
                    phase -= exps[d] as f64 * angles[d];
                }
                acc += f(&angles) * Complex64::from_polar(1.0, phase);
            }
            acc
        })
        .collect();
    partial.iter().sum::<Complex64>() / total as f64
}

/// Fourier coefficient `(2 pi)^{-d} int f(x) e^{-i e.x} d^d x` of a
/// `2 pi`-periodic integrand on a uniform grid of `grid_size` points per
/// axis. The grid is doubled once; a change above [`RESOLUTION_TOL`] is an
/// error, otherwise the finer value is returned.
pub fn quadrature_coefficient<F>(integrand: F, exps: &[i32], grid_size: usize) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let max_exp = exps
        .iter()
        .map(|e| e.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    if exps.is_empty() || !grid_size.is_power_of_two() || grid_size < 2 * max_exp + 2 {
        return Err(Error::InvalidParameter(format!(
            "grid size {grid_size} must be a power of two >= {}",
            2 * max_exp + 2
        )));
    }
    let coarse = grid_sum(&integrand, exps.len(), exps, grid_size);
    let fine = grid_sum(&integrand, exps.len(), exps, 2 * grid_size);
    let deviation = (fine - coarse).norm();
    if deviation > RESOLUTION_TOL {
        return Err(Error::Resolution {
            grid: 2 * grid_size,
            deviation,
        });
    }
    Ok(fine)
}

/// Laurent coefficient of `f(X_1, ..., X_d)` at `exps`, integrating on the
/// circles `|X_j| = radii[j]`.
pub fn contour_coefficient<F>(
    f: F,
    exps: &[i32],
    radii: &[f64],
    grid_size: usize,
) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    if radii.len() != exps.len() {
        return Err(Error::InvalidParameter("one radius per variable".into()));
    }
    let g = |angles: &[f64]| {
        let xs: Vec<Complex64> = angles
            .iter()
            .zip(radii)
            .map(|(&a, &r)| Complex64::from_polar(r, a))
            .collect();
        f(&xs)
    };
    let c = quadrature_coefficient(g, exps, grid_size)?;
    let scale: f64 = exps.iter().zip(radii).map(|(&e, &r)| r.powi(-e)).product();
    Ok(c * scale)
}

/// (var_j, var_k, sigma_j sigma_k, t_j - t_k, mode values at that lag)
type Pair = (usize, usize, f64, f64, Vec<(usize, ModeValues)>);

struct Pointwise {
    omega0: f64,
    pairs: Vec<Pair>,
    // (var, equal-time mode values)
    selfs: Vec<(usize, Vec<(usize, ModeValues)>)>,
}

impl Pointwise {
    fn new(
        params: &ModelParams,
        ordered: &[Vertex],
        correlators: &[ModeCorrelator],
    ) -> Result<Self> {
        let values = |tau: f64| -> Result<Vec<(usize, ModeValues)>> {
            correlators
                .iter()
                .map(|c| Ok((c.q(), c.eval(tau)?)))
                .collect()
        };
        let mut pairs = Vec::new();
        for j in 0..ordered.len() {
            for k in j + 1..ordered.len() {
                let (a, b) = (ordered[j], ordered[k]);
                let tau = a.time - b.time;
                let ss = (a.field.sign() * b.field.sign()) as f64;
                pairs.push((a.var, b.var, ss, tau, values(tau)?));
            }
        }
        let eq = values(0.0)?;
        let selfs = ordered.iter().map(|v| (v.var, eq.clone())).collect();
        Ok(Self {
            omega0: params.omega0,
            pairs,
            selfs,
        })
    }

    /// Vertex expectation without the Klein and `lambda` prefactor.
    fn eval(&self, x: &[Complex64]) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let mut product = one;
        let mut exponent = Complex64::new(0.0, 0.0);
        for (j, k, ss, tau, vals) in &self.pairs {
            let ratio = x[*j] / x[*k];
            let z = ratio * Complex64::from_polar(1.0, -self.omega0 * tau);
            product *= if *ss > 0.0 { one - z } else { one / (one - z) };
            let prod = x[*j] * x[*k];
            for (q, v) in vals {
                let qf = *q as f64;
                let qi = *q as i32;
                let free = Complex64::from_polar(1.0, -qf * self.omega0 * tau);
                let dc = ratio.powi(qi) * (v.p - free) + ratio.powi(-qi) * v.m
                    - prod.powi(qi) * v.a
                    - prod.powi(-qi) * v.abar;
                exponent -= ss * dc / qf;
            }
        }
        for (j, vals) in &self.selfs {
            let sq = x[*j] * x[*j];
            for (q, v) in vals {
                let qf = *q as f64;
                let qi = *q as i32;
                let dc = v.p - one + v.m - sq.powi(qi) * v.a - sq.powi(-qi) * v.abar;
                exponent -= 0.5 * dc / qf;
            }
        }
        product * exponent.exp()
    }
}

/// Klein and `lambda` prefactor, filling the sea from the right.
fn prefactor(params: &ModelParams, ordered: &[Vertex], nvars: usize) -> (Vec<i32>, Complex64) {
    let mut exps = vec![0; nvars];
    let mut phase = 0.0;
    let mut occupied = params.n_particles as i32;
    for v in ordered.iter().rev() {
        let (power, next) = match v.field {
            Field::Psi => (occupied - 1, occupied - 1),
            Field::PsiDagger => (-occupied, occupied + 1),
        };
        exps[v.var] += power;
        phase -= params.omega0 * v.time * power as f64;
        occupied = next;
    }
    (exps, Complex64::from_polar(1.0, phase))
}

/// Coefficient of the vertex expectation at `exps`, by quadrature.
pub fn vertex_expectation_quadrature(
    params: &ModelParams,
    vertices: &[Vertex],
    correlators: &[ModeCorrelator],
    nvars: usize,
    exps: &[i32],
    grid_size: usize,
) -> Result<Complex64> {
    let mut ordered = vertices.to_vec();
    ordered.sort_by_key(|v| v.order);
    if exps.len() != nvars || ordered.iter().any(|v| v.var >= nvars) {
        return Err(Error::Configuration(
            "vertex variables do not match exponents".into(),
        ));
    }
    let charge: i32 = ordered.iter().map(|v| v.field.sign()).sum();
    if charge != 0 {
        return Err(Error::Neutrality(charge));
    }
    let (pre_exps, pre_phase) = prefactor(params, &ordered, nvars);
    let shifted: Vec<i32> = exps.iter().zip(&pre_exps).map(|(e, p)| e - p).collect();
    let mid = 0.5 * (ordered.len() as f64 + 1.0);
    let orders: Vec<f64> = ordered.iter().map(|v| v.order as f64).collect();
    let target: Vec<i32> = ordered.iter().map(|v| shifted[v.var]).collect();
    let step = adapted_step(ordered.len(), &orders, &target);
    let mut radii = vec![1.0; nvars];
    for v in &ordered {
        radii[v.var] = (step * (v.order as f64 - mid)).exp();
    }
    let pw = Pointwise::new(params, &ordered, correlators)?;
    let c = contour_coefficient(|x| pw.eval(x), &shifted, &radii, grid_size)?;
    Ok(c * pre_phase)
}

/// Hole propagator `<c_{n'}^+(t) c_n>` by two-dimensional quadrature.
pub fn hole_propagator_quadrature(
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    n: i32,
    n_prime: i32,
    t: f64,
    grid_size: usize,
) -> Result<Complex64> {
    let v = [
        Vertex::new(1, t, Field::PsiDagger, 1),
        Vertex::new(0, 0.0, Field::Psi, 2),
    ];
    vertex_expectation_quadrature(params, &v, correlators, 2, &[n, -n_prime], grid_size)
}

/// Particle propagator `<c_n(t) c_{n'}^+>` by two-dimensional quadrature.
pub fn particle_propagator_quadrature(
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    n: i32,
    n_prime: i32,
    t: f64,
    grid_size: usize,
) -> Result<Complex64> {
    let v = [
        Vertex::new(0, t, Field::Psi, 1),
        Vertex::new(1, 0.0, Field::PsiDagger, 2),
    ];
    vertex_expectation_quadrature(params, &v, correlators, 2, &[n, -n_prime], grid_size)
}

/// `<c_{n0'} c_{n'}^+(t) c_n(t) c_{n0}^+>` by four-dimensional quadrature.
#[allow(clippy::too_many_arguments)]
pub fn four_point_quadrature(
    params: &ModelParams,
    correlators: &[ModeCorrelator],
    n: i32,
    n_prime: i32,
    n0: i32,
    n0_prime: i32,
    t: f64,
    grid_size: usize,
) -> Result<Complex64> {
    let v = [
        Vertex::new(3, 0.0, Field::Psi, 1),
        Vertex::new(1, t, Field::PsiDagger, 2),
        Vertex::new(0, t, Field::Psi, 3),
        Vertex::new(2, 0.0, Field::PsiDagger, 4),
    ];
    vertex_expectation_quadrature(
        params,
        &v,
        correlators,
        4,
        &[n, -n_prime, -n0, n0_prime],
        grid_size,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{hole_propagator_weak_closed_form, PropagatorKind, TruncationPolicy};
    use approx::assert_abs_diff_eq;

    #[test]
    fn pure_mode() {
        let c =
            quadrature_coefficient(|x| Complex64::from_polar(1.0, 3.0 * x[0]), &[3], 64).unwrap();
        assert_abs_diff_eq!((c - 1.0).norm(), 0.0, epsilon = 1e-14);
        let c =
            quadrature_coefficient(|x| Complex64::from_polar(1.0, 3.0 * x[0]), &[2], 64).unwrap();
        assert!(c.norm() < 1e-14);
    }

    #[test]
    fn grid_validation_and_resolution() {
        let f = |x: &[f64]| Complex64::new(x[0].cos(), 0.0);
        assert!(quadrature_coefficient(f, &[3], 6).is_err());
        assert!(quadrature_coefficient(f, &[3], 4).is_err());
        // 1 / (1 - 0.95 e^{ix}) has slowly decaying coefficients
        let g = |x: &[f64]| Complex64::new(1.0, 0.0) / (1.0 - Complex64::from_polar(0.95, x[0]));
        assert!(matches!(
            quadrature_coefficient(g, &[1], 16),
            Err(Error::Resolution { .. })
        ));
        let c = quadrature_coefficient(g, &[1], 1024).unwrap();
        assert_abs_diff_eq!((c - 0.95).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn hole_quadrature_matches_closed_form() {
        let p = ModelParams::new(12, 1.0, 0.8).unwrap();
        let rate = 0.1;
        let corr = vec![ModeCorrelator::weak_coupling(1, 0.8, rate)];
        for t in [0.0, 4.0, 15.0] {
            for n in [5, 9, 11] {
                let q = hole_propagator_quadrature(&p, &corr, n, n, t, 128).unwrap();
                let c = hole_propagator_weak_closed_form(&p, rate, n, t).unwrap();
                assert!((q - c).norm() < 1e-9, "t={t} n={n}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn particle_quadrature_matches_series() {
        let p = ModelParams::new(12, 1.0, 0.8).unwrap();
        let corr = vec![ModeCorrelator::weak_coupling(1, 0.8, 0.1)];
        for (n, np) in [(12, 12), (15, 15), (14, 13)] {
            let q = particle_propagator_quadrature(&p, &corr, n, np, 6.0, 128).unwrap();
            let s = crate::greens::propagator(
                PropagatorKind::Particle,
                &p,
                &corr,
                n,
                np,
                6.0,
                TruncationPolicy::default(),
            )
            .unwrap();
            assert!((q - s).norm() < 1e-9);
        }
    }

    #[test]
    fn four_point_initial_values() {
        let p = ModelParams::new(4, 1.0, 1.0).unwrap();
        let corr = vec![ModeCorrelator::weak_coupling(1, 1.0, 0.1)];
        // <c_5 c_5^+ c_5 c_5^+> = 1, <c_5 c_2^+ c_2 c_5^+> = 1 (sea level 2 stays filled)
        let v = four_point_quadrature(&p, &corr, 5, 5, 5, 5, 0.0, 16).unwrap();
        assert_abs_diff_eq!((v - 1.0).norm(), 0.0, epsilon = 1e-9);
        let v = four_point_quadrature(&p, &corr, 2, 2, 5, 5, 0.0, 16).unwrap();
        assert_abs_diff_eq!((v - 1.0).norm(), 0.0, epsilon = 1e-9);
        let v = four_point_quadrature(&p, &corr, 5, 6, 5, 6, 0.0, 16).unwrap();
        assert_abs_diff_eq!((v - 1.0).norm(), 0.0, epsilon = 1e-9);
        let v = four_point_quadrature(&p, &corr, 4, 4, 5, 5, 0.0, 16).unwrap();
        assert!(v.norm() < 1e-9);
    }
}
