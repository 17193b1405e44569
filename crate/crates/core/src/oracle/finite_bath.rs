//! Exact evolution of the center-of-mass boson coupled to a handful of
//! explicit bath oscillators.
//!
//! `H = w0 b^+ b + sum_k w_k a_k^+ a_k + g (b + b^+) sum_k c_k (a_k + a_k^+)`
//! with `g = sqrt(N / (2 m w0))`, bath frequencies spread evenly over a band
//! around `w0` and `c_k^2 = S(w_k) dw`, so that the golden-rule rate is the
//! continuum `Gamma = N gamma`. The Fock space is truncated per mode and in
//! total excitation number. The interacting ground state comes from Lanczos
//! iteration; `b^+ |G>` is propagated with short Krylov steps.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpectrum, ModelParams};
use crate::error::{Error, Result};

/// Largest Fock basis the oracle accepts.
pub const DIMENSION_CAP: usize = 100_000;

const KRYLOV_DIM: usize = 30;
const GROUND_STATE_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteBathConfig {
    pub n_bath_modes: usize,
    /// Fock cutoff of the collective mode.
    pub system_cutoff: u8,
    /// Fock cutoff of each bath mode.
    pub bath_cutoff: u8,
    /// Cap on the total number of quanta.
    pub total_cutoff: u8,
    /// Bath band `[lo, hi]` in units of `omega0`.
    pub band: (f64, f64),
    /// Multiplies every coupling; 0 decouples the bath.
    pub coupling_scale: f64,
}

impl Default for FiniteBathConfig {
    fn default() -> Self {
        Self {
            n_bath_modes: 20,
            system_cutoff: 3,
            bath_cutoff: 2,
            total_cutoff: 3,
            band: (0.25, 2.0),
            coupling_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteBathResult {
    pub times: Vec<f64>,
    /// `P(t) = <b(t) b^+>` in the interacting ground state.
    pub p: Vec<Complex64>,
    /// Norm of the propagated state.
    pub norm: Vec<f64>,
    /// Expected total quanta in the propagated state.
    pub excitations: Vec<f64>,
    pub dimension: usize,
    /// Spacing of the bath frequencies; recurrences start near `2 pi / dw`.
    pub mode_spacing: f64,
}

impl FiniteBathResult {
    pub fn recurrence_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.mode_spacing
    }
}

struct Sparse {
    dim: usize,
    diag: Vec<f64>,
    off: Vec<(usize, usize, f64)>,
}

impl Sparse {
    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for i in 0..self.dim {
            out[i] = v[i] * self.diag[i];
        }
        for &(i, j, h) in &self.off {
            out[i] += v[j] * h;
            out[j] += v[i] * h;
        }
    }
}

fn enumerate_basis(caps: &[u8], total: u8) -> Vec<Vec<u8>> {
    fn rec(caps: &[u8], left: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == caps.len() {
            out.push(cur.clone());
            return;
        }
        for n in 0..=caps[cur.len()].min(left) {
            cur.push(n);
            rec(caps, left - n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(caps, total, &mut Vec::new(), &mut out);
    out
}

fn count_basis(caps: &[u8], total: u8) -> usize {
    // ways[s] = number of partial states using s quanta
    let mut ways = vec![0usize; total as usize + 1];
    ways[0] = 1;
    for &c in caps {
        let mut next = vec![0usize; ways.len()];
        for (s, &w) in ways.iter().enumerate() {
            for n in 0..=(c as usize) {
                if s + n < next.len() {
                    next[s + n] = next[s + n].saturating_add(w);
                }
            }
        }
        ways = next;
    }
    ways.iter().fold(0usize, |a, &b| a.saturating_add(b))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos basis with full reorthogonalization. Returns the basis vectors
/// and the tridiagonal coefficients.
fn lanczos(h: &Sparse, start: &[Complex64], m: usize) -> (Vec<Vec<Complex64>>, Vec<f64>, Vec<f64>) {
    let n0 = norm(start);
    let mut basis = vec![start.iter().map(|x| x / n0).collect::<Vec<_>>()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); h.dim];
    for k in 0..m.min(h.dim) {
        h.apply(&basis[k], &mut w);
        alpha.push(dot(&basis[k], &w).re);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nb = norm(&w);
        if nb < 1e-13 || k + 1 == m.min(h.dim) {
            beta.push(nb);
            break;
        }
        beta.push(nb);
        basis.push(w.iter().map(|x| x / nb).collect());
    }
    (basis, alpha, beta)
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    })
}

fn ground_state(h: &Sparse, start: &[Complex64]) -> Result<(f64, Vec<Complex64>)> {
    let mut v = start.to_vec();
    let mut energy = f64::NAN;
    for _ in 0..200 {
        let (basis, alpha, beta) = lanczos(h, &v, 80);
        let eig = tridiagonal(&alpha, &beta).symmetric_eigen();
        let (imin, &e) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty Krylov space");
        let y = eig.eigenvectors.column(imin);
        let mut g = vec![Complex64::new(0.0, 0.0); h.dim];
        for (c, b) in y.iter().zip(&basis) {
            for (gi, bi) in g.iter_mut().zip(b) {
                *gi += bi * *c;
            }
        }
        let ng = norm(&g);
        g.iter_mut().for_each(|x| *x /= ng);
        let mut hg = vec![Complex64::new(0.0, 0.0); h.dim];
        h.apply(&g, &mut hg);
        let residual: f64 = hg
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b * e).norm_sqr())
            .sum::<f64>()
            .sqrt();
        energy = e;
        v = g;
        if residual < GROUND_STATE_TOL {
            return Ok((energy, v));
        }
    }
    Err(Error::Integration(format!(
        "Lanczos ground state did not converge (energy {energy})"
    )))
}

/// `v <- exp(-i H dt) v` in one Krylov step.
fn krylov_step(h: &Sparse, v: &mut [Complex64], dt: f64) {
    let nv = norm(v);
    if nv == 0.0 {
        return;
    }
    let (basis, alpha, beta) = lanczos(h, v, KRYLOV_DIM);
    let eig = tridiagonal(&alpha, &beta).symmetric_eigen();
    let m = alpha.len();
    // coefficients exp(-i T dt) e_1
    let mut c = DVector::from_element(m, Complex64::new(0.0, 0.0));
    for k in 0..m {
        let phase = Complex64::from_polar(eig.eigenvectors[(0, k)], -eig.eigenvalues[k] * dt);
        for i in 0..m {
            c[i] += phase * eig.eigenvectors[(i, k)];
        }
    }
    v.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
    for (ci, b) in c.iter().zip(&basis) {
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi += bi * *ci * nv;
        }
    }
}

/// Evolve `b^+ |G>` and sample `P(t) = <b(t) b^+>` on a non-decreasing grid
/// of non-negative times.
pub fn finite_bath_evolution(
    params: &ModelParams,
    bath: &BathSpectrum,
    config: &FiniteBathConfig,
    t_grid: &[f64],
) -> Result<FiniteBathResult> {
    params.validate()?;
    bath.validate()?;
    if config.n_bath_modes == 0 || !(config.band.0 > 0.0 && config.band.1 > config.band.0) {
        return Err(Error::Configuration(
            "finite bath needs modes and a valid band".into(),
        ));
    }
    if t_grid.iter().any(|&t| t.is_nan() || t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Configuration(
            "time grid must be non-negative and sorted".into(),
        ));
    }
    let w0 = params.omega0;
    let k = config.n_bath_modes;
    let (lo, hi) = (config.band.0 * w0, config.band.1 * w0);
    let dw = (hi - lo) / k as f64;
    let freqs: Vec<f64> = (0..k).map(|i| lo + (i as f64 + 0.5) * dw).collect();
    let g = (params.n_particles as f64 / (2.0 * params.mass * w0)).sqrt();
    let couplings: Vec<f64> = freqs
        .iter()
        .map(|&w| config.coupling_scale * g * (bath.spectrum(w) * dw).sqrt())
        .collect();

    let mut caps = vec![config.system_cutoff];
    caps.extend(std::iter::repeat_n(config.bath_cutoff, k));
    let dim = count_basis(&caps, config.total_cutoff);
    if dim > DIMENSION_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: DIMENSION_CAP,
        });
    }
    let basis = enumerate_basis(&caps, config.total_cutoff);
    let index: HashMap<&[u8], usize> = basis.iter().enumerate().map(|(i, s)| (&s[..], i)).collect();

    let mut diag = Vec::with_capacity(dim);
    let mut off = Vec::new();
    for (i, s) in basis.iter().enumerate() {
        let e = w0 * s[0] as f64
            + s[1..]
                .iter()
                .zip(&freqs)
                .map(|(&n, &w)| n as f64 * w)
                .sum::<f64>();
        diag.push(e);
        // (b + b^+)(a_k + a_k^+): record each pair once, from the state with
        // more quanta in b.
        for (m, &c) in couplings.iter().enumerate() {
            if c == 0.0 || s[0] == 0 {
                continue;
            }
            let mut t = s.clone();
            t[0] -= 1;
            let amp_b = (s[0] as f64).sqrt();
            // b a_k^+ and b a_k
            for up in [true, false] {
                let mut u = t.clone();
                let amp_a = if up {
                    u[m + 1] += 1;
                    (u[m + 1] as f64).sqrt()
                } else {
                    if u[m + 1] == 0 {
                        continue;
                    }
                    u[m + 1] -= 1;
                    (s[m + 1] as f64).sqrt()
                };
                if let Some(&j) = index.get(&u[..]) {
                    off.push((j, i, c * amp_b * amp_a));
                }
            }
        }
    }
    let h = Sparse { dim, diag, off };

    let excitations_of: Vec<f64> = basis
        .iter()
        .map(|s| s.iter().map(|&n| n as f64).sum())
        .collect();
    let mut vacuum = vec![Complex64::new(0.0, 0.0); dim];
    vacuum[index[&vec![0u8; k + 1][..]]] = Complex64::new(1.0, 0.0);
    let (e_g, ground) = if config.coupling_scale == 0.0 || couplings.iter().all(|&c| c == 0.0) {
        (0.0, vacuum)
    } else {
        ground_state(&h, &vacuum)?
    };

    // psi0 = b^+ |G>
    let mut psi0 = vec![Complex64::new(0.0, 0.0); dim];
    for (i, s) in basis.iter().enumerate() {
        if ground[i] == Complex64::new(0.0, 0.0) || s[0] >= config.system_cutoff {
            continue;
        }
        let mut u = s.clone();
        u[0] += 1;
        if let Some(&j) = index.get(&u[..]) {
            psi0[j] += ground[i] * (u[0] as f64).sqrt();
        }
    }

    let max_step = 0.5 / (w0 * config.total_cutoff.max(1) as f64);
    let mut psi = psi0.clone();
    let mut now = 0.0;
    let mut result = FiniteBathResult {
        times: t_grid.to_vec(),
        p: Vec::with_capacity(t_grid.len()),
        norm: Vec::with_capacity(t_grid.len()),
        excitations: Vec::with_capacity(t_grid.len()),
        dimension: dim,
        mode_spacing: dw,
    };
    for &t in t_grid {
        while now < t {
            let dt = (t - now).min(max_step);
            krylov_step(&h, &mut psi, dt);
            now = if t - now <= max_step { t } else { now + dt };
        }
        let nrm = norm(&psi);
        result
            .p
            .push(Complex64::from_polar(1.0, e_g * t) * dot(&psi0, &psi));
        result.norm.push(nrm);
        let ex: f64 = psi
            .iter()
            .zip(&excitations_of)
            .map(|(x, n)| x.norm_sqr() * n)
            .sum();
        result.excitations.push(ex / (nrm * nrm));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn basis_counting() {
        assert_eq!(
            count_basis(&[3, 2, 2], 3),
            enumerate_basis(&[3, 2, 2], 3).len()
        );
        assert_eq!(count_basis(&[1; 4], 4), 16);
    }

    #[test]
    fn free_mode() {
        let p = ModelParams::new(10, 1.0, 1.0).unwrap();
        let bath = BathSpectrum::ohmic(0.01, 10.0).unwrap();
        let cfg = FiniteBathConfig {
            n_bath_modes: 6,
            coupling_scale: 0.0,
            ..FiniteBathConfig::default()
        };
        let times: Vec<f64> = (0..20).map(|i| 0.7 * i as f64).collect();
        let r = finite_bath_evolution(&p, &bath, &cfg, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert_abs_diff_eq!(
                (r.p[i] - Complex64::from_polar(1.0, -t)).norm(),
                0.0,
                epsilon = 1e-10
            );
            assert_abs_diff_eq!(r.excitations[i], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.norm[i], 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn dimension_cap() {
        let p = ModelParams::new(10, 1.0, 1.0).unwrap();
        let bath = BathSpectrum::ohmic(0.01, 10.0).unwrap();
        let cfg = FiniteBathConfig {
            n_bath_modes: 60,
            total_cutoff: 6,
            bath_cutoff: 6,
            ..FiniteBathConfig::default()
        };
        assert!(matches!(
            finite_bath_evolution(&p, &bath, &cfg, &[0.0]),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn norm_is_conserved_with_coupling() {
        let p = ModelParams::new(10, 1.0, 1.0).unwrap();
        let bath = BathSpectrum::ohmic(0.01, 10.0).unwrap();
        let cfg = FiniteBathConfig {
            n_bath_modes: 8,
            ..FiniteBathConfig::default()
        };
        let r = finite_bath_evolution(&p, &bath, &cfg, &[0.0, 3.0, 9.0]).unwrap();
        for n in &r.norm {
            assert_abs_diff_eq!(*n, r.norm[0], epsilon = 1e-10);
        }
        assert_abs_diff_eq!(
            (r.p[0] - r.norm[0] * r.norm[0]).norm(),
            0.0,
            epsilon = 1e-10
        );
    }
}
