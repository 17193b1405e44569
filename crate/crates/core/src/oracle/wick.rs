//! Free-fermion expectation values in the filled sea by Wick's theorem.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bath::ModelParams;
use crate::density::{DensityMatrix, InjectionState, LevelWindow};

#[derive(Debug, Clone, Copy)]
struct Op {
    creation: bool,
    level: i32,
    time: f64,
}

/// Free two-point contraction `<A B>` in the sea, including time phases.
fn contraction(a: Op, b: Op, omega0: f64, n_f: i32) -> Complex64 {
    if a.creation == b.creation || a.level != b.level {
        return Complex64::new(0.0, 0.0);
    }
    let occupied = a.level <= n_f;
    let weight = match (a.creation, occupied) {
        (true, true) | (false, false) => 1.0,
        _ => return Complex64::new(0.0, 0.0),
    };
    // c_n(t) = c_n e^{-i w0 n t}, c_n^+(t) = c_n^+ e^{i w0 n t}
    let e = omega0 * a.level as f64;
    let phase = if a.creation {
        e * (a.time - b.time)
    } else {
        e * (b.time - a.time)
    };
    Complex64::from_polar(weight, phase)
}

/// Sum over complete pairings with the fermionic sign.
fn wick(ops: &[Op], omega0: f64, n_f: i32) -> Complex64 {
    if ops.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for k in 1..ops.len() {
        let c = contraction(ops[0], ops[k], omega0, n_f);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let rest: Vec<Op> = ops[1..]
            .iter()
            .enumerate()
            .filter(|&(i, _)| i + 1 != k)
            .map(|(_, &o)| o)
            .collect();
        total += sign * c * wick(&rest, omega0, n_f);
    }
    total
}

/// `<c_{n0'} c_{n'}^+(t) c_n(t) c_{n0}^+>` for free fermions.
pub fn wick_four_point(
    params: &ModelParams,
    n: i32,
    n_prime: i32,
    n0: i32,
    n0_prime: i32,
    t: f64,
) -> Complex64 {
    let ops = [
        Op {
            creation: false,
            level: n0_prime,
            time: 0.0,
        },
        Op {
            creation: true,
            level: n_prime,
            time: t,
        },
        Op {
            creation: false,
            level: n,
            time: t,
        },
        Op {
            creation: true,
            level: n0,
            time: 0.0,
        },
    ];
    wick(&ops, params.omega0, params.fermi_level())
}

/// Free density matrix of an injected state, assembled from
/// [`wick_four_point`].
pub fn wick_density(
    params: &ModelParams,
    state: &InjectionState,
    t: f64,
    window: &LevelWindow,
) -> DensityMatrix {
    let dim = window.len();
    let amps = state.amplitudes();
    let matrix = DMatrix::from_fn(dim, dim, |i, j| {
        let n = window.lo + i as i32;
        let np = window.lo + j as i32;
        let mut v = Complex64::new(0.0, 0.0);
        for &(n0, a) in amps {
            for &(n0p, b) in amps {
                v += a * b.conj() * wick_four_point(params, n, np, n0, n0p, t);
            }
        }
        v
    });
    DensityMatrix {
        window: *window,
        time: t,
        matrix,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_level() {
        let p = ModelParams::new(6, 1.0, 1.0).unwrap();
        for t in [0.0, 1.3, 40.0] {
            assert_abs_diff_eq!(
                wick_four_point(&p, 6, 6, 6, 6, t).norm(),
                1.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn coherence_phase() {
        let p = ModelParams::new(6, 1.0, 1.0).unwrap();
        let t = 0.7;
        let v = wick_four_point(&p, 8, 10, 8, 10, t);
        assert_abs_diff_eq!(
            (v - Complex64::from_polar(1.0, 2.0 * t)).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn sea_is_undisturbed() {
        let p = ModelParams::new(6, 1.0, 1.0).unwrap();
        for n in 0..=5 {
            let v = wick_four_point(&p, n, n, 8, 8, 2.0);
            assert_abs_diff_eq!((v - 1.0).norm(), 0.0, epsilon = 1e-14);
        }
        assert_eq!(
            wick_four_point(&p, 3, 4, 8, 8, 2.0),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn density_trace() {
        let p = ModelParams::new(6, 1.0, 1.0).unwrap();
        let s = InjectionState::equal_superposition(&[7, 9]).unwrap();
        let w = LevelWindow::new(2, 12).unwrap();
        let rho = wick_density(&p, &s, 3.0, &w);
        assert_abs_diff_eq!(rho.particle_count(), 7.0, epsilon = 1e-13);
        let c = rho.element(7, 9).unwrap();
        assert_abs_diff_eq!(
            (c - Complex64::from_polar(0.5, 6.0)).norm(),
            0.0,
            epsilon = 1e-14
        );
    }
}
