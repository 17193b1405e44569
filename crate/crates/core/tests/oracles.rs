//! Series results against the independent oracles.

use approx::assert_abs_diff_eq;
use fermibath::density::{evolve_density, four_point_function};
use fermibath::greens::{particle_propagator, propagator, TruncationPolicy};
use fermibath::oracle::{
    four_point_quadrature, particle_propagator_quadrature, wick_density, wick_four_point,
};
use fermibath::{
    Complex64, InjectionState, LevelWindow, ModeCorrelator, ModelParams, PropagatorKind,
};

fn weak(p: &ModelParams, rate: f64) -> Vec<ModeCorrelator> {
    vec![ModeCorrelator::weak_coupling(1, p.omega0_prime, rate)]
}

#[test]
fn particle_propagator_matches_quadrature() {
    let p = ModelParams::new(9, 1.0, 0.8).unwrap();
    let corr = weak(&p, 0.1);
    for t in [0.0, 3.0, 17.0] {
        for n in 9..13 {
            let s = particle_propagator(&p, &corr, n, n, t).unwrap();
            let q = particle_propagator_quadrature(&p, &corr, n, n, t, 128).unwrap();
            assert_abs_diff_eq!((s - q).norm(), 0.0, epsilon = 1e-8);
        }
    }
}

#[test]
fn off_diagonal_propagators_vanish() {
    let p = ModelParams::new(9, 1.0, 0.8).unwrap();
    let corr = weak(&p, 0.1);
    for kind in [PropagatorKind::Hole, PropagatorKind::Particle] {
        let (a, b) = match kind {
            PropagatorKind::Hole => (4, 6),
            PropagatorKind::Particle => (10, 12),
        };
        let v = propagator(kind, &p, &corr, a, b, 4.0, TruncationPolicy::default()).unwrap();
        assert!(v.norm() < 1e-14);
    }
}

#[test]
fn four_point_matches_quadrature() {
    let p = ModelParams::new(5, 1.0, 0.8).unwrap();
    let corr = weak(&p, 0.2);
    let cases = [(6, 6, 6, 6), (5, 7, 6, 8), (3, 3, 7, 7), (4, 6, 6, 8)];
    for t in [0.0, 2.5] {
        for &(n, np, n0, n0p) in &cases {
            let s = four_point_function(&p, &corr, n, np, n0, n0p, t, TruncationPolicy::default())
                .unwrap();
            let q = four_point_quadrature(&p, &corr, n, np, n0, n0p, t, 16).unwrap();
            assert_abs_diff_eq!((s - q).norm(), 0.0, epsilon = 1e-8);
        }
    }
}

#[test]
fn four_point_without_bath_is_wick() {
    let p = ModelParams::new(6, 1.0, 1.0).unwrap();
    let corr = weak(&p, 0.0);
    for t in [0.0, 0.9, 12.0] {
        for (n, np, n0, n0p) in [
            (7, 7, 7, 7),
            (7, 9, 7, 9),
            (2, 2, 8, 8),
            (5, 6, 8, 8),
            (9, 7, 9, 7),
        ] {
            let s = four_point_function(&p, &corr, n, np, n0, n0p, t, TruncationPolicy::default())
                .unwrap();
            let w = wick_four_point(&p, n, np, n0, n0p, t);
            assert_abs_diff_eq!((s - w).norm(), 0.0, epsilon = 1e-10);
        }
    }
}

#[test]
fn density_without_bath_is_wick() {
    let p = ModelParams::new(11, 1.0, 1.0).unwrap();
    let state = InjectionState::new(vec![
        (12, Complex64::new(0.6, 0.0)),
        (14, Complex64::new(0.0, 0.48)),
        (15, Complex64::new(-0.64, 0.0)),
    ])
    .unwrap();
    let window = LevelWindow::covering(&p, &state, 2);
    for t in [0.3, 7.0] {
        let rho = evolve_density(
            &p,
            &weak(&p, 0.0),
            &state,
            t,
            &window,
            TruncationPolicy::verified(),
        )
        .unwrap();
        let w = wick_density(&p, &state, t, &window);
        let dev = (&rho.matrix - &w.matrix)
            .iter()
            .map(|d| d.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-10, "{dev}");
    }
}
