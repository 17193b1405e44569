//! Adaptive Gauss-Kronrod (7/15) quadrature for vector-valued complex
//! integrands on finite and semi-infinite intervals.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

// Nodes and weights as tabulated, beyond f64 precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7]
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-8,
            abs: 1e-12,
            max_intervals: 20_000,
        }
    }
}

struct Segment<const K: usize> {
    a: f64,
    b: f64,
    value: [Complex64; K],
    error: f64,
}

impl<const K: usize> PartialEq for Segment<K> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const K: usize> Eq for Segment<K> {}
impl<const K: usize> PartialOrd for Segment<K> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Segment<K> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<const K: usize, F>(f: &F, a: f64, b: f64) -> Segment<K>
where
    F: Fn(f64) -> [Complex64; K],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let zero = [Complex64::new(0.0, 0.0); K];
    let mut kronrod = zero;
    let mut gauss = zero;
    let fc = f(center);
    for i in 0..K {
        kronrod[i] = fc[i] * WGK[7];
        gauss[i] = fc[i] * WG[3];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for i in 0..K {
            let s = f1[i] + f2[i];
            kronrod[i] += s * WGK[j];
            if j % 2 == 1 {
                gauss[i] += s * WG[j / 2];
            }
        }
    }
    let mut error: f64 = 0.0;
    let mut value = zero;
    for i in 0..K {
        value[i] = kronrod[i] * half;
        error = error.max(((kronrod[i] - gauss[i]) * half).norm());
    }
    Segment { a, b, value, error }
}

/// Integrate `f` over `[a, b]`, splitting first at `breakpoints` (which must
/// lie inside the interval) and then bisecting the worst segment until the
/// summed error estimate meets the tolerance for every component.
pub fn integrate<const K: usize, F>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<[Complex64; K]>
where
    F: Fn(f64) -> [Complex64; K],
{
    let mut edges = vec![a];
    edges.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(gk15(&f, w[0], w[1]));
    }
    loop {
        let mut total = [Complex64::new(0.0, 0.0); K];
        let mut err = 0.0;
        for s in heap.iter() {
            for (acc, v) in total.iter_mut().zip(&s.value) {
                *acc += *v;
            }
            err += s.error;
        }
        let scale = total.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if err <= tol.abs.max(tol.rel * scale) {
            return Ok(total);
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Integration(format!(
                "error estimate {err:e} after {} intervals (target {:e})",
                heap.len(),
                tol.abs.max(tol.rel * scale)
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Integration(format!(
                "interval [{}, {}] cannot be bisected further",
                worst.a, worst.b
            )));
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
    }
}

/// Integrate `f` over `[a, inf)` through the map `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<const K: usize, F>(
    f: F,
    a: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<[Complex64; K]>
where
    F: Fn(f64) -> [Complex64; K],
{
    let mapped: Vec<f64> = breakpoints
        .iter()
        .filter(|&&x| x > a)
        .map(|&x| (x - a) / (1.0 + x - a))
        .collect();
    let g = |s: f64| {
        let u = 1.0 - s;
        let x = a + s / u;
        let jac = 1.0 / (u * u);
        let mut v = f(x);
        for c in v.iter_mut() {
            *c *= jac;
        }
        v
    };
    integrate(g, 0.0, 1.0, &mapped, tol)
}
