//! Numerical quadrature: fixed Gauss–Legendre rules and an adaptive
//! Gauss–Kronrod (7/15) integrator.
//!
//! The adaptive integrator is the reference route used to cross-check the
//! closed-form and series evaluations elsewhere in the crate. It is not on any
//! solver hot path.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * half, ((resk - resg) * half).abs())
}

/// Adaptive Gauss–Kronrod settings.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl Adaptive {
    /// Globally adaptive bisection: always split the interval with the
    /// largest local error estimate.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let (v, e) = kronrod15(&mut f, a, b);
        let mut intervals = vec![(a, b, v, e)];
        loop {
            let total: f64 = intervals.iter().map(|iv| iv.2).sum();
            let err: f64 = intervals.iter().map(|iv| iv.3).sum();
            if err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                return Ok(total);
            }
            if intervals.len() >= self.max_intervals {
                return Err(Error::QuadratureNotConverged { estimate: err });
            }
            let (idx, _) = intervals
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, iv)| {
                    if iv.3 > acc.1 {
                        (i, iv.3)
                    } else {
                        acc
                    }
                });
            let (lo, hi, _, _) = intervals.swap_remove(idx);
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                // interval exhausted floating-point resolution
                return Ok(total);
            }
            let (v1, e1) = kronrod15(&mut f, lo, mid);
            let (v2, e2) = kronrod15(&mut f, mid, hi);
            intervals.push((lo, mid, v1, e1));
            intervals.push((mid, hi, v2, e2));
        }
    }
}

/// Adaptive integration with default tolerances.
pub fn integrate(a: f64, b: f64, f: impl FnMut(f64) -> f64) -> Result<f64> {
    Adaptive::default().integrate(a, b, f)
}

/// `∫_0^t (t-τ)^p g(τ) dτ` for `p > -1`, with the endpoint singularity
/// removed by the substitution `s = (t-τ)^{p+1}`.
pub fn weakly_singular(p: f64, t: f64, mut g: impl FnMut(f64) -> f64) -> Result<f64> {
    if p <= -1.0 {
        return Err(Error::Domain(format!("kernel exponent {p} must exceed -1")));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let q = p + 1.0;
    let upper = t.powf(q);
    let val = integrate(0.0, upper, |s| g(t - s.powf(1.0 / q)))?;
    Ok(val / q)
}
