//! BDF2 convolution quadrature for Caputo derivatives and fractional
//! integrals, with Lubich-type startup corrections, and the mixed operator
//! `∂κ^γ ∂̄t` used for the damping term.
//!
//! The weights `ω_j` are the Taylor coefficients of `(δ(ζ)/κ)^γ` with
//! `δ(ζ) = 3/2 − 2ζ + ζ²/2 = (3/2)(1 − ζ)(1 − ζ/3)`.

use crate::error::{domain, Error, Result};
use crate::fraccalc::{check_order, rgamma};
use std::io::Write;

/// Taylor coefficients of `(1 − ζ)^γ`.
fn binomial_series(gamma: f64, n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n + 1);
    c.push(1.0);
    for j in 1..=n {
        let prev = c[j - 1];
        c.push(prev * (j as f64 - 1.0 - gamma) / j as f64);
    }
    c
}

/// First `n + 1` Taylor coefficients of `(δ(ζ)/κ)^γ`.
pub fn bdf2_weights(gamma: f64, kappa: f64, n: usize) -> Result<Vec<f64>> {
    if !gamma.is_finite() {
        return domain(format!("order {gamma} must be finite"));
    }
    if !(kappa > 0.0) {
        return domain(format!("time step {kappa} must be positive"));
    }
    let c = binomial_series(gamma, n);
    let mut third = Vec::with_capacity(n + 1);
    let mut scale = 1.0;
    for &cj in &c {
        third.push(cj * scale);
        scale /= 3.0;
    }
    let lead = (1.5 / kappa).powf(gamma);
    let omega = (0..=n)
        .map(|m| {
            let s: f64 = (0..=m).map(|k| c[k] * third[m - k]).sum();
            lead * s
        })
        .collect();
    Ok(omega)
}

/// Values that a convolution quadrature can act on: scalars or nodal vectors.
pub trait SeqValue: Clone {
    fn zeros_like(&self) -> Self;
    /// `self += a · x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn scale(&mut self, a: f64);
}

impl SeqValue for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
}

impl SeqValue for Vec<f64> {
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }
    fn scale(&mut self, a: f64) {
        for s in self.iter_mut() {
            *s *= a;
        }
    }
}

/// A time-indexed sequence `g_0, g_1, …` with an optional exact time
/// derivative at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence<V> {
    pub values: Vec<V>,
    pub t0_derivative: Option<V>,
}

impl<V> Sequence<V> {
    pub fn new(values: Vec<V>) -> Self {
        Self {
            values,
            t0_derivative: None,
        }
    }

    pub fn with_derivative(values: Vec<V>, t0_derivative: V) -> Self {
        Self {
            values,
            t0_derivative: Some(t0_derivative),
        }
    }

    /// Samples `g(t_j)`, `j = 0..=n`, of a scalar function with known `g'(0)`.
    pub fn sample(n: usize, kappa: f64, g: impl Fn(f64) -> f64, dg0: f64) -> Sequence<f64> {
        Sequence {
            values: (0..=n).map(|j| g(j as f64 * kappa)).collect(),
            t0_derivative: Some(dg0),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Central difference `∂̄t g(t_n)`: the exact derivative at `n = 0`, the
/// symmetric quotient `(g_{n+1} − g_{n−1})/(2κ)` for `n ≥ 1`.
pub fn central_diff<V: SeqValue>(g: &Sequence<V>, kappa: f64, n: usize) -> Result<V> {
    if n == 0 {
        return g.t0_derivative.clone().ok_or(Error::MissingDerivative);
    }
    if n + 1 >= g.values.len() {
        return Err(Error::Index {
            index: n + 1,
            available: g.values.len(),
        });
    }
    let mut d = g.values[n + 1].clone();
    d.axpy(-1.0, &g.values[n - 1]);
    d.scale(0.5 / kappa);
    Ok(d)
}

/// BDF2 convolution weights plus the startup correction weights for a fixed
/// order, time step and horizon.
#[derive(Debug, Clone)]
pub struct CqScheme {
    gamma: f64,
    kappa: f64,
    omega: Vec<f64>,
    w0: Vec<f64>,
    w1: Vec<f64>,
    chi: f64,
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    sum
}

impl CqScheme {
    /// Weights for `n_steps` steps of size `kappa`, i.e. `t_0 … t_N`.
    pub fn new(gamma: f64, kappa: f64, n_steps: usize) -> Result<Self> {
        check_order(gamma)?;
        let omega = bdf2_weights(gamma, kappa, n_steps)?;
        let len = n_steps + 1;
        let mut w0 = vec![0.0; len];
        let mut w1 = vec![0.0; len];
        let chi;
        if gamma < 0.0 {
            chi = 0.0;
            let r = rgamma(1.0 - gamma);
            let mut prefix = 0.0;
            let mut comp = 0.0;
            for n in 0..len {
                let y = omega[n] - comp;
                let s = prefix + y;
                comp = (s - prefix) - y;
                prefix = s;
                let t = n as f64 * kappa;
                w0[n] = t.powf(-gamma) * r - prefix;
            }
        } else {
            chi = 1.0;
            let r = rgamma(2.0 - gamma);
            for n in 0..len {
                let t = n as f64 * kappa;
                let moment = kahan_sum((0..=n).map(|j| (n - j) as f64 * kappa * omega[j]));
                let total = kahan_sum(omega[..=n].iter().copied());
                w1[n] = (t.powf(1.0 - gamma) * r - moment) / kappa;
                w0[n] = -total - w1[n];
            }
        }
        Ok(Self {
            gamma,
            kappa,
            omega,
            w0,
            w1,
            chi,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Number of time steps `N`.
    pub fn steps(&self) -> usize {
        self.omega.len() - 1
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn w0(&self) -> &[f64] {
        &self.w0
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    /// 1 for positive orders (Caputo shift), 0 otherwise.
    pub fn chi(&self) -> f64 {
        self.chi
    }

    fn check_index<V>(&self, values: &[V], n: usize) -> Result<()> {
        if n > self.steps() {
            return Err(Error::Index {
                index: n,
                available: self.omega.len(),
            });
        }
        if n >= values.len() {
            return Err(Error::Index {
                index: n,
                available: values.len(),
            });
        }
        Ok(())
    }

    /// `Σ_{j=0}^{n} ω_{n−j} (g_j − χ g_0)`.
    pub fn apply<V: SeqValue>(&self, g: &[V], n: usize) -> Result<V> {
        self.check_index(g, n)?;
        let mut acc = g[0].zeros_like();
        for (j, gj) in g[..=n].iter().enumerate() {
            acc.axpy(self.omega[n - j], gj);
        }
        if self.chi != 0.0 {
            let total: f64 = self.omega[..=n].iter().sum();
            acc.axpy(-self.chi * total, &g[0]);
        }
        Ok(acc)
    }

    /// `Σ_{j=0}^{n} ω_{n−j} g_j + w₀(t_n) g_0 + w₁(t_n) g_1`.
    pub fn apply_corrected<V: SeqValue>(&self, g: &[V], n: usize) -> Result<V> {
        self.check_index(g, n)?;
        let mut acc = g[0].zeros_like();
        for (j, gj) in g[..=n].iter().enumerate() {
            acc.axpy(self.omega[n - j], gj);
        }
        acc.axpy(self.w0[n], &g[0]);
        if self.w1[n] != 0.0 {
            if g.len() < 2 {
                return Err(Error::Index {
                    index: 1,
                    available: g.len(),
                });
            }
            acc.axpy(self.w1[n], &g[1]);
        }
        Ok(acc)
    }

    /// CQ applied to the central differences `∂̄t g(t_j)`, `j = 0..=n`;
    /// approximates `∂t^{γ+1} g(t_n)`. Needs `g` through index `n + 1`.
    pub fn mixed<V: SeqValue>(&self, g: &Sequence<V>, n: usize, corrected: bool) -> Result<V> {
        let diffs = (0..=n)
            .map(|j| central_diff(g, self.kappa, j))
            .collect::<Result<Vec<_>>>()?;
        if corrected {
            self.apply_corrected(&diffs, n)
        } else {
            self.apply(&diffs, n)
        }
    }

    /// Weight table as CSV: `n, t_n, omega_n, w0_n, w1_n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,t_n,omega_n,w0_n,w1_n")?;
        for n in 0..self.omega.len() {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                n,
                n as f64 * self.kappa,
                self.omega[n],
                self.w0[n],
                self.w1[n]
            )?;
        }
        Ok(())
    }
}

/// Uncorrected CQ of `g` at `t_n`; see [`CqScheme::apply`].
pub fn apply_cq<V: SeqValue>(scheme: &CqScheme, g: &[V], n: usize) -> Result<V> {
    scheme.apply(g, n)
}

/// Corrected CQ of `g` at `t_n`; see [`CqScheme::apply_corrected`].
pub fn apply_cq_corrected<V: SeqValue>(scheme: &CqScheme, g: &[V], n: usize) -> Result<V> {
    scheme.apply_corrected(g, n)
}

/// `∂κ^γ ∂̄t g(t_n)`; see [`CqScheme::mixed`].
pub fn mixed_operator<V: SeqValue>(
    scheme: &CqScheme,
    g: &Sequence<V>,
    n: usize,
    corrected: bool,
) -> Result<V> {
    scheme.mixed(g, n, corrected)
}
