//! Scalar reference solutions of `u'' + λu + a ∂t^{γ+1}u = f`.
//!
//! With `v = u''` the problem is the second-kind Volterra equation
//!
//! ```text
//! v(t) + λ∫(t−τ)v(τ)dτ + (a/Γ(1−γ))∫(t−τ)^{−γ}v(τ)dτ = g(t)
//! g(t) = f(t) − λu0 − λt v0 [− (a/Γ(1−γ)) t^{−γ} v0  if γ < 0]
//! ```
//!
//! solved by product integration: `v` is piecewise linear and both kernels
//! are integrated exactly against the hat functions.

use crate::cq::CqScheme;
use crate::error::{Error, Result};
use crate::fraccalc::{check_order, rgamma};
use crate::quad::Adaptive;
use std::io::Write;
use std::sync::Arc;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct VolterraProblem {
    pub gamma: f64,
    /// Modal stiffness, real and non-negative.
    pub lambda: f64,
    pub a_gamma: f64,
    pub f: TimeFn,
    pub u0: f64,
    pub v0: f64,
    pub t_final: f64,
    /// Number of substeps.
    pub m: usize,
}

impl std::fmt::Debug for VolterraProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VolterraProblem")
            .field("gamma", &self.gamma)
            .field("lambda", &self.lambda)
            .field("a_gamma", &self.a_gamma)
            .field("u0", &self.u0)
            .field("v0", &self.v0)
            .field("t_final", &self.t_final)
            .field("m", &self.m)
            .finish()
    }
}

impl VolterraProblem {
    pub fn validate(&self) -> Result<()> {
        check_order(self.gamma)?;
        if !(self.lambda >= 0.0) || !(self.a_gamma >= 0.0) {
            return Err(Error::Domain(format!(
                "need λ ≥ 0 and a ≥ 0, got λ = {}, a = {}",
                self.lambda, self.a_gamma
            )));
        }
        if self.m < 8 {
            return Err(Error::Domain(format!("need at least 8 substeps, got {}", self.m)));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::Domain(format!("horizon {} must be positive", self.t_final)));
        }
        Ok(())
    }

    /// Right-hand side `g(t)` of the Volterra equation.
    pub fn forcing(&self, t: f64) -> f64 {
        let mut g = (self.f)(t) - self.lambda * self.u0 - self.lambda * t * self.v0;
        if self.gamma < 0.0 && t > 0.0 {
            g -= self.a_gamma * rgamma(1.0 - self.gamma) * t.powf(-self.gamma) * self.v0;
        }
        g
    }

    pub fn with_m(&self, m: usize) -> Self {
        let mut p = self.clone();
        p.m = m;
        p
    }
}

#[derive(Debug, Clone)]
pub struct VolterraSolution {
    pub t: Vec<f64>,
    /// `u''` at the grid points.
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    /// Volterra right-hand side at the grid points.
    pub g: Vec<f64>,
}

impl VolterraSolution {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,u,v")?;
        for i in 0..self.t.len() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", self.t[i], self.u[i], self.v[i])?;
        }
        Ok(())
    }
}

/// Weights `(A_d, B_d)` of the far and near end values of `v` on the
/// interval `s ∈ [(d−1)H, dH]` for `∫ s^p v(t_n − s) ds`.
fn product_weights(p: f64, h: f64, count: usize) -> Vec<(f64, f64)> {
    (1..=count)
        .map(|d| {
            let sa = d as f64 * h;
            let sb = (d - 1) as f64 * h;
            let f0 = (sa.powf(p + 1.0) - sb.powf(p + 1.0)) / (p + 1.0);
            let f1 = (sa.powf(p + 2.0) - sb.powf(p + 2.0)) / (p + 2.0);
            ((f1 - sb * f0) / h, (sa * f0 - f1) / h)
        })
        .collect()
}

/// Product-integration solution on `t_i = i·T/M`, `i = 0 … M`.
pub fn solve_volterra(problem: &VolterraProblem) -> Result<VolterraSolution> {
    problem.validate()?;
    let m = problem.m;
    let h = problem.t_final / m as f64;
    let t: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let g: Vec<f64> = t.iter().map(|&ti| problem.forcing(ti)).collect();
    let lin = product_weights(1.0, h, m);
    let sing = product_weights(-problem.gamma, h, m);
    let lam = problem.lambda;
    let c = problem.a_gamma * rgamma(1.0 - problem.gamma);

    let mut v = vec![0.0; m + 1];
    v[0] = (problem.f)(0.0) - lam * problem.u0;
    for n in 1..=m {
        let mut known = 0.0;
        for j in 0..n {
            let (al, bl) = lin[n - j - 1];
            let (as_, bs) = sing[n - j - 1];
            known += (lam * al + c * as_) * v[j];
            if j + 1 < n {
                known += (lam * bl + c * bs) * v[j + 1];
            }
        }
        let diag = 1.0 + lam * lin[0].1 + c * sing[0].1;
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::DegenerateVolterra(n));
        }
        v[n] = (g[n] - known) / diag;
    }

    let mut u = vec![0.0; m + 1];
    for n in 0..=m {
        let mut s = 0.0;
        for j in 0..n {
            let (a, b) = lin[n - j - 1];
            s += a * v[j] + b * v[j + 1];
        }
        u[n] = problem.u0 + t[n] * problem.v0 + s;
    }
    Ok(VolterraSolution { t, v, u, g })
}

/// What the early-time behaviour of `u''` is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// The Volterra right-hand side `g`.
    Forcing,
    /// `f(t) − λu0`.
    SourceMinusStiffness,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    pub exponent: f64,
    /// Signed leading coefficient `c` in `u'' − baseline ≈ c·t^exponent`.
    pub coefficient: f64,
    pub points: usize,
}

/// Least-squares fit of `log|u'' − baseline|` against `log t` over the grid
/// points in `[4H, 64H]`.
pub fn asymptotic_check(
    problem: &VolterraProblem,
    sol: &VolterraSolution,
    baseline: Baseline,
) -> Result<AsymptoticFit> {
    let h = problem.t_final / problem.m as f64;
    let (lo, hi) = (4.0 * h, 64.0 * h);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sign = 0.0;
    for (i, &ti) in sol.t.iter().enumerate() {
        if ti < lo * (1.0 - 1e-12) || ti > hi * (1.0 + 1e-12) {
            continue;
        }
        let base = match baseline {
            Baseline::Forcing => sol.g[i],
            Baseline::SourceMinusStiffness => (problem.f)(ti) - problem.lambda * problem.u0,
        };
        let r = sol.v[i] - base;
        if r == 0.0 || (sign != 0.0 && r.signum() != sign) {
            return Err(Error::FitFailed(format!("residual changes sign near t = {ti:e}")));
        }
        sign = r.signum();
        xs.push(ti.ln());
        ys.push(r.abs().ln());
    }
    if xs.len() < 3 {
        return Err(Error::FitFailed(format!(
            "only {} samples in the fit window",
            xs.len()
        )));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    Ok(AsymptoticFit {
        exponent: slope,
        coefficient: sign * intercept.exp(),
        points: xs.len(),
    })
}

/// Slope and intercept of the least-squares line through `(x, y)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Result of comparing a second difference quotient with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondDifferenceCheck {
    /// `|g''(t) − κ⁻²(g(t+κ) − 2g(t) + g(t−κ))|`
    pub error: f64,
    /// `κ∫_{t−κ}^{t+κ}|g⁽⁴⁾|` for `t ≥ 2κ`, `∫_0^{2κ}|g⁽³⁾|` at `t = κ`.
    pub bound: f64,
}

impl SecondDifferenceCheck {
    /// Smallest constant for which the bound holds.
    pub fn constant(&self) -> f64 {
        if self.bound == 0.0 {
            if self.error == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.error / self.bound
        }
    }
}

/// Evaluates the second-difference error and its integral bound at `t = κ`
/// or `t ≥ 2κ`. `d2`, `d3`, `d4` are the derivatives of `g`.
pub fn second_difference_error(
    g: impl Fn(f64) -> f64,
    d2: impl Fn(f64) -> f64,
    d3: impl Fn(f64) -> f64,
    d4: impl Fn(f64) -> f64,
    t: f64,
    kappa: f64,
) -> Result<SecondDifferenceCheck> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("step {kappa} must be positive")));
    }
    let error = (d2(t) - (g(t + kappa) - 2.0 * g(t) + g(t - kappa)) / (kappa * kappa)).abs();
    let quad = Adaptive {
        abs_tol: 1e-14,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let bound = if (t - kappa).abs() <= 1e-12 * kappa {
        quad.integrate(0.0, 2.0 * kappa, |s| d3(s).abs())
            .or_else(|e| match e {
                // integrable endpoint singularities converge slowly
                Error::QuadratureNotConverged { .. } => {
                    Adaptive { rel_tol: 1e-6, ..quad }.integrate(0.0, 2.0 * kappa, |s| d3(s).abs())
                }
                other => Err(other),
            })?
    } else if t >= 2.0 * kappa * (1.0 - 1e-12) {
        kappa * quad.integrate(t - kappa, t + kappa, |s| d4(s).abs())?
    } else {
        return Err(Error::Domain(format!(
            "bound only covers t = κ or t ≥ 2κ, got t = {t}, κ = {kappa}"
        )));
    };
    Ok(SecondDifferenceCheck { error, bound })
}

/// The single-mode fully discrete recurrence
/// `(d_{n+1} − 2d_n + d_{n−1})/κ² + λd_n + a ∂κ^γ∂̄t d(t_n) = f(t_n)`
/// with the same startup as the finite element solver:
/// `d_1 = d_0 + κv_0 + (κ²/2)(f(0) − λd_0)` and `∂̄t d(0) = v_0`.
#[allow(clippy::too_many_arguments)]
pub fn scalar_cq_solve(
    gamma: f64,
    lambda: f64,
    a_gamma: f64,
    f: &dyn Fn(f64) -> f64,
    d0: f64,
    v0: f64,
    kappa: f64,
    steps: usize,
    corrected: bool,
) -> Result<Vec<f64>> {
    let scheme = CqScheme::new(gamma, kappa, steps)?;
    let mut d = Vec::with_capacity(steps + 1);
    d.push(d0);
    d.push(d0 + kappa * v0 + 0.5 * kappa * kappa * (f(0.0) - lambda * d0));
    // central differences, with a zero placeholder for the unknown one
    let mut h = vec![v0];
    let k2 = kappa * kappa;
    for n in 1..steps {
        h.push(0.0);
        let known = if corrected {
            scheme.apply_corrected(&h, n)?
        } else {
            scheme.apply(&h, n)?
        };
        let mut coef = scheme.omega()[0];
        if corrected && n == 1 {
            coef += scheme.w1()[1];
        }
        let alpha = a_gamma * coef / (2.0 * kappa);
        let t = n as f64 * kappa;
        let rhs = (2.0 * d[n] - d[n - 1]) / k2 - lambda * d[n] + f(t) + alpha * d[n - 1]
            - a_gamma * known;
        let next = rhs / (1.0 / k2 + alpha);
        h[n] = (next - d[n - 1]) / (2.0 * kappa);
        d.push(next);
    }
    Ok(d)
}
