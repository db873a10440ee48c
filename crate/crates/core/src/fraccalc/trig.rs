//! Fractional integrals and Caputo derivatives of `sin(ωt)` and `cos(ωt)`.
//!
//! Termwise Taylor summation loses about `eps · e^{ωt}` to cancellation, which
//! is already ~1e-7 for `sin(24t)` at `t = 1`. Here the kernel integral is split
//! instead: a short power series on `[0, δ]` with `ωδ ≤ 1` absorbs the
//! endpoint singularity, and the smooth remainder is integrated with
//! composite Gauss–Legendre panels.

use super::gamma::rgamma;
use crate::error::{domain, Result};
use crate::quad::GaussLegendre;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    Sin,
    Cos,
}

impl TrigKind {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TrigKind::Sin => x.sin(),
            TrigKind::Cos => x.cos(),
        }
    }

    /// n-th derivative of `trig(ωt)` as `(factor, kind)` with
    /// `d^n/dt^n trig(ωt) = factor · kind(ωt)`.
    pub fn derivative(self, omega: f64, n: u32) -> (f64, TrigKind) {
        let mut factor = 1.0;
        let mut kind = self;
        for _ in 0..n {
            match kind {
                TrigKind::Sin => kind = TrigKind::Cos,
                TrigKind::Cos => {
                    kind = TrigKind::Sin;
                    factor = -factor;
                }
            }
            factor *= omega;
        }
        (factor, kind)
    }
}

fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// `(∫_0^t s^{β-1} cos(ωs) ds, ∫_0^t s^{β-1} sin(ωs) ds)` for `β > 0`.
fn power_trig_moments(beta: f64, omega: f64, t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    let w = omega.abs();
    if w == 0.0 {
        return (t.powf(beta) / beta, 0.0);
    }
    let delta = t.min(1.0 / w);

    // series part on [0, δ]
    let x = w * delta;
    let mut c = 0.0;
    let mut s = 0.0;
    // term_k = (-1)^k x^k / k! · δ^β / (k + β) alternating between cos and sin parts
    let mut pow_over_fact = 1.0;
    for k in 0..60 {
        let term = pow_over_fact / (k as f64 + beta);
        match k % 4 {
            0 => c += term,
            1 => s += term,
            2 => c -= term,
            _ => s -= term,
        }
        pow_over_fact *= x / (k as f64 + 1.0);
        if pow_over_fact < 1e-18 {
            break;
        }
    }
    let scale = delta.powf(beta);
    c *= scale;
    s *= scale;

    // smooth part on [δ, t]
    let rule = panel_rule();
    let mut a = delta;
    while a < t {
        let width = a.min(2.0 / w).min(t - a);
        let b = if t - (a + width) < 1e-14 * t { t } else { a + width };
        c += rule.integrate(a, b, |v| v.powf(beta - 1.0) * (w * v).cos());
        s += rule.integrate(a, b, |v| v.powf(beta - 1.0) * (w * v).sin());
        a = b;
    }
    (c, s * omega.signum())
}

/// Riemann–Liouville integral of order `beta` of `trig(ωt)`:
/// `(1/Γ(β)) ∫_0^t s^{β-1} trig(ω(t-s)) ds`.
pub fn rl_integral_trig(beta: f64, kind: TrigKind, omega: f64, t: f64) -> Result<f64> {
    if beta <= 0.0 {
        return domain(format!("integral order {beta} must be positive"));
    }
    if t < 0.0 {
        return domain(format!("time {t} must be non-negative"));
    }
    let (c, s) = power_trig_moments(beta, omega, t);
    let (sin_wt, cos_wt) = (omega * t).sin_cos();
    let v = match kind {
        TrigKind::Sin => sin_wt * c - cos_wt * s,
        TrigKind::Cos => cos_wt * c + sin_wt * s,
    };
    Ok(v * rgamma(beta))
}

/// Caputo derivative of order `order ∈ (-1, 2]` of `trig(ωt)`; negative orders
/// are Riemann–Liouville integrals.
pub fn caputo_trig(kind: TrigKind, omega: f64, order: f64, t: f64) -> Result<f64> {
    if order <= -1.0 || order > 2.0 {
        return domain(format!("order {order} outside (-1, 2]"));
    }
    if order < 0.0 {
        return rl_integral_trig(-order, kind, omega, t);
    }
    let n = order.ceil() as u32;
    let (factor, dkind) = kind.derivative(omega, n);
    if order == n as f64 {
        return Ok(factor * dkind.eval(omega * t));
    }
    Ok(factor * rl_integral_trig(n as f64 - order, dkind, omega, t)?)
}
