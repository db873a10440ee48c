//! Closed-form fractional calculus: the damping coefficient `a_γ`,
//! Riemann–Liouville integrals and Caputo derivatives of monomials and of
//! trigonometric time factors, and the positivity constants `C1`, `C2`.

pub mod gamma;
pub mod trig;

use crate::error::{domain, Error, Result};
use std::f64::consts::PI;

pub use gamma::{gamma, gamma_ratio, ln_gamma, rgamma, sin_pi};
pub use trig::{caputo_trig, rl_integral_trig, TrigKind};

/// Upper bound on the number of series terms summed by [`caputo_series`].
pub const MAX_SERIES_TERMS: usize = 500;

/// Default truncation tolerance for [`caputo_series`].
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;

/// Fractional order and damping coefficient of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    gamma: f64,
    alpha0: f64,
    a_gamma: f64,
}

impl FracParams {
    pub fn new(gamma: f64, alpha0: f64) -> Result<Self> {
        let a = a_gamma(gamma, alpha0)?;
        Ok(Self {
            gamma,
            alpha0,
            a_gamma: a,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn a_gamma(&self) -> f64 {
        self.a_gamma
    }

    /// `⌈γ⌉`: 0 for negative orders, 1 for positive.
    pub fn ceil_gamma(&self) -> f64 {
        self.gamma.ceil()
    }
}

pub(crate) fn check_order(gamma: f64) -> Result<()> {
    if !(gamma > -1.0 && gamma < 1.0) || gamma == 0.0 {
        return domain(format!("fractional order {gamma} must lie in (-1, 0) ∪ (0, 1)"));
    }
    Ok(())
}

/// `a_γ = -α₀ (4/π) Γ(-γ-1) Γ(γ+2) cos((γ+1)π/2)`.
pub fn a_gamma(gamma_: f64, alpha0: f64) -> Result<f64> {
    check_order(gamma_)?;
    if !(alpha0 > 0.0) {
        return domain(format!("media constant alpha0 = {alpha0} must be positive"));
    }
    // cos((γ+1)π/2) = sin(π(γ+2)/2) avoids the rounding of cos near its zeros
    let c = sin_pi(0.5 * (gamma_ + 2.0));
    Ok(-alpha0 * 4.0 / PI * gamma(-gamma_ - 1.0) * gamma(gamma_ + 2.0) * c)
}

/// One term `coefficient · t^mu` of a (generalised) power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialFrac {
    pub mu: f64,
    pub coefficient: f64,
}

impl MonomialFrac {
    pub fn new(mu: f64, coefficient: f64) -> Result<Self> {
        if !(mu > -1.0) {
            return domain(format!("monomial exponent {mu} must exceed -1"));
        }
        Ok(Self { mu, coefficient })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coefficient * t.powf(self.mu)
    }
}

/// `I^β t^μ = Γ(μ+1)/Γ(μ+β+1) · t^{β+μ}`.
pub fn rl_integral_monomial(beta: f64, mu: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return domain(format!("integral order {beta} must be positive"));
    }
    if !(mu > -1.0) {
        return domain(format!("monomial exponent {mu} must exceed -1"));
    }
    if t < 0.0 {
        return domain(format!("time {t} must be non-negative"));
    }
    Ok(gamma_ratio(mu + 1.0, mu + beta + 1.0) * t.powf(beta + mu))
}

/// Caputo derivative of order `order > -1` of `t^μ`. Negative orders are
/// Riemann–Liouville integrals; positive orders vanish on integer powers
/// below the order.
pub fn caputo_monomial(order: f64, mu: f64, t: f64) -> Result<f64> {
    if !(order > -1.0) {
        return domain(format!("Caputo order {order} must exceed -1"));
    }
    if t < 0.0 {
        return domain(format!("time {t} must be non-negative"));
    }
    if order < 0.0 {
        return rl_integral_monomial(-order, mu, t);
    }
    if order == 0.0 {
        if !(mu > -1.0) {
            return domain(format!("monomial exponent {mu} must exceed -1"));
        }
        return Ok(t.powf(mu));
    }
    if !(mu >= 0.0) {
        return domain(format!(
            "positive-order Caputo derivative needs mu >= 0, got {mu}"
        ));
    }
    if mu.fract() == 0.0 && order > mu {
        return Ok(0.0);
    }
    let ratio = if mu + 1.0 > 100.0 {
        gamma_ratio(mu + 1.0, mu + 1.0 - order)
    } else {
        gamma(mu + 1.0) * rgamma(mu + 1.0 - order)
    };
    Ok(ratio * t.powf(mu - order))
}

/// Termwise Caputo derivative of a power series, truncated once a ratio-test
/// tail bound falls below `tol`.
///
/// The bound assumes that after the first term whose magnitude ratio drops
/// below one the ratios keep decreasing, as for Taylor series of entire
/// functions past their peak term.
pub fn caputo_series<I>(terms: I, order: f64, t: f64, tol: f64) -> Result<f64>
where
    I: IntoIterator<Item = MonomialFrac>,
{
    if !(tol > 0.0) {
        return domain(format!("tolerance {tol} must be positive"));
    }
    if !(t > 0.0) {
        return domain(format!("series evaluation needs t > 0, got {t}"));
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut prev_mag: Option<f64> = None;
    let mut prev_ratio = f64::INFINITY;
    let mut tail = f64::INFINITY;
    for (k, term) in terms.into_iter().enumerate() {
        if k >= MAX_SERIES_TERMS {
            return Err(Error::SeriesNotConverged { terms: k, tail });
        }
        let v = term.coefficient * caputo_monomial(order, term.mu, t)?;
        // Kahan summation
        let y = v - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;

        let mag = v.abs();
        if mag == 0.0 {
            continue;
        }
        if let Some(p) = prev_mag {
            let q = mag / p;
            if q < 1.0 && q <= prev_ratio {
                tail = mag * q / (1.0 - q);
                if tail < tol {
                    return Ok(sum);
                }
            }
            prev_ratio = q;
        }
        prev_mag = Some(mag);
    }
    Ok(sum)
}

/// Taylor terms of `amplitude · sin(ωt)`.
pub fn sin_taylor(omega: f64, amplitude: f64) -> impl Iterator<Item = MonomialFrac> {
    let mut coef = amplitude * omega;
    (0..).map(move |k: u32| {
        let mu = 2.0 * k as f64 + 1.0;
        let term = MonomialFrac {
            mu,
            coefficient: coef,
        };
        coef *= -omega * omega / ((mu + 1.0) * (mu + 2.0));
        term
    })
}

/// Taylor terms of `amplitude · cos(ωt)`.
pub fn cos_taylor(omega: f64, amplitude: f64) -> impl Iterator<Item = MonomialFrac> {
    let mut coef = amplitude;
    (0..).map(move |k: u32| {
        let mu = 2.0 * k as f64;
        let term = MonomialFrac {
            mu,
            coefficient: coef,
        };
        coef *= -omega * omega / ((mu + 1.0) * (mu + 2.0));
        term
    })
}

/// Positivity constants of the continuous fractional operator:
/// `C1` from the classical estimate and `C2 = (T/2)^{γ-1}/Γ(γ)`.
pub fn positivity_constants(gamma_: f64, t_final: f64) -> Result<(f64, f64)> {
    if !(gamma_ > 0.0 && gamma_ < 1.0) {
        return domain(format!("order {gamma_} must lie in (0, 1)"));
    }
    if !(t_final > 0.0) {
        return domain(format!("final time {t_final} must be positive"));
    }
    let g = gamma_;
    let c1 = PI.powf(1.0 - g) * (1.0 - g).powf(1.0 - g) / (2.0 - g).powf(2.0 - g)
        * (0.5 * PI * g).sin()
        * t_final.powf(g - 1.0);
    let c2 = (0.5 * t_final).powf(g - 1.0) * rgamma(g);
    Ok((c1, c2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_gamma_rejects_invalid_orders() {
        for g in [0.0, 1.0, -1.0, 1.5, -2.0, f64::NAN] {
            assert!(a_gamma(g, 1.0).is_err(), "{g}");
        }
        assert!(a_gamma(0.5, 0.0).is_err());
        assert!(a_gamma(0.5, -1.0).is_err());
    }

    #[test]
    fn a_gamma_linear_in_alpha0() {
        let a1 = a_gamma(0.5, 1.0).unwrap();
        let a2 = a_gamma(0.5, 2.0).unwrap();
        assert_eq!(a2, 2.0 * a1);
    }

    #[test]
    fn a_gamma_diverges_at_the_ends() {
        let mut last = 0.0;
        for g in [0.9, 0.99, 0.999, 0.9999] {
            let a = a_gamma(g, 1.0).unwrap();
            assert!(a > last);
            last = a;
        }
        assert!(last > 1e3);
        let mut last = 0.0;
        for g in [-0.9, -0.99, -0.999, -0.9999] {
            let a = a_gamma(g, 1.0).unwrap();
            assert!(a > last);
            last = a;
        }
        assert!(last > 1e3);
    }

    #[test]
    fn rl_integral_trivial_values() {
        assert!((rl_integral_monomial(1.0, 0.0, 3.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((rl_integral_monomial(2.0, 1.0, 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(rl_integral_monomial(0.0, 1.0, 1.0).is_err());
        assert!(rl_integral_monomial(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn caputo_zero_branch_and_negative_orders() {
        assert_eq!(caputo_monomial(0.5, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(caputo_monomial(1.5, 1.0, 2.0).unwrap(), 0.0);
        let a = caputo_monomial(-0.5, 0.0, 4.0).unwrap();
        let b = rl_integral_monomial(0.5, 0.0, 4.0).unwrap();
        assert_eq!(a, b);
        assert!(caputo_monomial(0.5, -0.5, 1.0).is_err());
        assert!(caputo_monomial(-1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn caputo_of_t_at_one() {
        let v = caputo_monomial(0.5, 1.0, 1.0).unwrap();
        assert!((v - 1.0 / gamma(1.5)).abs() < 1e-15);
    }

    #[test]
    fn integer_order_series_is_classical() {
        for &t in &[0.3, 1.0, 2.0] {
            let v = caputo_series(sin_taylor(1.0, 1.0), 1.0, t, 1e-14).unwrap();
            assert!((v - t.cos()).abs() < 1e-13, "t = {t}");
        }
    }

    #[test]
    fn constant_series_has_zero_derivative() {
        let terms = vec![MonomialFrac::new(0.0, 3.5).unwrap()];
        for g in [0.1, 0.5, 0.9] {
            assert_eq!(caputo_series(terms.clone(), g, 0.7, 1e-12).unwrap(), 0.0);
        }
    }

    #[test]
    fn series_agrees_with_split_trig_evaluation() {
        for &(g, t) in &[(0.5, 0.1), (0.25, 0.25), (-0.5, 0.3), (1.5, 0.2)] {
            let s = caputo_series(sin_taylor(24.0, 1.0), g, t, 1e-14).unwrap();
            let d = caputo_trig(TrigKind::Sin, 24.0, g, t).unwrap();
            assert!((s - d).abs() < 1e-10 * d.abs().max(1.0), "{g} {t}: {s} vs {d}");
            let s = caputo_series(cos_taylor(12.0, 1.0), g, t, 1e-14).unwrap();
            let d = caputo_trig(TrigKind::Cos, 12.0, g, t).unwrap();
            assert!((s - d).abs() < 1e-10 * d.abs().max(1.0), "{g} {t}: {s} vs {d}");
        }
    }

    #[test]
    fn series_reports_non_convergence() {
        // ratios never drop below one
        let terms = (0..).map(|k| MonomialFrac {
            mu: k as f64,
            coefficient: 2f64.powi(k),
        });
        assert!(matches!(
            caputo_series(terms, 0.5, 1.0, 1e-12),
            Err(Error::SeriesNotConverged { .. })
        ));
    }

    #[test]
    fn constants_limits_and_scaling() {
        let (_, c2) = positivity_constants(1.0 - 1e-12, 1.0).unwrap();
        assert!((c2 - 1.0).abs() < 1e-9);
        let (a1, a2) = positivity_constants(0.5, 1.0).unwrap();
        let (b1, b2) = positivity_constants(0.5, 2.0).unwrap();
        let s = 2f64.powf(-0.5);
        assert!((b1 / a1 - s).abs() < 1e-14);
        assert!((b2 / a2 - s).abs() < 1e-14);
        assert!(positivity_constants(0.0, 1.0).is_err());
        assert!(positivity_constants(-0.5, 1.0).is_err());
    }
}
