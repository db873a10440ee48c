use crate::error::{Error, Result};
use crate::fem::{Domain, FnField, Point};
use crate::fraccalc::{caputo_monomial, caputo_trig, gamma, rgamma, FracParams, MonomialFrac, TrigKind};
use crate::quad;
use crate::solver::Initial;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseName {
    Smooth1d,
    Smooth2d,
    Nonsmooth1d,
}

impl FromStr for CaseName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth1d" => Ok(CaseName::Smooth1d),
            "smooth2d" => Ok(CaseName::Smooth2d),
            "nonsmooth1d" => Ok(CaseName::Nonsmooth1d),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseName::Smooth1d => "smooth1d",
            CaseName::Smooth2d => "smooth2d",
            CaseName::Nonsmooth1d => "nonsmooth1d",
        })
    }
}

/// Norm in which a case's convergence is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorNorm {
    /// Velocity and displacement at half steps, maximised over time.
    Energy,
    /// `max_n ‖u_n − u(t_n)‖`
    L2Max,
}

/// Time factor `θ(t)` of a separable exact solution `u = θ(t)·S(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TemporalFactor {
    /// `sin(24t) + cos(12t)`
    Trig,
    /// `Σ c_k t^{μ_k}`
    Powers(Vec<MonomialFrac>),
}

impl TemporalFactor {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TemporalFactor::Trig => (24.0 * t).sin() + (12.0 * t).cos(),
            TemporalFactor::Powers(terms) => terms.iter().map(|m| m.eval(t)).sum(),
        }
    }

    /// n-th classical derivative, `n ≤ 2`.
    pub fn derivative(&self, n: u32, t: f64) -> f64 {
        match self {
            TemporalFactor::Trig => {
                let (a, ka) = TrigKind::Sin.derivative(24.0, n);
                let (b, kb) = TrigKind::Cos.derivative(12.0, n);
                a * ka.eval(24.0 * t) + b * kb.eval(12.0 * t)
            }
            TemporalFactor::Powers(terms) => terms
                .iter()
                .map(|m| {
                    let mut c = m.coefficient;
                    for i in 0..n {
                        c *= m.mu - i as f64;
                    }
                    if c == 0.0 {
                        0.0
                    } else {
                        c * t.powf(m.mu - n as f64)
                    }
                })
                .sum(),
        }
    }

    /// Caputo derivative of order `order ∈ (−1, 2]`.
    pub fn caputo(&self, order: f64, t: f64) -> Result<f64> {
        match self {
            TemporalFactor::Trig => {
                Ok(caputo_trig(TrigKind::Sin, 24.0, order, t)?
                    + caputo_trig(TrigKind::Cos, 12.0, order, t)?)
            }
            TemporalFactor::Powers(terms) => {
                let mut s = 0.0;
                for m in terms {
                    s += m.coefficient * caputo_monomial(order, m.mu, t)?;
                }
                Ok(s)
            }
        }
    }
}

/// Exact solution `u(x, t) = θ(t)·S(x)` with the source term derived from it.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub name: CaseName,
    pub frac: FracParams,
    pub temporal: TemporalFactor,
    pub domain: Domain,
    /// Default ratio `h/κ`.
    pub coupling: f64,
    /// Default coarsest time step.
    pub kappa0: f64,
    pub t_final: f64,
    pub norm: ErrorNorm,
}

impl ManufacturedCase {
    pub fn build(name: CaseName, frac: FracParams) -> Self {
        match name {
            CaseName::Smooth1d => Self {
                name,
                frac,
                temporal: TemporalFactor::Trig,
                domain: Domain::unit_interval(),
                coupling: 6.0,
                kappa0: 1.0 / 64.0,
                t_final: 1.0,
                norm: ErrorNorm::Energy,
            },
            CaseName::Smooth2d => Self {
                name,
                frac,
                temporal: TemporalFactor::Trig,
                domain: Domain::symmetric_square(),
                coupling: 10.0,
                kappa0: 1.0 / 40.0,
                t_final: 1.0,
                norm: ErrorNorm::L2Max,
            },
            CaseName::Nonsmooth1d => {
                let c = frac.ceil_gamma();
                let g = frac.gamma();
                let mu = 2.0 + c - g;
                let terms = vec![
                    MonomialFrac { mu: 0.0, coefficient: 1.0 },
                    MonomialFrac { mu: 1.0, coefficient: 1.0 },
                    MonomialFrac { mu: 2.0, coefficient: 1.0 },
                    MonomialFrac {
                        mu,
                        coefficient: -frac.a_gamma() / gamma(3.0 - g + c),
                    },
                ];
                Self {
                    name,
                    frac,
                    temporal: TemporalFactor::Powers(terms),
                    domain: Domain::unit_interval(),
                    coupling: 6.0,
                    kappa0: 1.0 / 64.0,
                    t_final: 1.0,
                    norm: ErrorNorm::Energy,
                }
            }
        }
    }

    pub fn from_name(name: &str, frac: FracParams) -> Result<Self> {
        Ok(Self::build(name.parse()?, frac))
    }

    /// Spatial factor `S(x)`.
    pub fn spatial(&self, p: Point) -> f64 {
        match self.domain.dimension() {
            1 => (PI * p[0]).sin(),
            _ => (PI * p[0]).sin() * (PI * p[1]).sin(),
        }
    }

    pub fn spatial_gradient(&self, p: Point) -> Point {
        match self.domain.dimension() {
            1 => [PI * (PI * p[0]).cos(), 0.0],
            _ => [
                PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
                PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
            ],
        }
    }

    /// `−ΔS = μ·S`
    pub fn laplace_eigenvalue(&self) -> f64 {
        self.domain.dimension() as f64 * PI * PI
    }

    pub fn u(&self, p: Point, t: f64) -> f64 {
        self.temporal.value(t) * self.spatial(p)
    }

    pub fn u_t(&self, p: Point, t: f64) -> f64 {
        self.temporal.derivative(1, t) * self.spatial(p)
    }

    /// Time factor of the source: `θ'' + μθ + a_γ ∂t^{γ+1}θ`.
    pub fn source_temporal(&self, t: f64) -> Result<f64> {
        let tf = &self.temporal;
        Ok(tf.derivative(2, t)
            + self.laplace_eigenvalue() * tf.value(t)
            + self.frac.a_gamma() * tf.caputo(self.frac.gamma() + 1.0, t)?)
    }

    pub fn source(&self, p: Point, t: f64) -> Result<f64> {
        Ok(self.source_temporal(t)? * self.spatial(p))
    }

    fn spatial_field(&self, scale: f64) -> Initial {
        let a = self.clone();
        let b = self.clone();
        Initial::Field(Arc::new(FnField(
            move |p: Point| scale * a.spatial(p),
            move |p: Point| {
                let g = b.spatial_gradient(p);
                [scale * g[0], scale * g[1]]
            },
        )))
    }

    pub fn initial_displacement(&self) -> Initial {
        self.spatial_field(self.temporal.value(0.0))
    }

    pub fn initial_velocity(&self) -> Initial {
        self.spatial_field(self.temporal.derivative(1, 0.0))
    }

    /// Damping term `∂t^{γ+1}θ(t)` evaluated by adaptive quadrature of the
    /// classical derivative against the Abel kernel.
    pub fn caputo_by_quadrature(&self, t: f64) -> Result<f64> {
        let g = self.frac.gamma();
        let tf = &self.temporal;
        if g > 0.0 {
            Ok(quad::weakly_singular(-g, t, |s| tf.derivative(2, s))? * rgamma(1.0 - g))
        } else {
            Ok(quad::weakly_singular(-g - 1.0, t, |s| tf.derivative(1, s))? * rgamma(-g))
        }
    }

    /// Largest relative deviation, over `samples` seeded random points, of
    /// the closed-form source from one whose damping term is evaluated by
    /// quadrature.
    pub fn rhs_consistency(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let p = match self.domain {
                Domain::Interval { a, b } => [rng.random_range(a..b), 0.0],
                Domain::Rectangle { a, b, c, d } => [rng.random_range(a..b), rng.random_range(c..d)],
            };
            let t = rng.random_range(0.0..self.t_final);
            let f = self.source(p, t)?;
            let tf = &self.temporal;
            let reference = (tf.derivative(2, t)
                + self.laplace_eigenvalue() * tf.value(t)
                + self.frac.a_gamma() * self.caputo_by_quadrature(t)?)
                * self.spatial(p);
            worst = worst.max((f - reference).abs() / f.abs().max(1.0));
        }
        Ok(worst)
    }
}
