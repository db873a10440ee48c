//! Manufactured-solution experiments: convergence studies under joint
//! refinement of `h` and `κ`, the damping demonstration and the table of
//! positivity constants.

mod case;

pub use case::{CaseName, ErrorNorm, ManufacturedCase, TemporalFactor};

use crate::error::{Error, Result};
use crate::fem::{Domain, FemSystem, Point};
use crate::fraccalc::{positivity_constants, FracParams};
use crate::oracle::least_squares;
use crate::solver::{run, step_count, Initial, Observer, RunOptions, SimConfig, Source};
use rayon::prelude::*;
use std::io::Write;
use std::sync::Arc;

/// Difference between the last-two-level rate and the global fit above
/// which a rate is reported as pre-asymptotic.
pub const PRE_ASYMPTOTIC_GAP: f64 = 0.2;

type MassNorm = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Both error norms of a trajectory against `θ(t)·I_h S`.
struct ErrorObserver {
    spatial: Vec<f64>,
    temporal: TemporalFactor,
    fem_mass: MassNorm,
    energy: f64,
    l2max: f64,
}

impl ErrorObserver {
    fn norm(&self, x: &[f64]) -> f64 {
        (self.fem_mass)(x)
    }
}

impl Observer for ErrorObserver {
    fn start(&mut self, u0: &[f64], _kappa: f64) -> Result<()> {
        let th = self.temporal.value(0.0);
        let e: Vec<f64> = u0.iter().zip(&self.spatial).map(|(u, s)| u - th * s).collect();
        self.l2max = self.l2max.max(self.norm(&e));
        Ok(())
    }

    fn step(&mut self, n: usize, t: f64, u_prev: &[f64], u: &[f64]) -> Result<()> {
        let kappa = t / n as f64;
        let half = t - 0.5 * kappa;
        let th = self.temporal.value(half);
        let dth = self.temporal.derivative(1, half);
        let mut ev = Vec::with_capacity(u.len());
        let mut eu = Vec::with_capacity(u.len());
        for ((a, b), s) in u.iter().zip(u_prev).zip(&self.spatial) {
            ev.push((a - b) / kappa - dth * s);
            eu.push(0.5 * (a + b) - th * s);
        }
        self.energy = self.energy.max(self.norm(&ev) + self.norm(&eu));
        let tn = self.temporal.value(t);
        let e: Vec<f64> = u.iter().zip(&self.spatial).map(|(a, s)| a - tn * s).collect();
        self.l2max = self.l2max.max(self.norm(&e));
        Ok(())
    }
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    pub n_per_side: usize,
    pub h: f64,
    pub kappa: f64,
    pub error_energy: f64,
    pub error_l2max: f64,
}

/// Observed order of convergence from a sequence of halved step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Least-squares slope of `−log₂(error)` against the level.
    pub global: f64,
    /// `log₂(e_{L−2}/e_{L−1})`
    pub last_two: f64,
    pub pre_asymptotic: bool,
}

impl RateFit {
    pub fn from_errors(errors: &[f64]) -> Option<Self> {
        if errors.len() < 2 || errors.iter().any(|e| !(*e > 0.0)) {
            return None;
        }
        let x: Vec<f64> = (0..errors.len()).map(|i| i as f64).collect();
        let y: Vec<f64> = errors.iter().map(|e| -e.log2()).collect();
        let (global, _) = least_squares(&x, &y);
        let l = errors.len();
        let last_two = (errors[l - 2] / errors[l - 1]).log2();
        Some(Self {
            global,
            last_two,
            pre_asymptotic: (global - last_two).abs() >= PRE_ASYMPTOTIC_GAP,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOptions {
    pub levels: usize,
    pub corrected: bool,
    /// `h/κ`; the case default when absent.
    pub coupling: Option<f64>,
    /// Coarsest time step; the case default when absent.
    pub kappa0: Option<f64>,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            levels: 4,
            corrected: false,
            coupling: None,
            kappa0: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub case: CaseName,
    pub gamma: f64,
    pub alpha0: f64,
    pub corrected: bool,
    pub coupling: f64,
    pub norm: ErrorNorm,
    pub levels: Vec<LevelResult>,
    pub rate_energy: Option<RateFit>,
    pub rate_l2max: Option<RateFit>,
}

impl ConvergenceReport {
    /// Rate in the case's own error norm.
    pub fn rate(&self) -> Option<RateFit> {
        match self.norm {
            ErrorNorm::Energy => self.rate_energy,
            ErrorNorm::L2Max => self.rate_l2max,
        }
    }

    /// Error of one level in the case's own norm.
    pub fn error_of(&self, level: &LevelResult) -> f64 {
        match self.norm {
            ErrorNorm::Energy => level.error_energy,
            ErrorNorm::L2Max => level.error_l2max,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "level,h,kappa,error_energy,error_l2max")?;
        for l in &self.levels {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                l.level, l.h, l.kappa, l.error_energy, l.error_l2max
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        match self.rate() {
            Some(r) => format!(
                "case={} gamma={} alpha0={} corrected={} rate={:.4} last_two={:.4}{}",
                self.case,
                self.gamma,
                self.alpha0,
                self.corrected,
                r.global,
                r.last_two,
                if r.pre_asymptotic { " pre-asymptotic" } else { "" }
            ),
            None => format!("case={} rate=unavailable", self.case),
        }
    }
}

/// Runs one refinement level: mesh with `n` cells per side, step `kappa`.
pub fn run_level(
    case: &ManufacturedCase,
    n_per_side: usize,
    kappa: f64,
    corrected: bool,
) -> Result<(f64, f64)> {
    let fem = FemSystem::build(case.domain, n_per_side)?;
    let steps = step_count(case.t_final, kappa);
    let temporal: Vec<f64> = (0..=steps)
        .map(|n| case.source_temporal(n as f64 * kappa))
        .collect::<Result<_>>()?;
    let temporal = Arc::new(temporal);
    let load = fem.load_vector(|p| case.spatial(p));
    let source = Source::Separable {
        load,
        temporal: Arc::new(move |t: f64| {
            let i = (t / kappa).round() as usize;
            temporal[i.min(temporal.len() - 1)]
        }),
    };
    let cfg = SimConfig::new(&fem, Some(case.frac), case.t_final, kappa, false)?
        .with_corrected(corrected)
        .with_source(source)
        .with_initial(case.initial_displacement(), case.initial_velocity());

    let mass = fem.mass().clone();
    let mut obs = ErrorObserver {
        spatial: fem.interpolate(|p| case.spatial(p)),
        temporal: case.temporal.clone(),
        fem_mass: Arc::new(move |x: &[f64]| {
            let mut y = vec![0.0; x.len()];
            crate::fem::spmv(&mass, x, &mut y);
            crate::fem::dot(x, &y).max(0.0).sqrt()
        }),
        energy: 0.0,
        l2max: 0.0,
    };
    run(&cfg, &RunOptions::default(), Some(&mut obs))?;
    Ok((obs.energy, obs.l2max))
}

/// Halves `κ` per level with `h ≈ c·κ`. The coarsest mesh has
/// `⌈L/(c κ₀)⌉` cells per side and is refined uniformly, so `h/κ` is the
/// same on every level.
pub fn run_convergence(case: &ManufacturedCase, opts: &ConvergenceOptions) -> Result<ConvergenceReport> {
    if opts.levels < 3 {
        return Err(Error::Domain(format!(
            "a rate fit needs at least 3 levels, got {}",
            opts.levels
        )));
    }
    let coupling = opts.coupling.unwrap_or(case.coupling);
    let kappa0 = opts.kappa0.unwrap_or(case.kappa0);
    if !(coupling > 0.0) || !(kappa0 > 0.0) {
        return Err(Error::Domain("coupling and κ₀ must be positive".into()));
    }
    let n0 = ((case.domain.side() / (coupling * kappa0)) * (1.0 - 1e-12)).ceil() as usize;
    let n0 = n0.max(2);
    let mut levels: Vec<LevelResult> = (0..opts.levels)
        .into_par_iter()
        .map(|l| {
            let n = n0 << l;
            let kappa = kappa0 / (1u64 << l) as f64;
            let (ee, el) = run_level(case, n, kappa, opts.corrected).map_err(|e| Error::Level {
                level: l,
                source: Box::new(e),
            })?;
            Ok(LevelResult {
                level: l,
                n_per_side: n,
                h: case.domain.side() / n as f64,
                kappa,
                error_energy: ee,
                error_l2max: el,
            })
        })
        .collect::<Result<_>>()?;
    levels.sort_by_key(|l| l.level);
    let ee: Vec<f64> = levels.iter().map(|l| l.error_energy).collect();
    let el: Vec<f64> = levels.iter().map(|l| l.error_l2max).collect();
    Ok(ConvergenceReport {
        case: case.name,
        gamma: case.frac.gamma(),
        alpha0: case.frac.alpha0(),
        corrected: opts.corrected,
        coupling,
        norm: case.norm,
        rate_energy: RateFit::from_errors(&ee),
        rate_l2max: RateFit::from_errors(&el),
        levels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampingOptions {
    pub gammas: Vec<f64>,
    pub alpha0: f64,
    pub n_per_side: usize,
    pub t_final: f64,
    /// `h/κ`
    pub kappa_ratio: f64,
    pub corrected: bool,
}

impl Default for DampingOptions {
    fn default() -> Self {
        Self {
            gammas: vec![-0.75, -0.25, 0.25, 0.75],
            alpha0: 1.0,
            n_per_side: 64,
            t_final: 2.0,
            kappa_ratio: 10.0,
            corrected: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DampingTrace {
    /// `None` for the undamped run.
    pub gamma: Option<f64>,
    pub values: Vec<f64>,
    /// `E_1 … E_N`.
    pub energy: Vec<f64>,
}

impl DampingTrace {
    /// `max |u(t_n)|` over `t_n ≥ t_from`.
    pub fn late_amplitude(&self, kappa: f64, t_from: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(n, _)| *n as f64 * kappa >= t_from)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct DampingResult {
    pub kappa: f64,
    pub traces: Vec<DampingTrace>,
}

impl DampingResult {
    /// `t`, then the undamped trace, then one column per order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = self
            .traces
            .iter()
            .map(|tr| match tr.gamma {
                None => "undamped".to_string(),
                Some(g) => format!("gamma_{g}"),
            })
            .collect();
        writeln!(out, "t,{}", header.join(","))?;
        let len = self.traces.first().map_or(0, |t| t.values.len());
        for n in 0..len {
            let vals: Vec<String> = self
                .traces
                .iter()
                .map(|tr| format!("{:.16e}", tr.values[n]))
                .collect();
            writeln!(out, "{:.16e},{}", n as f64 * self.kappa, vals.join(","))?;
        }
        Ok(())
    }
}

/// Gaussian pulse `e^{−10(x²+y²)}` on `[−1, 1]²` released from rest, traced
/// at the origin for the undamped equation and each requested order.
pub fn run_damping_demo(opts: &DampingOptions) -> Result<DampingResult> {
    if !opts.n_per_side.is_multiple_of(2) {
        return Err(Error::Domain("the origin must be a mesh node: use an even n".into()));
    }
    let fem = FemSystem::build(Domain::symmetric_square(), opts.n_per_side)?;
    let origin = fem
        .mesh()
        .find_node([0.0, 0.0])
        .ok_or_else(|| Error::Domain("origin is not a mesh node".into()))?;
    let kappa = fem.h() / opts.kappa_ratio;
    fem.inverse_constant()?;
    let pulse = Initial::Field(Arc::new(crate::fem::FnField(
        |p: Point| (-10.0 * (p[0] * p[0] + p[1] * p[1])).exp(),
        |p: Point| {
            let e = (-10.0 * (p[0] * p[0] + p[1] * p[1])).exp();
            [-20.0 * p[0] * e, -20.0 * p[1] * e]
        },
    )));
    let mut runs: Vec<Option<f64>> = vec![None];
    runs.extend(opts.gammas.iter().map(|&g| Some(g)));
    let traces = runs
        .par_iter()
        .map(|&g| {
            let frac = g.map(|g| FracParams::new(g, opts.alpha0)).transpose()?;
            let cfg = SimConfig::new(&fem, frac, opts.t_final, kappa, false)?
                .with_corrected(opts.corrected)
                .with_initial(pulse.clone(), Initial::Zero);
            let run_opts = RunOptions {
                trace_nodes: vec![origin],
                snapshot_steps: vec![],
            };
            let tr = run(&cfg, &run_opts, None)?;
            Ok(DampingTrace {
                gamma: g,
                values: tr.traces[0].values.clone(),
                energy: tr.energy,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DampingResult { kappa, traces })
}

/// `(γ_k, C1, C2)` at `γ_k = k/(n+1)`, `k = 1 … n`, and `T = 1`.
pub fn run_constants_figure(grid_points: usize) -> Result<Vec<(f64, f64, f64)>> {
    (1..=grid_points)
        .map(|k| {
            let g = k as f64 / (grid_points + 1) as f64;
            let (c1, c2) = positivity_constants(g, 1.0)?;
            Ok((g, c1, c2))
        })
        .collect()
}

pub fn write_constants_csv<W: Write>(rows: &[(f64, f64, f64)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "gamma,C1,C2")?;
    for (g, c1, c2) in rows {
        writeln!(out, "{g:.16e},{c1:.16e},{c2:.16e}")?;
    }
    Ok(())
}
