//! Command-line front end. Every subcommand reads an optional flat
//! `key = value` config file, lets flags override it, writes its outputs
//! plus a `<subcommand>.config` echo of the resolved settings into the
//! output directory, and with `--assert` runs the matching acceptance
//! checks.
//!
//! Exit codes: 0 success, 1 runtime or configuration error, 2 usage error,
//! 3 failed assertion.

use crate::checks::{self, Check};
use crate::cq::{bdf2_weights, CqScheme};
use crate::error::{Error, Result};
use crate::fem::{Domain, FemSystem, FnField, Point};
use crate::fraccalc::FracParams;
use crate::harness::{
    run_constants_figure, run_convergence, run_damping_demo, write_constants_csv, CaseName,
    ConvergenceOptions, DampingOptions, ManufacturedCase,
};
use crate::oracle::{asymptotic_check, solve_volterra, Baseline, VolterraProblem};
use crate::solver::{run, Initial, RunOptions, SimConfig};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ASSERT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fracwave", version, about = "Fractionally damped wave equation solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: fracwave-out]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run the acceptance checks for this subcommand; exit 3 on failure.
    #[arg(long)]
    pub assert: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BDF2 convolution weights and correction weights.
    Weights(WeightsArgs),
    /// Scalar fractional ODE by product integration, with the early-time fit.
    Ode(OdeArgs),
    /// Convergence study for a manufactured solution.
    Convergence(ConvergenceArgs),
    /// Gaussian pulse on [-1, 1]² traced at the origin for several orders.
    Damping(DampingArgs),
    /// Positivity constants C1, C2 on a grid in (0, 1).
    Constants(ConstantsArgs),
    /// Single run with energy log, point trace and snapshots.
    Solve(SolveArgs),
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Order γ; correction weights need γ ∈ (−1, 1) \ {0} [default: 0.5]
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Time step [default: 1/n]
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Largest weight index [default: 256]
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the random sequences in the positivity check [default: 20231]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    #[command(flatten)]
    pub common: Common,
    /// [default: 0.5]
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Modal stiffness λ ≥ 0 [default: 1]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Damping coefficient a ≥ 0 [default: 1]
    #[arg(long)]
    pub a_gamma: Option<f64>,
    /// Constant source [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<f64>,
    /// [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<f64>,
    /// [default: 1 for γ < 0, else 0]
    #[arg(long, allow_hyphen_values = true)]
    pub v0: Option<f64>,
    /// [default: 0.01]
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Number of substeps [default: 1024]
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: Common,
    /// smooth1d, smooth2d or nonsmooth1d [default: smooth1d]
    #[arg(long)]
    pub case: Option<String>,
    /// [default: -0.75]
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Use the corrected quadrature.
    #[arg(long)]
    pub corrected: bool,
    /// Number of refinement levels [default: 4]
    #[arg(long)]
    pub levels: Option<usize>,
    /// Ratio h/κ [default: 6 in 1D, 10 in 2D]
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Coarsest time step [default: 1/64 in 1D, 1/40 in 2D]
    #[arg(long)]
    pub kappa0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DampingArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated orders [default: -0.75,-0.25,0.25,0.75]
    #[arg(long, allow_hyphen_values = true)]
    pub gammas: Option<String>,
    /// [default: 1]
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Cells per side, even [default: 64]
    #[arg(long)]
    pub n: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Ratio h/κ [default: 10]
    #[arg(long)]
    pub kappa_ratio: Option<f64>,
    /// Use the corrected quadrature.
    #[arg(long)]
    pub corrected: bool,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of interior grid points [default: 99]
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// interval ([0, 1]) or square ([-1, 1]²) [default: interval]
    #[arg(long)]
    pub domain: Option<String>,
    /// Cells per side [default: 32]
    #[arg(long)]
    pub n: Option<usize>,
    /// Order, or `none` for the undamped equation [default: none]
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// [default: 1]
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Use the corrected quadrature.
    #[arg(long)]
    pub corrected: bool,
    /// [default: 1]
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Time step [default: cfl_fraction × CFL limit]
    #[arg(long)]
    pub kappa: Option<f64>,
    /// [default: 0.5]
    #[arg(long)]
    pub cfl_fraction: Option<f64>,
    /// Run even if κ exceeds the CFL limit.
    #[arg(long)]
    pub allow_cfl_violation: bool,
    /// sine (lowest mode) or gaussian (centred pulse) [default: sine]
    #[arg(long)]
    pub initial: Option<String>,
    /// Comma-separated steps to store [default: last step]
    #[arg(long)]
    pub snapshots: Option<String>,
    /// Traced point `x,y`; must be a mesh node [default: domain centre]
    #[arg(long, allow_hyphen_values = true)]
    pub trace: Option<String>,
}

/// Resolved `key = value` settings: flags over the config file over
/// defaults. Every value read is recorded for the config echo.
#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

/// Parses flat `key = value` text. `#` starts a comment; duplicate and
/// unknown keys are errors.
pub fn parse_config(text: &str, valid: &[&str]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !valid.contains(&k) {
            return Err(Error::Config(format!(
                "line {}: unknown key '{k}'; valid keys: {}",
                i + 1,
                valid.join(", ")
            )));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(out)
}

impl Settings {
    pub fn new(
        config: Option<&Path>,
        valid: &[&str],
        overrides: Vec<(&str, Option<String>)>,
    ) -> Result<Self> {
        let mut values = match config {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                parse_config(&text, valid)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            debug_assert!(valid.contains(&k), "flag {k} missing from the key list");
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(Self {
            values,
            echo: BTreeMap::new(),
        })
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        let v = self.values.get(key).cloned();
        if let Some(v) = &v {
            self.echo.insert(key.to_string(), v.clone());
        }
        v
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{v}' for {key}"))),
            None => {
                self.echo.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn get_opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("invalid value '{v}' for {key}")))
            })
            .transpose()
    }

    pub fn get_bool(&mut self, key: &str) -> Result<bool> {
        match self.raw(key).as_deref() {
            None => {
                self.echo.insert(key.to_string(), "false".into());
                Ok(false)
            }
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::Config(format!("invalid value '{v}' for {key}; use true or false"))),
        }
    }

    pub fn get_list<T: FromStr>(&mut self, key: &str, default: &str) -> Result<Vec<T>> {
        let v = self.raw(key).unwrap_or_else(|| {
            self.echo.insert(key.to_string(), default.to_string());
            default.to_string()
        });
        v.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid entry '{s}' in {key}")))
            })
            .collect()
    }

    /// Writes the resolved settings as a config file.
    pub fn write_echo(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        for (k, v) in &self.echo {
            writeln!(f, "{k} = {v}")?;
        }
        f.flush()?;
        Ok(())
    }
}

fn flag<T: ToString>(key: &'static str, v: &Option<T>) -> (&'static str, Option<String>) {
    (key, v.as_ref().map(|x| x.to_string()))
}

fn switch(key: &'static str, on: bool) -> (&'static str, Option<String>) {
    (key, on.then(|| "true".to_string()))
}

struct Context {
    out: PathBuf,
    assert: bool,
}

impl Context {
    fn new(common: &Common, settings: &mut Settings) -> Result<Self> {
        let out = match &common.out {
            Some(p) => p.clone(),
            None => PathBuf::from(settings.get("out", "fracwave-out".to_string())?),
        };
        settings.echo.insert("out".into(), out.display().to_string());
        fs::create_dir_all(&out)?;
        Ok(Self {
            out,
            assert: common.assert,
        })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        println!("wrote {}", path.display());
        Ok(BufWriter::new(File::create(path)?))
    }
}

/// Outcome of a subcommand: the checks run under `--assert`.
type Checks = Vec<Check>;

const WEIGHTS_KEYS: &[&str] = &["out", "gamma", "kappa", "n", "seed"];

fn cmd_weights(a: &WeightsArgs) -> Result<Checks> {
    let mut s = Settings::new(
        a.common.config.as_deref(),
        WEIGHTS_KEYS,
        vec![flag("gamma", &a.gamma), flag("kappa", &a.kappa), flag("n", &a.n), flag("seed", &a.seed)],
    )?;
    let ctx = Context::new(&a.common, &mut s)?;
    let gamma = s.get("gamma", 0.5)?;
    let n = s.get("n", 256usize)?;
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    let kappa = s.get("kappa", 1.0 / n as f64)?;
    let seed = s.get("seed", 20_231u64)?;
    s.write_echo(&ctx.out.join("weights.config"))?;

    let omega = match CqScheme::new(gamma, kappa, n) {
        Ok(scheme) => {
            scheme.write_csv(ctx.create("weights.csv")?)?;
            scheme.omega().to_vec()
        }
        Err(_) => {
            // outside (−1, 1) \ {0} only the plain weights are defined
            let w = bdf2_weights(gamma, kappa, n)?;
            let mut f = ctx.create("weights.csv")?;
            writeln!(f, "n,t_n,omega_n")?;
            for (j, x) in w.iter().enumerate() {
                writeln!(f, "{j},{:.16e},{x:.16e}", j as f64 * kappa)?;
            }
            f.flush()?;
            w
        }
    };
    let shown: Vec<String> = omega.iter().take(8).map(|x| format!("{x:.16e}")).collect();
    println!(
        "omega = {}{}",
        shown.join(", "),
        if omega.len() > 8 { ", ..." } else { "" }
    );

    let mut out = Vec::new();
    if ctx.assert {
        out.push(checks::cq_exactness(gamma, n)?);
        out.extend(checks::monomial_rates(gamma)?);
        if gamma < 0.0 {
            out.push(checks::discrete_positivity(gamma, n, 100, seed)?);
        }
    }
    Ok(out)
}

const ODE_KEYS: &[&str] = &["out", "gamma", "lambda", "a_gamma", "f", "u0", "v0", "t_final", "m"];

fn cmd_ode(a: &OdeArgs) -> Result<Checks> {
    let mut s = Settings::new(
        a.common.config.as_deref(),
        ODE_KEYS,
        vec![
            flag("gamma", &a.gamma),
            flag("lambda", &a.lambda),
            flag("a_gamma", &a.a_gamma),
            flag("f", &a.f),
            flag("u0", &a.u0),
            flag("v0", &a.v0),
            flag("t_final", &a.t_final),
            flag("m", &a.m),
        ],
    )?;
    let ctx = Context::new(&a.common, &mut s)?;
    let gamma = s.get("gamma", 0.5)?;
    let f0 = s.get("f", 1.0)?;
    let problem = VolterraProblem {
        gamma,
        lambda: s.get("lambda", 1.0)?,
        a_gamma: s.get("a_gamma", 1.0)?,
        f: Arc::new(move |_| f0),
        u0: s.get("u0", 0.0)?,
        v0: s.get("v0", if gamma < 0.0 { 1.0 } else { 0.0 })?,
        t_final: s.get("t_final", 0.01)?,
        m: s.get("m", 1024usize)?,
    };
    s.write_echo(&ctx.out.join("ode.config"))?;
    let sol = solve_volterra(&problem)?;
    sol.write_csv(ctx.create("ode.csv")?)?;
    match asymptotic_check(&problem, &sol, Baseline::SourceMinusStiffness) {
        Ok(fit) => println!(
            "exponent={:.16e} coefficient={:.16e} expected_coefficient={:.16e} points={}",
            fit.exponent,
            fit.coefficient,
            checks::expected_coefficient(&problem),
            fit.points
        ),
        Err(e) => println!("fit not available: {e}"),
    }

    let mut out = Vec::new();
    if ctx.assert {
        out.push(checks::ode_exponent(&problem)?);
        let frac = FracParams::new(gamma, 1.0)?;
        for corrected in [false, true] {
            out.push(checks::mode_equivalence(frac, corrected, 32, 2, 400)?);
        }
        let long = VolterraProblem {
            t_final: 1.0,
            ..problem
        };
        out.push(checks::recurrence_vs_volterra(&long, 400)?);
    }
    Ok(out)
}

const CONVERGENCE_KEYS: &[&str] = &[
    "out", "case", "gamma", "alpha0", "corrected", "levels", "coupling", "kappa0",
];

fn cmd_convergence(a: &ConvergenceArgs) -> Result<Checks> {
    let mut s = Settings::new(
        a.common.config.as_deref(),
        CONVERGENCE_KEYS,
        vec![
            flag("case", &a.case),
            flag("gamma", &a.gamma),
            flag("alpha0", &a.alpha0),
            switch("corrected", a.corrected),
            flag("levels", &a.levels),
            flag("coupling", &a.coupling),
            flag("kappa0", &a.kappa0),
        ],
    )?;
    let ctx = Context::new(&a.common, &mut s)?;
    let name: CaseName = s.get("case", "smooth1d".to_string())?.parse()?;
    let frac = FracParams::new(s.get("gamma", -0.75)?, s.get("alpha0", 1.0)?)?;
    let case = ManufacturedCase::build(name, frac);
    let opts = ConvergenceOptions {
        levels: s.get("levels", 4usize)?,
        corrected: s.get_bool("corrected")?,
        coupling: Some(s.get("coupling", case.coupling)?),
        kappa0: Some(s.get("kappa0", case.kappa0)?),
    };
    s.write_echo(&ctx.out.join("convergence.config"))?;

    let rhs = case.rhs_consistency(20, 1)?;
    if rhs > 1e-7 {
        return Err(Error::Config(format!(
            "source term disagrees with quadrature by {rhs:e}"
        )));
    }
    let report = run_convergence(&case, &opts)?;
    report.write_csv(ctx.create("convergence.csv")?)?;
    println!("{}", report.summary());

    let mut out = Vec::new();
    if ctx.assert {
        out.push(checks::convergence_rate(&report, opts.levels)?);
    }
    Ok(out)
}

const DAMPING_KEYS: &[&str] = &["out", "gammas", "alpha0", "n", "t_final", "kappa_ratio", "corrected"];

fn cmd_damping(a: &DampingArgs) -> Result<Checks> {
    let mut s = Settings::new(
        a.common.config.as_deref(),
        DAMPING_KEYS,
        vec![
            flag("gammas", &a.gammas),
            flag("alpha0", &a.alpha0),
            flag("n", &a.n),
            flag("t_final", &a.t_final),
            flag("kappa_ratio", &a.kappa_ratio),
            switch("corrected", a.corrected),
        ],
    )?;
    let ctx = Context::new(&a.common, &mut s)?;
    let d = DampingOptions::default();
    let opts = DampingOptions {
        gammas: s.get_list("gammas", "-0.75,-0.25,0.25,0.75")?,
        alpha0: s.get("alpha0", d.alpha0)?,
        n_per_side: s.get("n", d.n_per_side)?,
        t_final: s.get("t_final", d.t_final)?,
        kappa_ratio: s.get("kappa_ratio", d.kappa_ratio)?,
        corrected: s.get_bool("corrected")?,
    };
    s.write_echo(&ctx.out.join("damping.config"))?;
    let result = run_damping_demo(&opts)?;
    result.write_csv(ctx.create("damping.csv")?)?;
    for tr in &result.traces {
        let label = tr.gamma.map_or("undamped".to_string(), |g| format!("gamma={g}"));
        println!(
            "{label} late_amplitude={:.16e} final_energy_ratio={:.16e}",
            tr.late_amplitude(result.kappa, 0.5 * opts.t_final),
            tr.energy.last().unwrap_or(&0.0) / tr.energy.first().unwrap_or(&1.0)
        );
    }
    Ok(if ctx.assert {
        checks::damping(&result, opts.t_final, opts.corrected)
    } else {
        Vec::new()
    })
}

const CONSTANTS_KEYS: &[&str] = &["out", "grid"];

fn cmd_constants(a: &ConstantsArgs) -> Result<Checks> {
    let mut s = Settings::new(a.common.config.as_deref(), CONSTANTS_KEYS, vec![flag("grid", &a.grid)])?;
    let ctx = Context::new(&a.common, &mut s)?;
    let grid = s.get("grid", 99usize)?;
    s.write_echo(&ctx.out.join("constants.config"))?;
    let rows = run_constants_figure(grid)?;
    write_constants_csv(&rows, ctx.create("constants.csv")?)?;
    Ok(if ctx.assert {
        vec![checks::constants_dominance(&rows)]
    } else {
        Vec::new()
    })
}

const SOLVE_KEYS: &[&str] = &[
    "out",
    "domain",
    "n",
    "gamma",
    "alpha0",
    "corrected",
    "t_final",
    "kappa",
    "cfl_fraction",
    "allow_cfl_violation",
    "initial",
    "snapshots",
    "trace",
];

fn cmd_solve(a: &SolveArgs) -> Result<Checks> {
    let mut s = Settings::new(
        a.common.config.as_deref(),
        SOLVE_KEYS,
        vec![
            flag("domain", &a.domain),
            flag("n", &a.n),
            flag("gamma", &a.gamma),
            flag("alpha0", &a.alpha0),
            switch("corrected", a.corrected),
            flag("t_final", &a.t_final),
            flag("kappa", &a.kappa),
            flag("cfl_fraction", &a.cfl_fraction),
            switch("allow_cfl_violation", a.allow_cfl_violation),
            flag("initial", &a.initial),
            flag("snapshots", &a.snapshots),
            flag("trace", &a.trace),
        ],
    )?;
    let ctx = Context::new(&a.common, &mut s)?;
    let domain = match s.get("domain", "interval".to_string())?.as_str() {
        "interval" => Domain::unit_interval(),
        "square" => Domain::symmetric_square(),
        other => return Err(Error::Config(format!("unknown domain '{other}'; use interval or square"))),
    };
    let n = s.get("n", 32usize)?;
    let gamma = s.get("gamma", "none".to_string())?;
    let alpha0 = s.get("alpha0", 1.0)?;
    let frac = match gamma.as_str() {
        "none" => None,
        g => Some(FracParams::new(
            g.parse()
                .map_err(|_| Error::Config(format!("invalid value '{g}' for gamma")))?,
            alpha0,
        )?),
    };
    let corrected = s.get_bool("corrected")?;
    let t_final = s.get("t_final", 1.0)?;
    let kappa_flag: Option<f64> = s.get_opt("kappa")?;
    let cfl_fraction = s.get("cfl_fraction", 0.5)?;
    let allow = s.get_bool("allow_cfl_violation")?;
    let initial = s.get("initial", "sine".to_string())?;
    let centre: Point = match domain {
        Domain::Interval { a, b } => [0.5 * (a + b), 0.0],
        Domain::Rectangle { a, b, c, d } => [0.5 * (a + b), 0.5 * (c + d)],
    };
    let trace: Vec<f64> = s.get_list("trace", &format!("{},{}", centre[0], centre[1]))?;
    let snapshot_list: Option<String> = s.get_opt("snapshots")?;

    let fem = FemSystem::build(domain, n)?;
    let limit = std::f64::consts::SQRT_2 * fem.h() / fem.inverse_constant()?;
    let kappa = kappa_flag.unwrap_or(cfl_fraction * limit);
    s.echo.insert("kappa".into(), format!("{kappa:.16e}"));
    let steps = crate::solver::step_count(t_final, kappa);
    let snapshot_steps: Vec<usize> = match snapshot_list {
        None => vec![steps],
        Some(list) => list
            .split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid step '{x}' in snapshots")))
            })
            .collect::<Result<_>>()?,
    };
    s.write_echo(&ctx.out.join("solve.config"))?;

    let dim = domain.dimension();
    let u0 = match initial.as_str() {
        "sine" => Initial::Field(Arc::new(FnField(
            move |p: Point| sine_mode(domain, p).0,
            move |p: Point| sine_mode(domain, p).1,
        ))),
        "gaussian" => Initial::Field(Arc::new(FnField(
            move |p: Point| gaussian(centre, dim, p).0,
            move |p: Point| gaussian(centre, dim, p).1,
        ))),
        other => return Err(Error::Config(format!("unknown initial '{other}'; use sine or gaussian"))),
    };
    let trace_point = match trace.as_slice() {
        [x] => [*x, 0.0],
        [x, y] => [*x, *y],
        _ => return Err(Error::Config("trace must be `x` or `x,y`".into())),
    };
    let node = fem
        .mesh()
        .find_node(trace_point)
        .ok_or_else(|| Error::Config(format!("trace point {trace_point:?} is not a mesh node")))?;

    let cfg = SimConfig::new(&fem, frac, t_final, kappa, allow)?
        .with_corrected(corrected)
        .with_initial(u0, Initial::Zero);
    let opts = RunOptions {
        trace_nodes: vec![node],
        snapshot_steps,
    };
    let traj = run(&cfg, &opts, None)?;
    traj.write_energy_csv(ctx.create("energy.csv")?)?;
    traj.write_traces_csv(ctx.create("traces.csv")?)?;
    traj.write_snapshots_csv(ctx.create("snapshots.csv")?)?;
    fem.mesh().write_nodes_csv(ctx.create("nodes.csv")?)?;
    fem.mesh().write_elements_csv(ctx.create("elements.csv")?)?;
    let (mp, kp) = (ctx.out.join("mass.mtx"), ctx.out.join("stiffness.mtx"));
    fem.write_matrix_market(&mp, &kp)?;
    println!("wrote {}\nwrote {}", mp.display(), kp.display());
    println!(
        "steps={} kappa={kappa:.16e} cfl_limit={limit:.16e} final_energy={:.16e}",
        traj.steps,
        traj.energy.last().unwrap_or(&0.0)
    );
    Ok(if ctx.assert {
        vec![checks::trajectory_energy(frac, corrected, &traj)?]
    } else {
        Vec::new()
    })
}

/// Lowest Dirichlet sine mode of the domain and its gradient.
fn sine_mode(domain: Domain, p: Point) -> (f64, Point) {
    use std::f64::consts::PI;
    match domain {
        Domain::Interval { a, b } => {
            let w = PI / (b - a);
            let x = w * (p[0] - a);
            (x.sin(), [w * x.cos(), 0.0])
        }
        Domain::Rectangle { a, b, c, d } => {
            let (wx, wy) = (PI / (b - a), PI / (d - c));
            let (x, y) = (wx * (p[0] - a), wy * (p[1] - c));
            (
                x.sin() * y.sin(),
                [wx * x.cos() * y.sin(), wy * x.sin() * y.cos()],
            )
        }
    }
}

/// `e^{−10|x − c|²}` and its gradient.
fn gaussian(c: Point, dim: usize, p: Point) -> (f64, Point) {
    let dx = p[0] - c[0];
    let dy = if dim == 2 { p[1] - c[1] } else { 0.0 };
    let e = (-10.0 * (dx * dx + dy * dy)).exp();
    (e, [-20.0 * dx * e, -20.0 * dy * e])
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Weights(a) => cmd_weights(a),
        Command::Ode(a) => cmd_ode(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Damping(a) => cmd_damping(a),
        Command::Constants(a) => cmd_constants(a),
        Command::Solve(a) => cmd_solve(a),
    };
    match result {
        Ok(checks) => {
            for c in &checks {
                println!("{c}");
            }
            if checks::all_pass(&checks) {
                0
            } else {
                EXIT_ASSERT
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let m = parse_config("# c\n gamma = 0.5 # x\n\nn=4\n", &["gamma", "n"]).unwrap();
        assert_eq!(m["gamma"], "0.5");
        assert_eq!(m["n"], "4");
        let e = parse_config("wave = 1", &["gamma", "n"]).unwrap_err().to_string();
        assert!(e.contains("unknown key 'wave'") && e.contains("gamma, n"), "{e}");
        assert!(parse_config("n = 1\nn = 2", &["n"]).is_err());
        assert!(parse_config("n 1", &["n"]).is_err());
    }

    #[test]
    fn flags_override_file_and_defaults_are_echoed() {
        let dir = std::env::temp_dir().join(format!("fracwave-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("c.config");
        fs::write(&cfg, "gamma = 0.25\nn = 8\n").unwrap();
        let mut s = Settings::new(Some(&cfg), WEIGHTS_KEYS, vec![("n", Some("16".into()))]).unwrap();
        assert_eq!(s.get("gamma", 0.0).unwrap(), 0.25);
        assert_eq!(s.get("n", 0usize).unwrap(), 16);
        assert_eq!(s.get("seed", 7u64).unwrap(), 7);
        s.write_echo(&dir.join("echo")).unwrap();
        let echo = fs::read_to_string(dir.join("echo")).unwrap();
        assert_eq!(echo, "gamma = 0.25\nn = 16\nseed = 7\n");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn usage_errors() {
        assert_eq!(main_with_args(["fracwave", "nonsense"]), EXIT_USAGE);
        assert_eq!(main_with_args(["fracwave", "weights", "--bogus"]), EXIT_USAGE);
    }

    #[test]
    fn sine_mode_vanishes_on_the_boundary() {
        let d = Domain::symmetric_square();
        assert!(sine_mode(d, [-1.0, 0.3]).0.abs() < 1e-15);
        assert!((sine_mode(d, [0.0, 0.0]).0 - 1.0).abs() < 1e-15);
    }
}
