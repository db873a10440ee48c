//! Leapfrog time stepping for the wave operator with BDF2 convolution
//! quadrature for the fractional damping term.
//!
//! The damping term at `t_n` contains `∂̄t u(t_n) = (u_{n+1} − u_{n−1})/(2κ)`,
//! so each step solves
//!
//! ```text
//! (1/κ² + a c_n/(2κ)) M u_{n+1} = M(2u_n − u_{n−1})/κ² − K u_n + F_n
//!                                 + (a c_n/(2κ)) M u_{n−1} − a M H_n
//! ```
//!
//! with `c_n = ω₀` (plus `w₁(t₁)` in the first corrected step) and `H_n` the
//! part of the convolution that only involves stored history. The shift is a
//! scalar, so one mass solve per step suffices.

use crate::cq::CqScheme;
use crate::error::{Error, Result};
use crate::fem::{FemSystem, Field, Point};
use crate::fraccalc::FracParams;
use std::io::Write;
use std::sync::Arc;

/// Abort threshold for energy growth in source-free runs, relative to `E_1`.
pub const ENERGY_GROWTH_LIMIT: f64 = 1e6;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// Right-hand side `f(x, t)`.
#[derive(Clone)]
pub enum Source {
    Zero,
    /// `f(x, t) = s(x)·θ(t)` with the load vector of `s` precomputed.
    Separable { load: Vec<f64>, temporal: TimeFn },
    General(SpaceTimeFn),
}

impl Source {
    pub fn is_zero(&self) -> bool {
        matches!(self, Source::Zero)
    }

    /// Load vector `(f(t), φ_i)`, or `None` for the zero source.
    pub fn load(&self, fem: &FemSystem, t: f64) -> Option<Vec<f64>> {
        match self {
            Source::Zero => None,
            Source::Separable { load, temporal } => {
                let s = temporal(t);
                Some(load.iter().map(|v| v * s).collect())
            }
            Source::General(f) => Some(fem.load_vector(|p| f(p, t))),
        }
    }
}

/// Initial displacement or velocity.
#[derive(Clone)]
pub enum Initial {
    Zero,
    Field(Arc<dyn Field + Send + Sync>),
    /// Interior nodal values of a finite element function.
    Nodal(Vec<f64>),
}

pub struct SimConfig<'a> {
    pub fem: &'a FemSystem,
    /// `None` runs the undamped wave equation.
    pub frac: Option<FracParams>,
    pub corrected: bool,
    pub source: Source,
    pub u0: Initial,
    pub v0: Initial,
    /// Load of `f(0)`; computed from `source` when absent.
    pub d2u0_load: Option<Vec<f64>>,
    t_final: f64,
    kappa: f64,
    steps: usize,
    cfl_limit: f64,
}

/// Number of steps of size `kappa` to reach `t_final`.
pub fn step_count(t_final: f64, kappa: f64) -> usize {
    let r = t_final / kappa;
    if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
        r.round() as usize
    } else {
        r.ceil() as usize
    }
}

impl<'a> SimConfig<'a> {
    /// Checks `κ ≤ √2·h/C_inv` unless `allow_cfl_violation` is set.
    pub fn new(
        fem: &'a FemSystem,
        frac: Option<FracParams>,
        t_final: f64,
        kappa: f64,
        allow_cfl_violation: bool,
    ) -> Result<Self> {
        if !(t_final > 0.0) || !(kappa > 0.0) || kappa > t_final {
            return Err(Error::Domain(format!(
                "need 0 < κ ≤ T, got κ = {kappa}, T = {t_final}"
            )));
        }
        let cfl_limit = std::f64::consts::SQRT_2 * fem.h() / fem.inverse_constant()?;
        if kappa > cfl_limit && !allow_cfl_violation {
            return Err(Error::Cfl {
                kappa,
                limit: cfl_limit,
            });
        }
        Ok(Self {
            fem,
            frac,
            corrected: false,
            source: Source::Zero,
            u0: Initial::Zero,
            v0: Initial::Zero,
            d2u0_load: None,
            t_final,
            kappa,
            steps: step_count(t_final, kappa),
            cfl_limit,
        })
    }

    pub fn with_corrected(mut self, corrected: bool) -> Self {
        self.corrected = corrected;
        self
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    pub fn with_initial(mut self, u0: Initial, v0: Initial) -> Self {
        self.u0 = u0;
        self.v0 = v0;
        self
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `N`; the run produces `u_0 … u_N`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn cfl_limit(&self) -> f64 {
        self.cfl_limit
    }

    pub fn a_gamma(&self) -> f64 {
        self.frac.map_or(0.0, |f| f.a_gamma())
    }

    fn ritz(&self, init: &Initial) -> Result<Vec<f64>> {
        match init {
            Initial::Zero => Ok(vec![0.0; self.fem.dofs()]),
            Initial::Field(u) => self.fem.ritz_projection(u.as_ref()),
            Initial::Nodal(x) => self.fem.ritz_projection_nodal(x),
        }
    }

    /// `(∇u0, ∇φ_i)`
    fn gradient_load(&self, init: &Initial) -> Result<Vec<f64>> {
        match init {
            Initial::Zero => Ok(vec![0.0; self.fem.dofs()]),
            Initial::Field(u) => Ok(self
                .fem
                .gradient_load(u.as_ref(), crate::fem::QuadOrder::Standard)),
            Initial::Nodal(x) => {
                if x.len() != self.fem.dofs() {
                    return Err(Error::Domain("initial vector length mismatch".into()));
                }
                Ok(self.fem.mul_stiffness(x))
            }
        }
    }
}

/// `(u0_h, u1_h, ∂̄t u(0))` from Ritz projections and the discrete
/// acceleration `w` with `M w = (f(0), φ_i) − (∇u0, ∇φ_i)`.
pub fn initial_data(cfg: &SimConfig) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let fem = cfg.fem;
    let g = cfg.gradient_load(&cfg.u0)?;
    let u0h = match &cfg.u0 {
        Initial::Zero => vec![0.0; fem.dofs()],
        _ => fem.solve_stiffness(&g)?,
    };
    let v0h = cfg.ritz(&cfg.v0)?;
    let mut rhs = match &cfg.d2u0_load {
        Some(l) => l.clone(),
        None => cfg
            .source
            .load(fem, 0.0)
            .unwrap_or_else(|| vec![0.0; fem.dofs()]),
    };
    rhs.iter_mut().zip(&g).for_each(|(r, gi)| *r -= gi);
    let w = fem.solve_mass(&rhs)?;
    let k = cfg.kappa;
    let u1h = u0h
        .iter()
        .zip(&v0h)
        .zip(&w)
        .map(|((u, v), a)| u + k * v + 0.5 * k * k * a)
        .collect();
    Ok((u0h, u1h, v0h))
}

/// `½‖(u − u_prev)/κ‖²_M + ½ uᵀ K u_prev`
pub fn discrete_energy(fem: &FemSystem, u_prev: &[f64], u: &[f64], kappa: f64) -> f64 {
    let d: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| (a - b) / kappa).collect();
    0.5 * fem.mass_inner(&d, &d) + 0.5 * fem.stiffness_inner(u, u_prev)
}

/// Time-stepping state: `u_{n−1}`, `u_n` and the central differences
/// `∂̄t u(t_j)`, `j < n`.
pub struct Simulation<'c, 'a> {
    cfg: &'c SimConfig<'a>,
    scheme: Option<CqScheme>,
    a: f64,
    n: usize,
    u_prev: Vec<f64>,
    u: Vec<f64>,
    history: Vec<Vec<f64>>,
    energy: Vec<f64>,
}

impl<'c, 'a> Simulation<'c, 'a> {
    /// Sets up `u_0`, `u_1` and `∂̄t u(0)`; the state is at `n = 1`.
    pub fn new(cfg: &'c SimConfig<'a>) -> Result<Self> {
        let a = cfg.a_gamma();
        let scheme = match cfg.frac {
            Some(f) if a != 0.0 => Some(CqScheme::new(f.gamma(), cfg.kappa, cfg.steps)?),
            _ => None,
        };
        let (u0, u1, v0) = initial_data(cfg)?;
        let e1 = discrete_energy(cfg.fem, &u0, &u1, cfg.kappa);
        Ok(Self {
            cfg,
            scheme,
            a,
            n: 1,
            u_prev: u0,
            u: u1,
            history: vec![v0],
            energy: vec![e1],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.n as f64 * self.cfg.kappa
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn u_prev(&self) -> &[f64] {
        &self.u_prev
    }

    /// `∂̄t u(t_j)` for `j = 0 … n−1`.
    pub fn history(&self) -> &[Vec<f64>] {
        &self.history
    }

    /// `E_1 … E_n`.
    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn done(&self) -> bool {
        self.n >= self.cfg.steps
    }

    /// Known part `H_n` of the convolution at `t_n` and the coefficient of
    /// the unknown `∂̄t u(t_n)`.
    fn history_term(&self, scheme: &CqScheme) -> (Vec<f64>, f64) {
        let n = self.n;
        let w = scheme.omega();
        let mut acc = vec![0.0; self.u.len()];
        for (j, hj) in self.history.iter().enumerate() {
            let c = w[n - j];
            acc.iter_mut().zip(hj).for_each(|(s, v)| *s += c * v);
        }
        let mut coef = w[0];
        let h0 = &self.history[0];
        if self.cfg.corrected {
            let w0 = scheme.w0()[n];
            acc.iter_mut().zip(h0).for_each(|(s, v)| *s += w0 * v);
            let w1 = scheme.w1()[n];
            if w1 != 0.0 {
                if n == 1 {
                    coef += w1;
                } else {
                    let h1 = &self.history[1];
                    acc.iter_mut().zip(h1).for_each(|(s, v)| *s += w1 * v);
                }
            }
        } else if scheme.chi() != 0.0 {
            let total: f64 = w[..=n].iter().sum();
            let c = scheme.chi() * total;
            acc.iter_mut().zip(h0).for_each(|(s, v)| *s -= c * v);
        }
        (acc, coef)
    }

    /// Advances from `u_n` to `u_{n+1}`.
    pub fn step(&mut self) -> Result<()> {
        if self.done() {
            return Err(Error::Index {
                index: self.n + 1,
                available: self.cfg.steps + 1,
            });
        }
        let fem = self.cfg.fem;
        let k = self.cfg.kappa;
        let n = self.n;
        let t = n as f64 * k;

        // r = M⁻¹(F_n − K u_n)
        let mut r = fem.mul_stiffness(&self.u);
        match self.cfg.source.load(fem, t) {
            Some(f) => r.iter_mut().zip(&f).for_each(|(ri, fi)| *ri = fi - *ri),
            None => r.iter_mut().for_each(|ri| *ri = -*ri),
        }
        fem.solve_mass_in_place(&mut r)?;

        let inv_k2 = 1.0 / (k * k);
        let mut next: Vec<f64> = self
            .u
            .iter()
            .zip(&self.u_prev)
            .zip(&r)
            .map(|((un, up), ri)| (2.0 * un - up) * inv_k2 + ri)
            .collect();
        let mut diag = inv_k2;
        if let Some(scheme) = &self.scheme {
            let (h, coef) = self.history_term(scheme);
            let alpha = self.a * coef / (2.0 * k);
            diag += alpha;
            for ((x, up), hi) in next.iter_mut().zip(&self.u_prev).zip(&h) {
                *x += alpha * up - self.a * hi;
            }
        }
        next.iter_mut().for_each(|x| *x /= diag);

        let hn: Vec<f64> = next
            .iter()
            .zip(&self.u_prev)
            .map(|(a, b)| (a - b) / (2.0 * k))
            .collect();
        self.history.push(hn);
        let u_prev = std::mem::replace(&mut self.u, next);
        self.u_prev = u_prev;
        self.n += 1;

        let e = discrete_energy(fem, &self.u_prev, &self.u, k);
        self.energy.push(e);
        let t_new = self.n as f64 * k;
        if !e.is_finite() || self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                step: self.n,
                t: t_new,
                reason: "non-finite values; check the CFL condition".into(),
            });
        }
        let e1 = self.energy[0];
        if self.cfg.source.is_zero() && e1 > 0.0 && e > ENERGY_GROWTH_LIMIT * e1 {
            return Err(Error::Diverged {
                step: self.n,
                t: t_new,
                reason: format!("energy grew to {e:e} from E_1 = {e1:e}; check the CFL condition"),
            });
        }
        Ok(())
    }
}

/// Per-step callback, handed consecutive pairs `(u_{n−1}, u_n)`.
pub trait Observer {
    fn start(&mut self, _u0: &[f64], _kappa: f64) -> Result<()> {
        Ok(())
    }
    fn step(&mut self, n: usize, t: f64, u_prev: &[f64], u: &[f64]) -> Result<()>;
}

/// What to record besides the energy log.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Mesh node indices to trace; boundary nodes trace as zero.
    pub trace_nodes: Vec<usize>,
    /// Steps at which to store the full interior vector.
    pub snapshot_steps: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PointTrace {
    pub node: usize,
    pub point: Point,
    /// Values at `t_0 … t_N`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kappa: f64,
    pub steps: usize,
    /// `E_1 … E_N`.
    pub energy: Vec<f64>,
    pub traces: Vec<PointTrace>,
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub final_u: Vec<f64>,
}

impl Trajectory {
    /// `n, t_n, E_n` rows.
    pub fn write_energy_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,t_n,E_n")?;
        for (i, e) in self.energy.iter().enumerate() {
            let n = i + 1;
            writeln!(out, "{n},{:.16e},{:.16e}", n as f64 * self.kappa, e)?;
        }
        Ok(())
    }

    /// `t` followed by one column per traced node.
    pub fn write_traces_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = self
            .traces
            .iter()
            .map(|tr| format!("u_node{}", tr.node))
            .collect();
        writeln!(out, "t,{}", header.join(","))?;
        for n in 0..=self.steps {
            let vals: Vec<String> = self
                .traces
                .iter()
                .map(|tr| format!("{:.16e}", tr.values[n]))
                .collect();
            writeln!(out, "{:.16e},{}", n as f64 * self.kappa, vals.join(","))?;
        }
        Ok(())
    }

    /// `t` followed by the interior values, one row per stored snapshot.
    pub fn write_snapshots_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let width = self.final_u.len();
        let header: Vec<String> = (0..width).map(|i| format!("u{i}")).collect();
        writeln!(out, "t,{}", header.join(","))?;
        for (n, u) in &self.snapshots {
            let vals: Vec<String> = u.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{:.16e},{}", *n as f64 * self.kappa, vals.join(","))?;
        }
        Ok(())
    }
}

/// Runs from the initial data to `t_N`.
pub fn run(
    cfg: &SimConfig,
    opts: &RunOptions,
    mut observer: Option<&mut dyn Observer>,
) -> Result<Trajectory> {
    let mesh = cfg.fem.mesh();
    let mut traces: Vec<PointTrace> = opts
        .trace_nodes
        .iter()
        .map(|&node| PointTrace {
            node,
            point: mesh.nodes[node],
            values: Vec::with_capacity(cfg.steps + 1),
        })
        .collect();
    let mut snapshots = Vec::new();
    let mut record = |n: usize, u: &[f64], traces: &mut Vec<PointTrace>| {
        for tr in traces.iter_mut() {
            tr.values.push(mesh.interior_index[tr.node].map_or(0.0, |i| u[i]));
        }
        if opts.snapshot_steps.contains(&n) {
            snapshots.push((n, u.to_vec()));
        }
    };

    let mut sim = Simulation::new(cfg)?;
    let k = cfg.kappa;
    record(0, sim.u_prev(), &mut traces);
    record(1, sim.u(), &mut traces);
    if let Some(obs) = observer.as_deref_mut() {
        obs.start(sim.u_prev(), k)?;
        obs.step(1, k, sim.u_prev(), sim.u())?;
    }
    while !sim.done() {
        sim.step()?;
        record(sim.n(), sim.u(), &mut traces);
        if let Some(obs) = observer.as_deref_mut() {
            obs.step(sim.n(), sim.t(), sim.u_prev(), sim.u())?;
        }
    }
    Ok(Trajectory {
        kappa: k,
        steps: cfg.steps,
        energy: sim.energy,
        traces,
        snapshots,
        final_u: sim.u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{Domain, FnField};
    use std::f64::consts::PI;

    fn sine_field() -> Initial {
        Initial::Field(Arc::new(FnField(
            |p: Point| (PI * p[0]).sin(),
            |p: Point| [PI * (PI * p[0]).cos(), 0.0],
        )))
    }

    #[test]
    fn step_counts() {
        assert_eq!(step_count(1.0, 1.0 / 64.0), 64);
        assert_eq!(step_count(1.0, 0.3), 4);
        assert_eq!(step_count(2.0, 1.0 / 320.0), 640);
    }

    #[test]
    fn cfl_is_enforced_unless_overridden() {
        let fem = FemSystem::build(Domain::unit_interval(), 16).unwrap();
        let limit = 2f64.sqrt() / 16.0 / fem.inverse_constant().unwrap();
        assert!(matches!(
            SimConfig::new(&fem, None, 1.0, 1.01 * limit, false),
            Err(Error::Cfl { .. })
        ));
        let cfg = SimConfig::new(&fem, None, 1.0, 1.01 * limit, true).unwrap();
        assert!((cfg.cfl_limit() - limit).abs() < 1e-12);
        assert!(SimConfig::new(&fem, None, 1.0, 0.99 * limit, false).is_ok());
    }

    #[test]
    fn zero_data_stays_zero() {
        let fem = FemSystem::build(Domain::unit_interval(), 8).unwrap();
        for corrected in [false, true] {
            for g in [-0.5, 0.5] {
                let frac = FracParams::new(g, 1.0).unwrap();
                let cfg = SimConfig::new(&fem, Some(frac), 0.5, 0.02, false)
                    .unwrap()
                    .with_corrected(corrected);
                let tr = run(&cfg, &RunOptions::default(), None).unwrap();
                assert!(tr.final_u.iter().all(|&v| v == 0.0));
                assert_eq!(tr.energy.len(), cfg.steps());
            }
        }
    }

    #[test]
    fn initial_data_identity() {
        let fem = FemSystem::build(Domain::unit_interval(), 16).unwrap();
        let v0 = Initial::Field(Arc::new(FnField(
            |p: Point| p[0] * (1.0 - p[0]),
            |p: Point| [1.0 - 2.0 * p[0], 0.0],
        )));
        let cfg = SimConfig::new(&fem, None, 1.0, 0.01, false)
            .unwrap()
            .with_initial(sine_field(), v0);
        let (u0, u1, h0) = initial_data(&cfg).unwrap();
        let g = fem.gradient_load(
            &FnField(|p: Point| (PI * p[0]).sin(), |p: Point| [PI * (PI * p[0]).cos(), 0.0]),
            crate::fem::QuadOrder::Standard,
        );
        let w = fem.solve_mass(&g.iter().map(|v| -v).collect::<Vec<_>>()).unwrap();
        for i in 0..u0.len() {
            let d = u1[i] - u0[i] - (0.01 * h0[i] + 0.5e-4 * w[i]);
            assert!(d.abs() < 1e-15);
        }
        let sim = Simulation::new(&cfg).unwrap();
        assert_eq!(sim.history()[0], h0);
    }

    #[test]
    fn undamped_energy_is_conserved() {
        let fem = FemSystem::build(Domain::unit_interval(), 20).unwrap();
        let cfg = SimConfig::new(&fem, None, 1.0, 1.0 / 200.0, false)
            .unwrap()
            .with_initial(sine_field(), Initial::Zero);
        let tr = run(&cfg, &RunOptions::default(), None).unwrap();
        let e1 = tr.energy[0];
        assert!(tr.energy.iter().all(|e| ((e - e1) / e1).abs() < 1e-10));
    }

    #[test]
    fn unstable_step_is_detected() {
        let fem = FemSystem::build(Domain::unit_interval(), 20).unwrap();
        let limit = 2f64.sqrt() * fem.h() / fem.inverse_constant().unwrap();
        let cfg = SimConfig::new(&fem, None, 100.0, 1.5 * limit, true)
            .unwrap()
            .with_initial(sine_field(), Initial::Zero);
        match run(&cfg, &RunOptions::default(), None) {
            Err(Error::Diverged { step, .. }) => assert!(step <= 200, "{step}"),
            other => panic!("expected divergence, got {:?}", other.map(|t| t.steps)),
        }
    }

    #[test]
    fn traces_and_snapshots() {
        let fem = FemSystem::build(Domain::unit_interval(), 8).unwrap();
        let cfg = SimConfig::new(&fem, None, 0.5, 0.05, false)
            .unwrap()
            .with_initial(sine_field(), Initial::Zero);
        let opts = RunOptions {
            trace_nodes: vec![0, 4],
            snapshot_steps: vec![0, 10],
        };
        let tr = run(&cfg, &opts, None).unwrap();
        assert_eq!(tr.traces[0].values.len(), 11);
        assert!(tr.traces[0].values.iter().all(|&v| v == 0.0));
        assert_eq!(tr.snapshots.len(), 2);
        assert_eq!(tr.snapshots[1].1, tr.final_u);
        let mut buf = Vec::new();
        tr.write_traces_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 12);
    }
}
