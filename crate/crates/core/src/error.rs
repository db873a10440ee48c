use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range ({available} entries available)")]
    Index { index: usize, available: usize },

    #[error("central difference at n = 0 needs the initial derivative")]
    MissingDerivative,

    #[error("series did not reach tolerance within {terms} terms (tail bound {tail:e})")]
    SeriesNotConverged { terms: usize, tail: f64 },

    #[error("quadrature did not reach tolerance (estimate {estimate:e})")]
    QuadratureNotConverged { estimate: f64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("eigenvalue iteration did not converge after {0} iterations")]
    EigenNotConverged(usize),

    #[error("CFL condition violated: kappa = {kappa:e} exceeds sqrt(2) h / C_inv = {limit:e}")]
    Cfl { kappa: f64, limit: f64 },

    #[error("simulation diverged at step {step} (t = {t}): {reason}")]
    Diverged { step: usize, t: f64, reason: String },

    #[error("degenerate Volterra step at node {0}")]
    DegenerateVolterra(usize),

    #[error("asymptotic fit failed: {0}")]
    FitFailed(String),

    #[error("unknown case '{0}' (expected smooth1d, smooth2d or nonsmooth1d)")]
    UnknownCase(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("refinement level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
