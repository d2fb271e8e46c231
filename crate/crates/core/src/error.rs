use thiserror::Error;

/// Errors raised by the solvers and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid pump scheme: {0}")]
    InvalidScheme(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} requires n_atoms <= {max}, got {n}")]
    Capability { what: &'static str, n: u32, max: u32 },

    #[error("solver failed: {reason} (best residual {residual:e})")]
    SolverFailure { reason: String, residual: f64 },

    #[error("steady state is not unique: nullspace dimension {0}")]
    DegenerateNullspace(usize),

    #[error("negative population {value:e} at ordinal {ordinal}")]
    NegativePopulation { ordinal: usize, value: f64 },

    #[error("no interior minimum in bracket [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },

    #[error("at w = {w}: {source}")]
    AtPoint {
        w: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
