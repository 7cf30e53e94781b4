use thiserror::Error;

/// Everything that can go wrong between parsing a config and writing a CSV row.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: wavefunctions live on different grids")]
    GridMismatch,

    #[error("config error: {0}")]
    Config(String),

    #[error("eigensolver failed: {reason} (worst index {worst_index}, residual {residual:.3e})")]
    Eigensolver {
        reason: String,
        worst_index: usize,
        residual: f64,
    },

    #[error(
        "state not contained on grid: boundary/peak amplitude ratio {ratio:.3e} at step {step}"
    )]
    GridTooSmall { step: usize, ratio: f64 },

    #[error("propagation became unstable (non-finite amplitude) at step {step}")]
    Instability { step: usize },

    #[error("time step did not converge: overlap change {change:.3e} after {halvings} halvings")]
    TimeStepNotConverged { change: f64, halvings: usize },

    #[error("oracle too large: N = {n}, N_p = {n_p} exceeds the enumeration guard; use the Gram-determinant path")]
    OracleTooLarge { n: usize, n_p: usize },

    #[error("fidelity {value:.3e} left [0, 1] beyond round-off")]
    NumericalConsistency { value: f64 },

    #[error("energy list too short for the thermal tail bound: need at least {required} levels, got {available}")]
    NeedsMoreLevels { required: usize, available: usize },

    #[error("at grid point {index} ({axis} = {value}): {source}")]
    AtGridPoint {
        index: usize,
        axis: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 config, 3 numerical convergence, 4 containment.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AtGridPoint { source, .. } => source.exit_code(),
            Error::GridTooSmall { .. } => 4,
            Error::Eigensolver { .. }
            | Error::Instability { .. }
            | Error::TimeStepNotConverged { .. }
            | Error::NumericalConsistency { .. }
            | Error::NeedsMoreLevels { .. } => 3,
            Error::InvalidInput(_)
            | Error::GridMismatch
            | Error::Config(_)
            | Error::OracleTooLarge { .. } => 2,
            Error::Io(_) => 1,
        }
    }

    /// Strips grid-point annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtGridPoint { source, .. } => source.root(),
            other => other,
        }
    }
}
