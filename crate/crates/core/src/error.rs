use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("derivative order {requested} exceeds supported order {max}")]
    OrderUnsupported { requested: usize, max: usize },

    #[error("tail mass estimate {tail:.3e} exceeds 1e-8; increase the truncation radius")]
    TailTooHeavy { tail: f64 },

    #[error("grid function belongs to a different grid")]
    GridMismatch,

    #[error("grids do not share the same nodes")]
    NodeMismatch,

    #[error("function vanishes identically")]
    ZeroFunction,

    #[error("function is constant; the minimum is attained trivially")]
    ConstantFunction,

    #[error("q = {0} is outside (1, inf)")]
    QOutOfRange(f64),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("basis is linearly dependent on the grid")]
    DegenerateBasis,

    #[error("retained eigenbasis captures only {captured:.12} of the squared norm")]
    BasisDeficit { captured: f64 },

    #[error("eigensolver failed to converge (worst residual {residual:.3e})")]
    ConvergenceFailure { residual: f64 },

    #[error("linear solve failed (residual {residual:.3e})")]
    LinearSolveFailure { residual: f64 },

    #[error("p = {p} is below the admissible lower bound {min}")]
    PRangeViolation { p: f64, min: f64 },

    #[error("fit window holds {points} points, need at least 5")]
    WindowTooSmall { points: usize },

    #[error("curve value {value:.3e} inside the fit window is below the 1e-13 floor")]
    Underflow { value: f64 },

    #[error("potential is not admissible: {0}")]
    NotIntegrable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("experiment {experiment}: {source}")]
    Experiment { experiment: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for this error: `2` for configuration and environment
    /// problems, `1` for numerical failures inside an experiment.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Experiment { source, .. } => source.exit_code(),
            Error::ConfigInvalid(_)
            | Error::InvalidArgument(_)
            | Error::QOutOfRange(_)
            | Error::PRangeViolation { .. }
            | Error::OrderUnsupported { .. }
            | Error::TailTooHeavy { .. }
            | Error::NotIntegrable(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
