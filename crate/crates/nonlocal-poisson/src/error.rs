use thiserror::Error;

/// Errors produced by kernel validation, geometry, sampling, assembly and
/// the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// An input collection (cloud, ladder, value slice) was empty.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Two inputs that must agree in length or dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A kernel profile failed one of its structural assumptions.
    #[error("kernel profile '{profile}' failed validation: {reason}")]
    KernelValidation { profile: String, reason: String },

    /// Newton inversion of a chart map did not reach the tolerance.
    #[error("chart inverse did not converge at point {point:?} (residual {residual:.3e})")]
    InverseDiverged { point: Vec<f64>, residual: f64 },

    /// A point given to a chart operation lies outside the parameter domain.
    #[error("parameter point {0:?} lies outside the chart domain")]
    OutsideDomain(Vec<f64>),

    /// The kernel radius is too small relative to the grid spacing for the
    /// quadrature to resolve it.
    #[error("resolution too coarse: delta/h = {ratio:.3} < {min:.3}")]
    ResolutionTooCoarse { ratio: f64, min: f64 },

    /// The kernel radius exceeds the case's recorded validity horizon.
    #[error("delta {delta} exceeds the case horizon max_delta = {max_delta}")]
    ScaleOutOfRange { delta: f64, max_delta: f64 },

    /// Pivoting found the coupled system singular to working precision.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// The iterative solver stopped without meeting the residual tolerance.
    #[error("solver did not converge: {0}")]
    SolverStagnated(String),

    /// No catalog case is registered under the requested id.
    #[error("unknown case id '{0}'")]
    UnknownCase(String),

    /// No kernel profile is registered under the requested id.
    #[error("unknown kernel profile '{0}'")]
    UnknownProfile(String),

    /// A study configuration file is malformed or violates an invariant.
    #[error("config error: {0}")]
    Config(String),

    /// A fitted convergence slope fell below its pinned threshold.
    #[error("slope assertion failed: {0}")]
    SlopeAssertion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 = configuration problem,
    /// 3 = numerical failure, 4 = slope assertion failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::UnknownCase(_)
            | Error::UnknownProfile(_)
            | Error::InvalidParameter(_)
            | Error::Json(_) => 2,
            Error::SlopeAssertion(_) => 4,
            _ => 3,
        }
    }
}
