use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "symbol is not even: mode {mode:?} has value {value} but its mirror has {mirror_value}"
    )]
    SymmetryViolation {
        mode: Vec<i64>,
        value: f64,
        mirror_value: f64,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid ray: {0}")]
    InvalidRay(String),

    #[error("solution diverged at t = {t}: energy norm {norm:e} exceeds limit {limit:e}")]
    Divergence { t: f64, norm: f64, limit: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error("fit window: {0}")]
    Window(String),

    #[error(
        "conjugate gradient stalled after {iterations} iterations (relative residual {relative_residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        relative_residual: f64,
        /// Best iterate seen, as `(phi0, phi1)` grid values.
        best: Option<Box<(Vec<f64>, Vec<f64>)>>,
    },

    #[error(
        "Picard iteration did not converge in {iterations} iterations; differences {history:?}"
    )]
    PicardNonConvergence {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("Picard iterates grew from {previous:e} to {current:e}; data too large for the fixed-point argument, try smaller data")]
    SmallnessViolated { previous: f64, current: f64 },

    #[error("energy norm {norm:e} never fell below {delta:e} within t = {horizon}")]
    StabilizationTimeout { norm: f64, delta: f64, horizon: f64 },

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
