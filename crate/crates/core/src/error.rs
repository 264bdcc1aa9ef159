use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Variants fall into two families that callers (the CLI in particular) map
/// to different exit statuses: precondition violations on the inputs, and
/// numerical failures discovered while computing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    #[error("unsupported dimension {0}: only n = 1 and n = 2 are supported")]
    UnsupportedDimension(usize),

    #[error("nodes per axis must be a power of two and at least 16, got {0}")]
    InvalidResolution(usize),

    #[error("box length must be positive and finite, got {0}")]
    InvalidLength(f64),

    #[error("s must be < min(1, n/2) and > 0 (got s = {s}, n = {n})")]
    OrderOutOfRange { s: f64, n: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid region bounds: {0}")]
    InvalidBounds(String),

    #[error("region mask is empty")]
    EmptyRegion,

    #[error("window overlaps Omega")]
    WindowOverlapsOmega,

    #[error("window too close to Omega: distance {dist} < required {required}")]
    WindowTooClose { dist: f64, required: f64 },

    #[error("exterior data does not vanish on Omega (max |f| on Omega = {0})")]
    DataNotExterior(f64),

    #[error("conductivity must be bounded below by a positive gamma0 (min = {min}, gamma0 = {gamma0})")]
    ConductivityNotPositive { min: f64, gamma0: f64 },

    #[error("non-finite value produced: {0}")]
    NonFinite(&'static str),

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("operator is not positive definite; use method = direct")]
    IndefiniteOperator,

    #[error("singular interior system")]
    SingularSystem,

    #[error("Gram matrix factorization failed (degenerate window)")]
    DegenerateGram,

    #[error("vanishing-moment count must lie in 1..=6, got {0}")]
    InvalidMomentCount(usize),

    #[error("moment defect {defect:e} of order {order} exceeds tolerance {tol:e}")]
    MomentDefect { order: usize, defect: f64, tol: f64 },

    #[error("scale N + N0 = {scale} not resolved: half-width {half_width} < 4h = {min}")]
    Unresolved { scale: usize, half_width: f64, min: f64 },

    #[error("point x0 does not lie in the window")]
    PointOutsideWindow,

    #[error("need at least 3 scales to regress, got {0}")]
    TooFewScales(usize),

    #[error("order t + s = {0} is below -M")]
    OrderBelowMoments(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl FracError {
    /// True when the error reports bad inputs rather than a failure of the
    /// numerics on valid inputs.
    pub fn is_precondition(&self) -> bool {
        !matches!(
            self,
            FracError::NonFinite(_)
                | FracError::NoConvergence { .. }
                | FracError::IndefiniteOperator
                | FracError::SingularSystem
                | FracError::DegenerateGram
                | FracError::MomentDefect { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, FracError>;
