use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("symbol vanishes on the normal ray (|p(0,{0})| below threshold)")]
    DegenerateNormal(i8),
    #[error("value {0} lies on the principal-log cut")]
    BranchAmbiguity(String),
    #[error("remainder p - p_hat vanishes on every sampled ray")]
    AllZeroRemainder,
    #[error("slice is not bounded away from zero (min/max modulus {0:e})")]
    NotElliptic(f64),
    #[error("nonzero winding number {0} of the normalized slice")]
    NonzeroWinding(i64),
    #[error("argument increment {0:.3} exceeds pi; refine the grid")]
    UnresolvedWinding(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("support tag mismatch: {0}")]
    SupportMismatch(String),
    #[error("trace routes disagree by {0:.3e}")]
    TraceUnstable(f64),
    #[error("symbol decay exponent {0:.3} is not summable (need < -1/2)")]
    NotSummable(f64),
    #[error("residual {0:.3e} exceeds tolerance")]
    ResidualTooLarge(f64),
    #[error("Re mu = {0} must be positive")]
    MuNotPositive(f64),
    #[error("mu out of range: {0}")]
    MuOutOfRange(String),
    #[error("fit window contains no usable samples")]
    WindowEmpty,
    #[error("pole {0} too close to the real axis")]
    PoleOnAxis(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("singular matrix (pivot {0:e})")]
    SingularMatrix(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
