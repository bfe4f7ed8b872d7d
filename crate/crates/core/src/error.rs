use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unsupported dimension N = {0} (expected 2, 3 or 4)")]
    UnsupportedDimension(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),
    #[error("invalid exponent q = {0} (need q >= 1)")]
    InvalidExponent(f64),
    #[error("fractional Sobolev order is only available for boundary fields")]
    UnsupportedSurrogate,
    #[error("diffeomorphism condition violated: max |d_N E eta| = {max_slope:.6e} > 1/2")]
    DiffeoViolation { max_slope: f64 },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("Picard iteration diverged (ratios {ratios:?})")]
    PicardDivergence { ratios: Vec<f64> },
    #[error("incompatible initial data: divergence residual {div:.3e}, tangential stress residual {stress:.3e}")]
    IncompatibleData { div: f64, stress: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("non-positive sample at t = {0}")]
    NonPositiveSample(f64),
    #[error("missing component: {0}")]
    MissingComponent(String),
}
