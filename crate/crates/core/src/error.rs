use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("uncertainty bound violated: determinant {det} is below {bound}")]
    Uncertainty { det: f64, bound: f64 },

    #[error("grid under-resolved: {leak:.3e} of the total weight sits at the grid edge")]
    Aliasing { leak: f64 },

    #[error("grid too large: {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: usize, limit: usize },

    #[error("tag stream is not sorted at index {index}")]
    Unsorted { index: usize },

    #[error("tag file parse error at byte {offset}: {reason}")]
    Parse { offset: u64, reason: String },

    #[error("run length overflows the timestamp range: {0}")]
    Overflow(String),

    #[error("SNR is infinite: {0}")]
    InfiniteSnr(String),

    #[error("config `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("no significant coincidence peak: {net:.1} net counts, {threshold:.1} required")]
    NoSignificantPeak { net: f64, threshold: f64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::param(name, reason)
}
