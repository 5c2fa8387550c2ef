use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("index set must contain at least one point")]
    EmptySet,
    #[error("point {index} has {found} coordinates, expected {expected}")]
    RaggedPoint {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("enumeration cap exceeded: {what} = {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(usize),
    #[error("function does not supply partial derivatives of order {0}")]
    MissingPartial(usize),
    #[error("moment hypothesis violated: {0}")]
    MomentHypothesis(&'static str),
    #[error("tolerance unreachable: {0}")]
    ToleranceUnreachable(String),
    #[error("too few replicates: {found} < {min}")]
    TooFewReplicates { found: usize, min: usize },
    #[error("curve requires an almost-sure bound M on the coordinates")]
    MissingBound,
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
