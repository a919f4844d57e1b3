use thiserror::Error;

/// Errors raised by the statistics in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size {requested} outside supported range [{min}, {max}]")]
    Size { requested: u64, min: u64, max: u64 },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("multiplicative spec is inconsistent: {0}")]
    Validation(String),

    #[error("computation budget exceeded: {needed} > {budget}")]
    Budget { needed: u128, budget: u128 },

    #[error("sequence has a continuous alphabet; use the eps-rounded word count instead")]
    ContinuousAlphabet,

    #[error("sequence has length {len}, but {needed} terms were requested")]
    TooShort { len: u64, needed: u64 },

    #[error("malformed sieve cache: {0}")]
    Cache(String),

    #[error("{0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
