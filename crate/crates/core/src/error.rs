use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series centers differ ({0} vs {1})")]
    CenterMismatch(f64, f64),
    #[error("division by a series with zero constant term")]
    ZeroConstantTerm,
    #[error("log of a series with nonpositive constant term {0}")]
    NonPositiveLog(f64),
    #[error("series order {have} is too low, need at least {need}")]
    InsufficientOrder { need: usize, have: usize },
    #[error("composition requires inner constant term {inner} to equal outer center {outer}")]
    CompositionMismatch { inner: f64, outer: f64 },
    #[error("{what} = {value} is outside the supported range {range}")]
    Guard { what: &'static str, value: i64, range: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coincident entries: {0}")]
    Coincident(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
