use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor argument failed validation. `field` is a dotted path.
    #[error("invalid {field}: {message}")]
    InvalidSpec { field: String, message: String },

    #[error("tail rule cannot bound the requested quantity at index {index}: {reason}")]
    TailUnbounded { index: u64, reason: String },

    #[error("factor {index} is {value}, outside (0, 1]")]
    FactorOutOfRange { index: u64, value: f64 },

    #[error("probability vectors have lengths {left} and {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("coordinate {index}: symbol {symbol} has positive mass under the dominated law but zero mass under the dominating law")]
    DominationViolation { index: u64, symbol: usize },

    #[error("measures or map live on different spaces: {0}")]
    SpaceMismatch(String),

    #[error("level {level} exceeds the enumeration limit {max}")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("x = {x} outside the support hull [0, {upper}]")]
    Domain { x: f64, upper: f64 },

    #[error("argument out of range: {0}")]
    Range(String),

    #[error("box size {box_size} is finer than the cylinder length {tail} at this level")]
    Resolution { box_size: f64, tail: f64 },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidSpec { field: field.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
