use thiserror::Error;

/// Errors raised by the interpolation, norm and study routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel spec: {0}")]
    InvalidSpec(String),

    #[error("argument {value} outside the admissible range {range}")]
    OutOfDomain { value: f64, range: &'static str },

    #[error("Bernoulli degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("level mismatch: {0}")]
    LevelMismatch(String),

    #[error("eigenvalue {value:e} at mode {mode} is below the conditioning floor")]
    Conditioning { mode: usize, value: f64 },

    #[error("kernel series needs more than {budget} terms at this argument")]
    SeriesBudget { budget: u64 },

    #[error("size budget exceeded: {0}")]
    SizeBudget(String),

    #[error("index set is not downward closed at {0:?}")]
    NotDownwardClosed(Vec<usize>),

    #[error("band limit {band_limit} exceeds the Nyquist frequency {nyquist} of the reference grid")]
    BandLimit { band_limit: usize, nyquist: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
