use thiserror::Error;

/// Errors raised by the joint-measurability toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("{name} = {value} is outside the closed unit interval")]
    OutOfUnitInterval { name: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector is not normalized: squared norm {0}")]
    NotNormalized(f64),

    #[error("matrix is not unitary: max deviation of U U^dagger from identity is {0:e}")]
    NotUnitary(f64),

    #[error("not a density operator: {0}")]
    InvalidState(String),

    #[error("boundary endpoint t = 1 has zero efficiency and undefined visibility")]
    DegenerateEndpoint,

    #[error("closed form d(1-p)^(d-1) only holds for 1/2 < p <= 1, got p = {0}")]
    OutsideSimpleRegime(f64),

    #[error("boundary visibility p(t) is not monotone for d = {d} near t = {t}")]
    NonMonotoneVisibility { d: usize, t: f64 },

    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("chi-square bin {bin} has expected count {expected:.3} below 5")]
    SparseBin { bin: usize, expected: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
