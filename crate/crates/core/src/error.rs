use thiserror::Error;

/// Broad category of a failure, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum PcsError {
    #[error("column {0} has zero variance")]
    ConstantColumn(usize),
    #[error("split fraction {fraction} is invalid for n = {n}")]
    BadFraction { fraction: f64, n: usize },
    #[error("response is constant or orthogonal to every feature")]
    DegenerateResponse,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("standard deviation must be positive, got {0}")]
    BadSd(f64),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("cannot drop {k} active features when only {active} are active")]
    KTooLarge { k: usize, active: usize },
    #[error("threshold screening removed every candidate model")]
    EmptySurvivors,
    #[error("truth set must be non-empty and must not contain every feature")]
    DegenerateTruth,
    #[error("not enough residual degrees of freedom: {selected} columns for {n} observations")]
    InsufficientDof { selected: usize, n: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl PcsError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            PcsError::BadFraction { .. }
            | PcsError::BadSd(_)
            | PcsError::BadConfig(_)
            | PcsError::KTooLarge { .. }
            | PcsError::Json(_) => ErrorKind::Config,
            PcsError::ConstantColumn(_)
            | PcsError::DegenerateResponse
            | PcsError::DimensionMismatch { .. }
            | PcsError::InvalidData(_)
            | PcsError::DegenerateTruth
            | PcsError::InsufficientDof { .. }
            | PcsError::Csv(_) => ErrorKind::Data,
            PcsError::EmptySurvivors | PcsError::Numerical(_) => ErrorKind::Numerical,
            PcsError::Io(_) => ErrorKind::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, PcsError>;
