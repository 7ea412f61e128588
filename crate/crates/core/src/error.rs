use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("operation `{op}` is not supported on basis `{basis}`")]
    UnsupportedBasis { op: String, basis: String },

    #[error("time {0} is not aligned to the path grid (dt = {1})")]
    OffGrid(f64, f64),

    #[error("requested window [{0}, {1}] exceeds the path horizon [{2}, {3}]")]
    WindowExceeded(f64, f64, f64, f64),

    #[error("nonlinear solve failed at t = {time}: {reason}")]
    SolverDiverged { time: f64, reason: String },

    #[error("admissibility gate `{gate}` refused: {reason}")]
    GateRefused { gate: String, reason: String },

    #[error("pullback schedule exhausted before tolerance {tol} was met (gap = {gap})")]
    ScheduleExhausted { tol: f64, gap: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Format(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
