use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed spec: {0}")]
    Malformed(String),
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("scalar mode mismatch: cannot mix exact and log-domain values")]
    ModeMismatch,
    #[error("enumeration budget of {budget} points exhausted")]
    BudgetExhausted { budget: usize },
    #[error("tabulated scaling function has no value at n = {0}")]
    TableExhausted(u64),
    #[error("integer set is only known up to {horizon}; query at {at}")]
    Horizon { horizon: u64, at: u64 },
    #[error("value not representable in this scalar mode: {0}")]
    Unrepresentable(String),
    #[error("path disagreement: direct {direct} vs ratio formula {formula} (tol {tol})")]
    Disagreement { direct: f64, formula: f64, tol: f64 },
    #[error("scaling function is not eventually concave at depth (last violation at n = {0})")]
    NotEventuallyConcave(u64),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExhausted { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}
