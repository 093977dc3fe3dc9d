use thiserror::Error;

/// Errors raised by the beamforming library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mean channel is rank deficient: users {user_a} and {user_b} are linearly dependent")]
    RankDeficient { user_a: usize, user_b: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("matrix is not Hermitian positive semidefinite (min eigenvalue {min_eigenvalue:e}, trace {trace:e})")]
    NotPsd { min_eigenvalue: f64, trace: f64 },

    #[error("bisection bracket violated: f(lo={lo})={f_lo}, f(hi={hi})={f_hi}, target {target}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        target: f64,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("log argument {value:e} is not positive for user {user}")]
    NonPositiveLogArgument { user: usize, value: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dims(rows: usize, cols: usize) -> String {
    format!("{rows}x{cols}")
}
