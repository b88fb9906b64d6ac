use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("lexer error at line {line}, column {col}: {msg}")]
    Lex { line: usize, col: usize, msg: String },

    #[error("no functions found under {root}")]
    EmptyExtraction { root: PathBuf },

    #[error("power iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    Convergence {
        iterations: usize,
        residual: f64,
        /// Last iterate, so callers can inspect or resume.
        last: Vec<f64>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("problem too large for dense solver: n = {n} exceeds limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
