use std::path::PathBuf;

use crate::design::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid design: {}", join_violations(.0))]
    InvalidDesign(Vec<Violation>),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("finger {0} is already terminal")]
    FingerTerminal(usize),

    #[error("unknown evaluator id `{0}`")]
    UnknownEvaluator(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },

    #[error("empty budget")]
    EmptyBudget,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Errors caused by bad user input, as opposed to internal failures.
    /// Missing or unreadable files count as user errors.
    pub fn is_user_error(&self) -> bool {
        use std::io::ErrorKind::*;
        match self {
            Error::NonFiniteLoss { .. } => false,
            Error::Io { source, .. } => {
                matches!(source.kind(), NotFound | PermissionDenied | InvalidInput | InvalidData | IsADirectory)
            }
            _ => true,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
