use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the worst-case load pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context} at line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("rank deficient design matrix: numerical rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("eigensolver did not converge within {max_iterations} iterations")]
    EigenNonConvergence { max_iterations: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("line search failed after {trials} trials (last objective {last_value})")]
    LineSearch { trials: usize, last_value: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Config(_)
            | Error::RankDeficient { .. } => 2,
            Error::Singular(_)
            | Error::EigenNonConvergence { .. }
            | Error::Solver(_)
            | Error::LineSearch { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
