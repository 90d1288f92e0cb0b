use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the band pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {file}{}: {msg}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Parse {
        file: PathBuf,
        line: Option<usize>,
        msg: String,
    },

    #[error("split error: {0}")]
    Split(String),

    #[error("score ingest error at row {row}: {msg}")]
    ScoreIngest { row: usize, msg: String },

    #[error("numerical error ({context}): {msg}")]
    Numerical { context: String, msg: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A label stratum (globally or inside a neighbourhood) is too small.
    #[error("label {label} stratum has {found} member(s), need at least {required}{}", diagnostics.as_deref().map(|d| format!(" [{d}]")).unwrap_or_default())]
    Stratum {
        label: usize,
        found: usize,
        required: usize,
        diagnostics: Option<String>,
    },

    #[error("degenerate test set: {0}")]
    DegenerateTest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(file: impl Into<PathBuf>, line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn numerical(context: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Numerical {
            context: context.into(),
            msg: msg.into(),
        }
    }

    /// True for errors caused by numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
