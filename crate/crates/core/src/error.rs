use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while ingesting inputs or running the editing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter `{field}`: {msg}")]
    Param { field: &'static str, msg: String },

    /// A parameter that fixes session state was changed on a live session.
    #[error("parameter `{0}` requires new session")]
    RequiresNewSession(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("length mismatch: {0} vs {1} frames")]
    LengthMismatch(usize, usize),

    #[error("window not full: {have} of {need} columns")]
    WindowNotFull { have: usize, need: usize },

    #[error("backtrack of {steps} steps exceeds window depth {depth}")]
    BacktrackTooDeep { steps: usize, depth: usize },

    #[error("instance too large for exhaustive search: {0} sequences")]
    TooLarge(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Attaches the originating file to an error.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than I/O.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InFile { source, .. } => source.is_validation(),
            Error::Io(_) => false,
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
