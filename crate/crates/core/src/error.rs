use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid field mapping: {0}")]
    FieldMapping(String),

    #[error("cannot extract a host from {0:?}")]
    UnparseableAuthority(String),

    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("citation matrix would be empty: {0}")]
    EmptyMatrix(String),

    #[error("cannot exclude {requested} sources from a matrix with {rows} rows")]
    ExcludeTooMany { requested: usize, rows: usize },

    #[error("membership does not cover node {0}")]
    UncoveredNode(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed artifact {path}: {reason}")]
    MalformedArtifact { path: PathBuf, reason: String },

    #[error("missing artifact {path}; run the `{stage}` stage first")]
    MissingArtifact { path: PathBuf, stage: &'static str },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("network: {0}")]
    Network(String),

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),
}

impl Error {
    /// Process exit status for this error: 1 validation, 2 I/O, 3 network.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::MalformedArtifact { .. } | Error::Locked(_) => 2,
            Error::Network(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::MalformedArtifact {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
