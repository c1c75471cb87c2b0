use std::path::PathBuf;

/// Failures surfaced to callers of the library's fallible entry points.
///
/// Contract violations on internal hot paths (dimension mismatches between
/// pre-validated structures, out-of-range node indices) panic instead; every
/// input that can originate outside the process gets a variant here.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    AlistParse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("q-table: {0}")]
    QTable(String),

    #[error("manifest {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
