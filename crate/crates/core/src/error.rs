use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("corpus contains no sentences")]
    EmptyCorpus,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid UTF-8 on line {line}")]
    Encoding { path: PathBuf, line: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("candidates share no common prefix")]
    EmptyMerge,

    #[error("unsupported map schema version {found} (expected {expected})")]
    SchemaVersionMismatch { found: u64, expected: u64 },

    #[error("corrupt map file: {0}")]
    CorruptMap(String),

    #[error("vocabulary mismatch: map has {map} entries, model has {model}")]
    VocabMismatch { map: usize, model: usize },

    #[error("trace count mismatch: {speculative} speculative vs {baseline} baseline")]
    LengthMismatch { speculative: usize, baseline: usize },

    #[error("batch contains no prompts")]
    EmptyBatch,

    #[error("item {index}: {source}")]
    Item {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips `Item` wrappers and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Item { source, .. } => source.root(),
            other => other,
        }
    }
}
