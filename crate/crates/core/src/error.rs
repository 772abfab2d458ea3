use std::path::PathBuf;

/// Errors produced by the core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value or record violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// Stream time went backwards.
    #[error("stream-order error: {0}")]
    StreamOrder(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("credential error for {platform}: {message}")]
    Credential { platform: String, message: String },

    #[error("adapter error for query {query:?}: {message}")]
    Adapter { query: String, message: String },

    #[error("normalization error: {message} (payload: {excerpt})")]
    Normalization { message: String, excerpt: String },

    #[error("geocoder lookup failed for {input:?}: {message}")]
    Lookup { input: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from the filesystem rather than from the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
