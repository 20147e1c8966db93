use thiserror::Error;

/// Errors produced by the library, grouped by the caller action needed to fix them.
#[derive(Debug, Error)]
pub enum Error {
    /// An API was called with arguments that violate its contract.
    #[error("usage: {0}")]
    Usage(String),
    /// An experiment or dataset configuration is invalid.
    #[error("config: {0}")]
    Config(String),
    /// A file did not match its expected on-disk format.
    #[error("format: {0}")]
    Format(String),
    /// The request exceeds what an exact (enumeration-based) routine can handle.
    #[error("capability: {0}")]
    Capability(String),
    /// A computation produced or received non-finite values.
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Prefix the message with a pipeline stage label.
    pub fn with_stage(self, stage: &str) -> Self {
        match self {
            Error::Usage(m) => Error::Usage(format!("[{stage}] {m}")),
            Error::Config(m) => Error::Config(format!("[{stage}] {m}")),
            Error::Format(m) => Error::Format(format!("[{stage}] {m}")),
            Error::Capability(m) => Error::Capability(format!("[{stage}] {m}")),
            Error::Numeric(m) => Error::Numeric(format!("[{stage}] {m}")),
            Error::Io(e) => Error::Format(format!("[{stage}] io: {e}")),
        }
    }

    /// Process exit code convention: 2 configuration, 3 data format, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) | Error::Capability(_) => 2,
            Error::Format(_) | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}
