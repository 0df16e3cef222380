//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the routing engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (bad record, bad magic bytes, failed checksum, ...).
    #[error("data format error: {0}")]
    DataFormat(String),

    /// An id that must be unique was seen twice.
    #[error("duplicate id: {0}")]
    DuplicateId(String),

    /// A model id referenced by a record is absent from the catalog.
    #[error("unknown model id: {0}")]
    UnknownModel(String),

    /// Vector or parameter dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model index is out of range for the configured model count.
    #[error("index out of range: {0}")]
    Index(String),

    /// A computed quantity is NaN or infinite where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// An operation that requires a non-empty input received an empty one.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// No candidate model satisfies the requested cost budget.
    #[error("budget infeasible: no candidate with cost <= {0}")]
    BudgetInfeasible(String),

    /// Agent filtering produced no candidates; caller should fall back to LLM routing.
    #[error("no candidate agents for query")]
    NoCandidate,

    /// A logit mask would block every token.
    #[error("mask has no available tokens")]
    EmptyAvailable,

    /// A pluggable decision backend failed.
    #[error("decision backend '{backend}' failed: {message}")]
    Backend { backend: String, message: String },

    /// Cache configured with zero capacity.
    #[error("cache capacity must be positive")]
    Capacity,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn data_format(msg: impl Into<String>) -> Self {
        Error::DataFormat(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// `std::fs::read_to_string` with the path attached to the error message.
pub(crate) fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_with_path(path, e))
}

/// `std::fs::read` with the path attached to the error message.
pub(crate) fn read_file_bytes(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_with_path(path, e))
}

/// `std::fs::write` with the path attached to the error message.
pub(crate) fn write_file(path: &std::path::Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| io_with_path(path, e))
}

fn io_with_path(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}
