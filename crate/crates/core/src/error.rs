use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("malformed {what} at line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("invalid geography: {0}")]
    Geography(#[from] GeographyError),

    #[error("invalid chain: {0}")]
    Chain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Validation failures when loading or building a [`crate::districting::Geography`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeographyError {
    #[error("unsupported format version {0} (expected 1)")]
    Format(u64),
    #[error("duplicate precinct id {0:?}")]
    DuplicateId(String),
    #[error("adjacency record references unknown precinct {0:?}")]
    UnknownId(String),
    #[error("precinct {0:?} is listed as adjacent to itself")]
    SelfAdjacency(String),
    #[error("adjacency ({a:?}, {b:?}) has nonpositive shared length {length}")]
    NonpositiveLength { a: String, b: String, length: f64 },
    #[error("adjacency ({a:?}, {b:?}) has no matching ({b:?}, {a:?}) record")]
    Asymmetric { a: String, b: String },
    #[error("adjacency ({a:?}, {b:?}) listed with lengths {forward} and {backward}")]
    LengthMismatch {
        a: String,
        b: String,
        forward: f64,
        backward: f64,
    },
    #[error("adjacency ({a:?}, {b:?}) listed more than once")]
    DuplicateAdjacency { a: String, b: String },
    #[error("precinct {id:?}: exterior plus shared lengths {computed} differ from perimeter {declared}")]
    PerimeterMismatch {
        id: String,
        declared: f64,
        computed: f64,
    },
    #[error("precinct {0:?}: dem + rep votes exceed total votes")]
    Votes(String),
    #[error("precinct {id:?}: field {field} must be finite and nonnegative")]
    BadMeasure { id: String, field: &'static str },
    #[error("geography has no precincts")]
    Empty,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
