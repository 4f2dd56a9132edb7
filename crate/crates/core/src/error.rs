use std::io;

use thiserror::Error;

/// Errors produced anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value in row {row} of input to {op}")]
    NonFinite { op: &'static str, row: usize },

    #[error("gold label index {index} out of range for {labels} labels (token {token})")]
    GoldOutOfRange {
        token: usize,
        index: usize,
        labels: usize,
    },

    #[error("cannot pool an empty matrix")]
    EmptyPool,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("taxonomy error: {0}")]
    Taxonomy(String),

    #[error("label `{label}` has only {available} entity occurrences, {required} required")]
    InsufficientEntities {
        label: String,
        available: usize,
        required: usize,
    },

    #[error("label cache was built for taxonomy {expected}, but taxonomy {found} is in use")]
    TaxonomyHashMismatch { expected: String, found: String },

    #[error("static vector file: {0}")]
    StaticVectors(String),

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Shape {
        op,
        detail: detail.into(),
    }
}
