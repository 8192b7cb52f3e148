use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid dimensions {rows}x{cols}")]
    InvalidDimensions { rows: usize, cols: usize },

    #[error("index {index} out of range for {bound} rows")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("active indices must be strictly increasing (violated at position {position})")]
    UnsortedIndices { position: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: file contains no records")]
    EmptyInput(PathBuf),

    #[error("filtering left no interactions (user >= {min_user}, item >= {min_item})")]
    EmptyAfterFilter { min_user: usize, min_item: usize },

    #[error("user {user} has only {available} candidate items, {needed} required")]
    InsufficientCandidates {
        user: usize,
        available: usize,
        needed: usize,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("tensor {name} has shape {found:?}, architecture requires {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("architecture mismatch: {0}")]
    ArchMismatch(String),

    #[error("cache does not belong to this model: {0}")]
    CacheMismatch(String),

    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
