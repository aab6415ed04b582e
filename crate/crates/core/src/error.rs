use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("feature dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("sample metadata has no camera labels")]
    EmptyCameraSet,

    #[error("row {row} has zero norm and cannot be normalized")]
    ZeroNorm { row: usize },

    #[error("distance matrix entry ({row}, {col}) = {value} is outside the valid range for {kind:?}")]
    DistanceOutOfRange {
        row: usize,
        col: usize,
        value: f64,
        kind: crate::DistanceKind,
    },

    #[error("expected a square distance matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("distance matrix of kind {found:?} is not accepted here")]
    WrongKind { found: crate::DistanceKind },

    #[error("neighbor set of sample {sample} is empty")]
    EmptyNeighborSet { sample: usize },

    #[error("index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate index {index}")]
    DuplicateIndex { index: usize },

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("blend weight {0} outside [0, 1]")]
    InvalidLambda(f64),

    #[error("identity labels are required but missing")]
    MissingIdentities,

    #[error("no query has a valid ground-truth match in the gallery")]
    NoValidQuery,

    #[error("{path}: bad magic bytes {found:?}, expected {expected:?}")]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("{path}: unsupported format version {version}")]
    UnsupportedVersion { path: PathBuf, version: u32 },

    #[error("{path}: truncated file, expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("{path}: {found} bytes but header declares {expected}")]
    TrailingBytes {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
