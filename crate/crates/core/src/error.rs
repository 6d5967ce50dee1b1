//! Error type shared by all analysis stages.
//!
//! Each variant carries a stable machine-readable code (see [`Error::code`])
//! so that CLI consumers can match on failures without parsing messages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Design generation parameters admit no reconvergent equal-length path pair.
    #[error("unsatisfiable design parameters: {0}")]
    UnsatisfiableParams(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Two paths in a design file share the same id.
    #[error("duplicate path id {0}")]
    DuplicatePathId(u64),

    /// A path with no components.
    #[error("path {0} has an empty component list")]
    EmptyPath(u64),

    /// A sampled component delay stayed non-positive after resampling.
    #[error("component `{component}` sampled a non-positive delay for instance {instance}")]
    NonPositiveDelay { component: String, instance: usize },

    /// Ragged rows or inconsistent dimensions in a dataset file.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An instance whose delays have zero spread; compensation is undefined for it.
    #[error("degenerate instance {instance}: standard deviation is zero")]
    DegenerateInstance { instance: usize },

    /// Attempted to pair paths of opposite transition polarity.
    #[error("polarity mismatch between paths {a} and {b}")]
    PolarityMismatch { a: u32, b: u32 },

    /// Retained pair count exceeded the configured cap.
    #[error("retained pair count {count} exceeds capacity cap {cap}")]
    CapacityExceeded { count: u64, cap: u64 },

    /// No L class contains two included subclasses with adjacent node counts.
    #[error("no consecutive node-mismatch subclasses available for differencing")]
    NoConsecutiveSubclasses,

    /// Regression input with no spread on the x axis.
    #[error("singular fit: all x values identical")]
    SingularFit,

    /// Bitstrings of unequal length in a quality computation.
    #[error("bitstring length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable error code, independent of message wording.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnsatisfiableParams(_) => "UNSATISFIABLE_PARAMS",
            Error::Parse { .. } => "PARSE_ERROR",
            Error::DuplicatePathId(_) => "DUPLICATE_PATH_ID",
            Error::EmptyPath(_) => "EMPTY_PATH",
            Error::NonPositiveDelay { .. } => "NONPOSITIVE_DELAY",
            Error::DimensionMismatch(_) => "DIMENSION_MISMATCH",
            Error::DegenerateInstance { .. } => "DEGENERATE_INSTANCE",
            Error::PolarityMismatch { .. } => "POLARITY_MISMATCH",
            Error::CapacityExceeded { .. } => "CAPACITY_EXCEEDED",
            Error::NoConsecutiveSubclasses => "NO_CONSECUTIVE_SUBCLASSES",
            Error::SingularFit => "SINGULAR_FIT",
            Error::LengthMismatch { .. } => "LENGTH_MISMATCH",
            Error::Io { .. } => "IO_ERROR",
        }
    }

    /// True for errors caused by invalid inputs or parameters (as opposed to
    /// environment/IO failures). CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
