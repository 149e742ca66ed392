use thiserror::Error;

/// Errors produced by construction and evolution operations.
#[derive(Debug, Error)]
pub enum Error {
    /// The degree function dips below the floor needed to divide by `k(y)`.
    #[error("degree function minimum {min:.6e} is below the floor {floor:.6e}")]
    DegreeTooSmall { min: f64, floor: f64 },

    /// A node with zero strength cannot host a walker.
    #[error("node {0} has zero strength")]
    IsolatedNode(usize),

    /// A grid resolution that must be a multiple of a coarser one is not.
    #[error("resolution {target} is not a positive multiple of {n}")]
    IncompatibleResolution { n: usize, target: usize },

    /// A value left the admissible range `[0, 1]`.
    #[error("{context}: value {value} outside [0, 1]")]
    OutOfRange { value: f64, context: String },

    /// An adjacency matrix is not symmetric.
    #[error("matrix not symmetric at ({i}, {j}): {a} vs {b}")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },

    /// The spectral gap is numerically zero (disconnected or degenerate case).
    #[error("spectral gap is numerically zero; analyze connected components separately")]
    ZeroGap,

    /// A structural hypothesis required by an operation does not hold.
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    /// A configuration record or argument set cannot be interpreted.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A serialized file does not match its documented format.
    #[error("malformed data: {0}")]
    MalformedData(String),

    /// A numeric check failed (non-finite values, violated estimate).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
