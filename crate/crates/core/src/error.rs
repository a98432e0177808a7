use thiserror::Error;

/// Errors produced by the tensor, transform, solver and file routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectrum is not conjugate symmetric (imaginary residue {residue:e})")]
    NotConjugateSymmetric { residue: f64 },

    #[error("matrix is not block diagonal (off-block mass {mass:e})")]
    NotBlockDiagonal { mass: f64 },

    #[error("SVD of transform-domain slice {slice} did not converge")]
    SvdNotConverged { slice: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("malformed tensor file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
