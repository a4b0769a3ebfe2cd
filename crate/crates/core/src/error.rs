use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entry count {got} does not match a {rows}x{cols} matrix")]
    Shape { rows: usize, cols: usize, got: usize },

    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error(
        "eigensolver did not converge on a {dim}x{dim} matrix \
         (frobenius norm {frobenius:e}, max |entry| {max_abs:e})"
    )]
    NoConvergence { dim: usize, frobenius: f64, max_abs: f64 },

    #[error(
        "matrix exponential overflows: max eigenvalue {max_eigenvalue} exceeds {limit}; \
         use the shift-invariant Gibbs map instead"
    )]
    ExpOverflow { max_eigenvalue: f64, limit: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible point: {0}")]
    Infeasible(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    /// Numerical failures abort a solver run; everything else is a caller error.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(..) | Error::NoConvergence { .. } | Error::ExpOverflow { .. } | Error::Infeasible(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
