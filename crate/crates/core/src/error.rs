use thiserror::Error;

/// Errors produced by the factorization, diagnostics, and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A dense partial-pivoted factorization met a pivot that is zero to
    /// working precision. `index` is 0-based.
    #[error("matrix is singular to working precision at pivot {index}")]
    SingularPivot { index: usize },

    /// A diagonal block could not be factored or inverted. `block` is 1-based,
    /// matching the elimination step numbering.
    #[error("diagonal block {block} is singular to working precision")]
    SingularBlock { block: usize },

    #[error("Jacobi SVD did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures that come from floating-point breakdown rather than
    /// caller misuse.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularPivot { .. }
                | Error::SingularBlock { .. }
                | Error::SvdNoConvergence { .. }
                | Error::EigenNoConvergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
