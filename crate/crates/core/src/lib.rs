//! Block LU factorization with pluggable diagonal-block factorizers, the
//! BEAM additive-modification variant, growth tracing under block norms,
//! matrix generators, and executable stability checks.

pub mod beam;
pub mod block_lu;
pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod gallery;

pub use error::{Error, Result};
