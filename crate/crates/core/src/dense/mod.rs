//! Dense matrices, block partitions, norms, and the small-matrix SVD.

mod blocking;
mod eigen;
mod lu;
mod matrix;
mod norm;
mod svd;

pub use blocking::Blocking;
pub use eigen::symmetric_eigenvalues;
pub use lu::{inverse, solve_dense_lu, DenseLu};
pub use matrix::{Matrix, UNIT_ROUNDOFF};
pub use norm::{cond, norm, NormKind};
pub use svd::{
    cond2, sigma_max, sigma_min, singular_values, svd, svd_small, Svd, MAX_SMALL_DIM, MAX_SWEEPS,
};

pub use matrix::norm2_vec;
#[allow(unused_imports)]
pub(crate) use matrix::dot;

/// Copies block rows `bi` by block columns `bj` (0-based, half-open block
/// ranges) of `a` under `blocking`.
pub fn block_view(
    a: &Matrix,
    blocking: &Blocking,
    bi: std::ops::Range<usize>,
    bj: std::ops::Range<usize>,
) -> crate::Result<Matrix> {
    let nt = blocking.num_blocks();
    blocking.check_dim(a.rows(), "block_view")?;
    blocking.check_dim(a.cols(), "block_view")?;
    if bi.start >= bi.end || bj.start >= bj.end || bi.end > nt || bj.end > nt {
        return Err(crate::Error::InvalidArgument(format!(
            "block range {bi:?} x {bj:?} outside 0..{nt}"
        )));
    }
    Ok(a.submatrix(blocking.span(bi), blocking.span(bj)))
}
