//! Matrix norms, including block-max and block-sum norms over a partition.
//!
//! All norms here belong to dimension-invariant families: for any partition
//! of `A` into blocks, `max ‖A_ij‖ <= ‖A‖ <= Σ ‖A_ij‖`, and zero padding does
//! not change the value.

use std::fmt;

use serde::{Serialize, Serializer};

use super::blocking::Blocking;
use super::matrix::Matrix;
use super::svd::singular_values;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum NormKind {
    /// Largest absolute entry.
    Max,
    /// Operator 1-norm (max column sum).
    One,
    /// Operator ∞-norm (max row sum).
    Inf,
    Frobenius,
    /// Largest singular value.
    Spectral,
    /// Sum of absolute entries.
    Sum,
    /// Largest inner norm over the blocks of a `rows × cols` partition.
    BlockMax {
        inner: Box<NormKind>,
        rows: Blocking,
        cols: Blocking,
    },
    /// Sum of inner norms over the blocks of a `rows × cols` partition.
    BlockSum {
        inner: Box<NormKind>,
        rows: Blocking,
        cols: Blocking,
    },
}

impl NormKind {
    /// The operator and entrywise norms that need no partition.
    pub const BASIC: [NormKind; 5] = [
        NormKind::Max,
        NormKind::One,
        NormKind::Inf,
        NormKind::Frobenius,
        NormKind::Spectral,
    ];

    pub fn block_max(inner: NormKind, blocking: &Blocking) -> Self {
        NormKind::BlockMax {
            inner: Box::new(inner),
            rows: blocking.clone(),
            cols: blocking.clone(),
        }
    }

    pub fn block_sum(inner: NormKind, blocking: &Blocking) -> Self {
        NormKind::BlockSum {
            inner: Box::new(inner),
            rows: blocking.clone(),
            cols: blocking.clone(),
        }
    }

    pub fn is_block(&self) -> bool {
        matches!(self, NormKind::BlockMax { .. } | NormKind::BlockSum { .. })
    }

    /// Inner norm of a block kind, `self` otherwise.
    pub fn inner(&self) -> &NormKind {
        match self {
            NormKind::BlockMax { inner, .. } | NormKind::BlockSum { inner, .. } => inner,
            other => other,
        }
    }

    /// `‖AB‖ <= ‖A‖‖B‖`. Block-max is never submultiplicative; block-sum is
    /// exactly when its inner norm is.
    pub fn is_submultiplicative(&self) -> bool {
        match self {
            NormKind::Max => false,
            NormKind::One
            | NormKind::Inf
            | NormKind::Frobenius
            | NormKind::Spectral
            | NormKind::Sum => true,
            NormKind::BlockMax { .. } => false,
            NormKind::BlockSum { inner, .. } => inner.is_submultiplicative(),
        }
    }

    /// The same kind restricted to the trailing square matrix that starts at
    /// block `k` of a square partition.
    pub fn trailing(&self, k: usize) -> NormKind {
        match self {
            NormKind::BlockMax { inner, rows, cols } => NormKind::BlockMax {
                inner: inner.clone(),
                rows: rows.trailing(k),
                cols: cols.trailing(k),
            },
            NormKind::BlockSum { inner, rows, cols } => NormKind::BlockSum {
                inner: inner.clone(),
                rows: rows.trailing(k),
                cols: cols.trailing(k),
            },
            other => other.clone(),
        }
    }

    /// Same kind ignoring the partition, for matching a traced kind against
    /// a request that was built for another blocking of the same shape.
    pub fn same_family(&self, other: &NormKind) -> bool {
        match (self, other) {
            (NormKind::BlockMax { inner: a, .. }, NormKind::BlockMax { inner: b, .. })
            | (NormKind::BlockSum { inner: a, .. }, NormKind::BlockSum { inner: b, .. }) => {
                a.same_family(b)
            }
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Max => write!(f, "max"),
            NormKind::One => write!(f, "1"),
            NormKind::Inf => write!(f, "inf"),
            NormKind::Frobenius => write!(f, "fro"),
            NormKind::Spectral => write!(f, "2"),
            NormKind::Sum => write!(f, "sum"),
            NormKind::BlockMax { inner, .. } => write!(f, "blockmax_{inner}"),
            NormKind::BlockSum { inner, .. } => write!(f, "blocksum_{inner}"),
        }
    }
}

impl Serialize for NormKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Evaluates `‖A‖` in the requested norm.
pub fn norm(a: &Matrix, kind: &NormKind) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::invalid("norm of an empty matrix"));
    }
    Ok(match kind {
        NormKind::Max => a.max_abs(),
        NormKind::One => (0..a.cols())
            .map(|j| (0..a.rows()).map(|i| a.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Inf => (0..a.rows())
            .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Frobenius => super::matrix::norm2_vec(a.data()),
        NormKind::Spectral => {
            if !a.is_finite() {
                return Ok(f64::INFINITY);
            }
            singular_values(a)?[0]
        }
        NormKind::Sum => a.data().iter().map(|v| v.abs()).sum(),
        NormKind::BlockMax { inner, rows, cols } => {
            let mut best = 0.0f64;
            for_each_block(a, rows, cols, |b| {
                best = best.max(norm(b, inner)?);
                Ok(())
            })?;
            best
        }
        NormKind::BlockSum { inner, rows, cols } => {
            let mut total = 0.0;
            for_each_block(a, rows, cols, |b| {
                total += norm(b, inner)?;
                Ok(())
            })?;
            total
        }
    })
}

fn for_each_block(
    a: &Matrix,
    rows: &Blocking,
    cols: &Blocking,
    mut f: impl FnMut(&Matrix) -> Result<()>,
) -> Result<()> {
    if rows.dim() != a.rows() || cols.dim() != a.cols() {
        return Err(Error::invalid(format!(
            "block norm partition {}x{} does not match matrix {}x{}",
            rows.dim(),
            cols.dim(),
            a.rows(),
            a.cols()
        )));
    }
    for i in 0..rows.num_blocks() {
        for j in 0..cols.num_blocks() {
            f(&a.submatrix(rows.range(i), cols.range(j)))?;
        }
    }
    Ok(())
}

/// `κ_α(A) = ‖A‖_α ‖A⁻¹‖_α`; infinite if `A` is singular to working precision.
pub fn cond(a: &Matrix, kind: &NormKind) -> Result<f64> {
    if *kind == NormKind::Spectral {
        return super::svd::cond2(a);
    }
    match super::lu::inverse(a) {
        Ok(inv) => Ok(norm(a, kind)? * norm(&inv, kind)?),
        Err(Error::SingularPivot { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}
