//! Pointwise and block diagonal dominance, and the thresholds below which
//! BEAM is guaranteed not to modify a dominant matrix.

use serde::Serialize;

use crate::dense::{inverse, norm, sigma_min, symmetric_eigenvalues, Blocking, Matrix, NormKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointwiseDominance {
    pub by_rows: bool,
    pub by_cols: bool,
    /// `min_i |a_ii| − Σ_{j≠i} |a_ij|`.
    pub delta_r: f64,
    /// `min_i |a_ii| − Σ_{j≠i} |a_ji|`.
    pub delta_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockDominance {
    pub by_rows: bool,
    pub by_cols: bool,
    /// `min_i ‖A_ii⁻¹‖⁻¹ − Σ_{j≠i} ‖A_ij‖` in the row inner norm.
    pub delta_r: f64,
    /// `min_j ‖A_jj⁻¹‖⁻¹ − Σ_{i≠j} ‖A_ij‖` in the column inner norm.
    pub delta_c: f64,
    pub row_inner: NormKind,
    pub col_inner: NormKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    pub pointwise: PointwiseDominance,
    pub blockwise: BlockDominance,
}

/// `|a_ii| − Σ_{j≠i} |a_ij|` for every row.
pub fn row_margins(a: &Matrix) -> Vec<f64> {
    (0..a.rows())
        .map(|i| {
            let off: f64 = (0..a.cols()).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
            a.get(i, i).abs() - off
        })
        .collect()
}

/// `|a_jj| − Σ_{i≠j} |a_ij|` for every column.
pub fn col_margins(a: &Matrix) -> Vec<f64> {
    (0..a.cols())
        .map(|j| {
            let off: f64 = (0..a.rows()).filter(|&i| i != j).map(|i| a.get(i, j).abs()).sum();
            a.get(j, j).abs() - off
        })
        .collect()
}

/// `‖D⁻¹‖⁻¹`, zero when `D` is singular to working precision.
fn inverse_norm_recip(d: &Matrix, inner: &NormKind) -> Result<f64> {
    if *inner == NormKind::Spectral {
        return sigma_min(d);
    }
    match inverse(d) {
        Ok(inv) => Ok(1.0 / norm(&inv, inner)?),
        Err(Error::SingularPivot { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn check_square(a: &Matrix, blocking: &Blocking) -> Result<()> {
    if !a.is_square() {
        return Err(Error::invalid("dominance needs a square matrix"));
    }
    if blocking.dim() != a.rows() {
        return Err(Error::invalid("dominance: blocking does not match the matrix"));
    }
    Ok(())
}

/// Block column margins in the given inner norm.
pub fn block_col_margins(a: &Matrix, blocking: &Blocking, inner: &NormKind) -> Result<Vec<f64>> {
    check_square(a, blocking)?;
    let nt = blocking.num_blocks();
    (0..nt)
        .map(|j| {
            let cj = blocking.range(j);
            let diag = inverse_norm_recip(&a.submatrix(cj.clone(), cj.clone()), inner)?;
            let mut off = 0.0;
            for i in (0..nt).filter(|&i| i != j) {
                off += norm(&a.submatrix(blocking.range(i), cj.clone()), inner)?;
            }
            Ok(diag - off)
        })
        .collect()
}

/// Block row margins in the given inner norm.
pub fn block_row_margins(a: &Matrix, blocking: &Blocking, inner: &NormKind) -> Result<Vec<f64>> {
    check_square(a, blocking)?;
    let nt = blocking.num_blocks();
    (0..nt)
        .map(|i| {
            let ri = blocking.range(i);
            let diag = inverse_norm_recip(&a.submatrix(ri.clone(), ri.clone()), inner)?;
            let mut off = 0.0;
            for j in (0..nt).filter(|&j| j != i) {
                off += norm(&a.submatrix(ri.clone(), blocking.range(j)), inner)?;
            }
            Ok(diag - off)
        })
        .collect()
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn pointwise(a: &Matrix) -> PointwiseDominance {
    let delta_r = min_of(&row_margins(a));
    let delta_c = min_of(&col_margins(a));
    PointwiseDominance {
        by_rows: delta_r > 0.0,
        by_cols: delta_c > 0.0,
        delta_r,
        delta_c,
    }
}

/// Block dominance with explicit inner norms for columns and rows.
pub fn block_dominance(
    a: &Matrix,
    blocking: &Blocking,
    col_inner: &NormKind,
    row_inner: &NormKind,
) -> Result<BlockDominance> {
    let delta_c = min_of(&block_col_margins(a, blocking, col_inner)?);
    let delta_r = min_of(&block_row_margins(a, blocking, row_inner)?);
    Ok(BlockDominance {
        by_rows: delta_r > 0.0,
        by_cols: delta_c > 0.0,
        delta_r,
        delta_c,
        row_inner: row_inner.clone(),
        col_inner: col_inner.clone(),
    })
}

/// Pointwise and block dominance. Block columns use the 1-norm and block
/// rows the ∞-norm unless `inner` overrides both.
pub fn dominance(a: &Matrix, blocking: &Blocking, inner: Option<&NormKind>) -> Result<DominanceReport> {
    check_square(a, blocking)?;
    let (c, r) = match inner {
        Some(k) => (k.clone(), k.clone()),
        None => (NormKind::One, NormKind::Inf),
    };
    Ok(DominanceReport {
        pointwise: pointwise(a),
        blockwise: block_dominance(a, blocking, &c, &r)?,
    })
}

/// Margins of `D₁A` by rows and `AD₂` by columns for caller-supplied
/// positive diagonal scalings.
pub fn scaled_dominance(a: &Matrix, d1: &[f64], d2: &[f64]) -> Result<PointwiseDominance> {
    let n = a.rows();
    if !a.is_square() || d1.len() != n || d2.len() != n {
        return Err(Error::invalid("scaled dominance: scaling length mismatch"));
    }
    let left = Matrix::from_fn(n, n, |i, j| d1[i] * a.get(i, j));
    let right = Matrix::from_fn(n, n, |i, j| a.get(i, j) * d2[j]);
    let delta_r = min_of(&row_margins(&left));
    let delta_c = min_of(&col_margins(&right));
    Ok(PointwiseDominance {
        by_rows: delta_r > 0.0,
        by_cols: delta_c > 0.0,
        delta_r,
        delta_c,
    })
}

/// `√(δ_c^D δ_r^D)` for an H-matrix certified by the given scalings.
pub fn h_matrix_tau_max(a: &Matrix, d1: &[f64], d2: &[f64]) -> Result<Option<f64>> {
    let s = scaled_dominance(a, d1, d2)?;
    Ok((s.by_rows && s.by_cols).then(|| (s.delta_c * s.delta_r).sqrt()))
}

/// Thresholds `τ` below which BEAM leaves the matrix unmodified. A field is
/// `None` when the corresponding property does not hold.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ModFreeBound {
    /// `δ_c/√n`.
    pub tau_max_cols: Option<f64>,
    /// `δ_r/√n`.
    pub tau_max_rows: Option<f64>,
    /// `√(δ_c δ_r)`.
    pub tau_max_both: Option<f64>,
    pub tau_max_block_cols: Option<f64>,
    pub tau_max_block_rows: Option<f64>,
    pub tau_max_block_both: Option<f64>,
    /// `σ_min(A)` for symmetric positive definite `A`.
    pub tau_max_spd: Option<f64>,
}

impl ModFreeBound {
    /// Largest of the available thresholds.
    pub fn best(&self) -> Option<f64> {
        [
            self.tau_max_cols,
            self.tau_max_rows,
            self.tau_max_both,
            self.tau_max_block_cols,
            self.tau_max_block_rows,
            self.tau_max_block_both,
            self.tau_max_spd,
        ]
        .into_iter()
        .flatten()
        .reduce(f64::max)
    }
}

/// Each dominance margin bounds `‖A⁻¹‖₁` or `‖A⁻¹‖_∞`, hence `σ_min` of `A`
/// and of every leading submatrix, which in turn bounds the diagonal blocks
/// of the Schur complements from below.
pub fn modification_free_bound(report: &DominanceReport, a: &Matrix) -> Result<ModFreeBound> {
    let rootn = (a.rows() as f64).sqrt();
    let p = &report.pointwise;
    let b = &report.blockwise;
    let block_ok = b.col_inner == NormKind::One && b.row_inner == NormKind::Inf;
    let spd = if a.is_symmetric(0.0) {
        let ev = symmetric_eigenvalues(a)?;
        (ev[0] > 0.0).then(|| ev[0])
    } else {
        None
    };
    Ok(ModFreeBound {
        tau_max_cols: p.by_cols.then(|| p.delta_c / rootn),
        tau_max_rows: p.by_rows.then(|| p.delta_r / rootn),
        tau_max_both: (p.by_cols && p.by_rows).then(|| (p.delta_c * p.delta_r).sqrt()),
        tau_max_block_cols: (block_ok && b.by_cols).then(|| b.delta_c / rootn),
        tau_max_block_rows: (block_ok && b.by_rows).then(|| b.delta_r / rootn),
        tau_max_block_both: (block_ok && b.by_cols && b.by_rows)
            .then(|| (b.delta_c * b.delta_r).sqrt()),
        tau_max_spd: spd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::inverse;
    use crate::gallery::{generate, MatrixSpec};

    fn footnote_matrix() -> Matrix {
        Matrix::from_rows(&[
            [1.0, 0.0, 0.0, 0.4],
            [0.0, 1.0, 0.0, 0.4],
            [0.4, 0.0, 1.0, 0.0],
            [0.4, 0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn identity_is_dominant_everywhere() {
        let b = Blocking::uniform(4, 2).unwrap();
        let r = dominance(&Matrix::identity(4), &b, None).unwrap();
        assert!(r.pointwise.by_rows && r.pointwise.by_cols);
        assert_eq!(r.pointwise.delta_c, 1.0);
        assert_eq!(r.pointwise.delta_r, 1.0);
        let m = modification_free_bound(&r, &Matrix::identity(4)).unwrap();
        assert_eq!(m.tau_max_cols, Some(0.5));
        assert_eq!(m.tau_max_both, Some(1.0));
        assert_eq!(m.tau_max_spd, Some(1.0));
    }

    #[test]
    fn zielke_is_not_dominant() {
        let z = generate(&MatrixSpec::Zielke { n: 4 }).unwrap();
        let r = dominance(&z, &Blocking::pointwise(4).unwrap(), None).unwrap();
        assert!(!r.pointwise.by_rows && !r.pointwise.by_cols);
        assert_eq!(modification_free_bound(&r, &z).unwrap().best(), None);
    }

    #[test]
    fn infinity_inner_column_dominance_does_not_bound_the_inverse() {
        // Dominant by block columns measured in the ∞-norm, yet ‖A⁻¹‖₁
        // exceeds the reciprocal margin; with the 1-norm the bound holds.
        let a = footnote_matrix();
        let b = Blocking::uniform(4, 2).unwrap();
        let inf = block_dominance(&a, &b, &NormKind::Inf, &NormKind::Inf).unwrap();
        assert!(inf.by_cols);
        assert!((inf.delta_c - 0.6).abs() < 1e-15);
        let inv1 = norm(&inverse(&a).unwrap(), &NormKind::One).unwrap();
        assert!(inv1 > 1.0 / inf.delta_c);

        let one = block_dominance(&a, &b, &NormKind::One, &NormKind::One).unwrap();
        assert!((one.delta_c - 0.2).abs() < 1e-15);
        assert!(inv1 <= 1.0 / one.delta_c);
    }

    #[test]
    fn scaled_identity_scaling_matches_plain() {
        let a = generate(&MatrixSpec::DiagDomBoth { n: 6, delta: 0.5, seed: 4 }).unwrap();
        let ones = vec![1.0; 6];
        let s = scaled_dominance(&a, &ones, &ones).unwrap();
        let b = dominance(&a, &Blocking::pointwise(6).unwrap(), None).unwrap();
        assert_eq!(s, b.pointwise);
        let h = h_matrix_tau_max(&a, &ones, &ones).unwrap().unwrap();
        let m = modification_free_bound(&b, &a).unwrap();
        assert_eq!(Some(h), m.tau_max_both);
    }

    #[test]
    fn pointwise_and_block_margins_agree_at_block_size_one() {
        let a = generate(&MatrixSpec::DiagDomCols { n: 7, delta: 0.3, seed: 2 }).unwrap();
        let b = Blocking::pointwise(7).unwrap();
        let blk = block_col_margins(&a, &b, &NormKind::One).unwrap();
        for (x, y) in blk.iter().zip(col_margins(&a)) {
            assert!((x - y).abs() <= 1e-14 * a.max_abs());
        }
    }
}
