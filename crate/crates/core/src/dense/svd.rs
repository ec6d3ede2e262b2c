//! One-sided (Hestenes) Jacobi SVD.
//!
//! Columns are rotated pairwise until every pair is numerically orthogonal,
//! `|aₚ·a_q| <= tol·‖aₚ‖‖a_q‖`. The test is relative to the two column
//! norms, so small singular values are computed to high relative accuracy;
//! the BEAM threshold test on diagonal blocks relies on that.
//!
//! Large matrices are first reduced by column-pivoted Householder QR and the
//! Jacobi iteration is run on the rows of `R`, which cuts the sweep count to
//! a handful.

use super::matrix::{dot, norm2_vec, Matrix};
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 30;

/// Largest diagonal block accepted by [`svd_small`].
pub const MAX_SMALL_DIM: usize = 64;

/// Above this column count, [`singular_values`] preconditions with QR.
const QR_PRECONDITION_MIN: usize = 12;

/// `A = U·diag(sigma)·Vt` with `sigma` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub vt: Matrix,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.last().copied().unwrap_or(0.0)
    }

    pub fn v(&self) -> Matrix {
        self.vt.transpose()
    }

    /// `U·diag(sigma)·Vt`.
    pub fn reconstruct(&self) -> Matrix {
        let us = Matrix::from_fn(self.u.rows(), self.sigma.len(), |i, j| {
            self.u.get(i, j) * self.sigma[j]
        });
        us.matmul(&self.vt).expect("conformal by construction")
    }
}

fn tolerance(m: usize) -> f64 {
    (m as f64).sqrt().max(1.0) * f64::EPSILON
}

/// Runs cyclic one-sided Jacobi on `cols` (each of equal length), applying
/// the same rotations to `v` when given. Returns the number of sweeps used.
fn orthogonalize_columns(cols: &mut [Vec<f64>], mut v: Option<&mut [Vec<f64>]>) -> Result<usize> {
    let n = cols.len();
    if n < 2 {
        return Ok(0);
    }
    let tol = tolerance(cols[0].len());
    // columns below roundoff of the whole matrix carry no direction to fix
    let scale2: f64 = cols.iter().map(|c| dot(c, c)).sum();
    let negligible = f64::EPSILON * f64::EPSILON * scale2;
    for sweep in 1..=MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 {
                    continue;
                }
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                if alpha.min(beta) <= negligible || gamma.abs() <= tol * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(cols, p, q, c, s);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v, p, q, c, s);
                }
            }
        }
        if !rotated {
            return Ok(sweep);
        }
    }
    Err(Error::SvdNoConvergence { sweeps: MAX_SWEEPS })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Descending order, ties kept in input order.
fn descending_order(sigma: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sigma.len()).collect();
    idx.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// Full SVD of a square matrix.
pub fn svd(a: &Matrix) -> Result<Svd> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "svd needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::invalid("svd: matrix has non-finite entries"));
    }
    let n = a.rows();
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    orthogonalize_columns(&mut w, Some(&mut v))?;

    let raw: Vec<f64> = w.iter().map(|c| norm2_vec(c)).collect();
    let order = descending_order(&raw);
    let sigma: Vec<f64> = order.iter().map(|&j| raw[j]).collect();

    // a column at roundoff level is noise, not a direction; complete the
    // basis there instead of normalizing it
    let floor = f64::EPSILON * raw.iter().map(|s| s * s).sum::<f64>().sqrt();
    let mut ucols: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&j| {
            let s = raw[j];
            (s > floor && s.is_finite()).then(|| w[j].iter().map(|x| x / s).collect())
        })
        .collect();
    complete_basis(n, &mut ucols);
    let ucols: Vec<Vec<f64>> = ucols.into_iter().map(Option::unwrap).collect();

    let u = Matrix::from_columns(n, &ucols)?;
    let vt = Matrix::from_fn(n, n, |i, j| v[order[i]][j]);
    Ok(Svd { u, sigma, vt })
}

/// Fills missing columns so the set becomes an orthonormal basis of `Rⁿ`.
fn complete_basis(n: usize, cols: &mut [Option<Vec<f64>>]) {
    for slot in 0..cols.len() {
        if cols[slot].is_some() {
            continue;
        }
        let known: Vec<Vec<f64>> = cols.iter().flatten().cloned().collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for e in 0..n {
            let mut x: Vec<f64> = (0..n).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for q in &known {
                    let h = dot(q, &x);
                    x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= h * qi);
                }
            }
            let nx = norm2_vec(&x);
            if best.as_ref().is_none_or(|(b, _)| nx > *b) {
                best = Some((nx, x));
            }
        }
        let (nx, x) = best.expect("n > 0");
        cols[slot] = Some(x.into_iter().map(|v| v / nx).collect());
    }
}

/// SVD of a diagonal block of side at most [`MAX_SMALL_DIM`].
pub fn svd_small(a: &Matrix) -> Result<Svd> {
    if a.is_square() && a.rows() > MAX_SMALL_DIM {
        return Err(Error::invalid(format!(
            "svd_small: block of side {} exceeds the maximum of {MAX_SMALL_DIM}",
            a.rows()
        )));
    }
    svd(a)
}

/// Singular values (descending) of any non-empty matrix.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::invalid("singular values of an empty matrix"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("singular values: matrix has non-finite entries"));
    }
    let tall = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let mut cols: Vec<Vec<f64>> = if tall.cols() >= QR_PRECONDITION_MIN {
        let r = pivoted_qr_r(&tall);
        // rows of R are the columns of Rᵀ
        (0..r.rows()).map(|i| r.row(i).to_vec()).collect()
    } else {
        (0..tall.cols()).map(|j| tall.col(j)).collect()
    };
    orthogonalize_columns(&mut cols, None)?;
    let mut s: Vec<f64> = cols.iter().map(|c| norm2_vec(c)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(s)
}

/// The `n × n` triangular factor of a column-pivoted Householder QR of a
/// tall `m × n` matrix.
fn pivoted_qr_r(a: &Matrix) -> Matrix {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| {
                let nx = norm2_vec(&cols[x][k..]);
                let ny = norm2_vec(&cols[y][k..]);
                nx.partial_cmp(&ny).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        cols.swap(k, p);
        let alpha = norm2_vec(&cols[k][k..]);
        if alpha == 0.0 {
            continue;
        }
        let beta = if cols[k][k] >= 0.0 { -alpha } else { alpha };
        let mut h: Vec<f64> = cols[k][k..].to_vec();
        h[0] -= beta;
        let hn = dot(&h, &h);
        if hn == 0.0 {
            continue;
        }
        cols[k][k] = beta;
        cols[k][k + 1..].iter_mut().for_each(|x| *x = 0.0);
        for c in cols.iter_mut().skip(k + 1) {
            let f = 2.0 * dot(&h, &c[k..]) / hn;
            c[k..].iter_mut().zip(&h).for_each(|(x, hi)| *x -= f * hi);
        }
    }
    let _ = m;
    Matrix::from_fn(n, n, |i, j| if i <= j { cols[j][i] } else { 0.0 })
}

pub fn sigma_max(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?[0])
}

pub fn sigma_min(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::invalid("sigma_min needs a square matrix"));
    }
    Ok(*singular_values(a)?.last().unwrap())
}

/// `σ_max / σ_min`, infinite when `σ_min = 0`.
pub fn cond2(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::invalid("cond2 needs a square matrix"));
    }
    let s = singular_values(a)?;
    let (hi, lo) = (s[0], *s.last().unwrap());
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}
