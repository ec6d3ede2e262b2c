//! Partial-pivoted dense LU. Used as the reference solver, for the
//! capacitance system, and for applying general diagonal blocks.

use super::matrix::{Matrix, UNIT_ROUNDOFF};
use crate::error::{Error, Result};

/// `P·A = L·U` with unit lower `L` and upper `U` packed in one matrix.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl DenseLu {
    /// A pivot with `|p| <= u·max|A|` is treated as zero.
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let tol = UNIT_ROUNDOFF * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu.get(i, k).abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tol || !pmax.is_finite() {
                return Err(Error::SingularPivot { index: k });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, t);
                }
            }
            let pivot = lu.get(k, k);
            for i in k + 1..n {
                let l = lu.get(i, k) / pivot;
                lu.set(i, k, l);
                if l != 0.0 {
                    for j in k + 1..n {
                        let v = lu.get(i, j) - l * lu.get(k, j);
                        lu.set(i, j, v);
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::invalid("LU solve: right-hand side length mismatch"));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu.get(i, j) * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu.get(i, j) * x[j]).sum();
            x[i] = (x[i] - s) / self.lu.get(i, i);
        }
        Ok(x)
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::invalid("LU solve: right-hand side length mismatch"));
        }
        // Aᵀ = Uᵀ Lᵀ P
        let mut z = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu.get(j, i) * z[j]).sum();
            z[i] = (z[i] - s) / self.lu.get(i, i);
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu.get(j, i) * z[j]).sum();
            z[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        Ok(x)
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let cols: Result<Vec<Vec<f64>>> =
            (0..b.cols()).map(|j| self.solve_vec(&b.col(j))).collect();
        Matrix::from_columns(self.dim(), &cols?)
    }

    /// `X` with `X·A = B`, i.e. `B·A⁻¹`.
    pub fn solve_right(&self, b: &Matrix) -> Result<Matrix> {
        let rows: Result<Vec<Vec<f64>>> = (0..b.rows())
            .map(|i| self.solve_transpose_vec(b.row(i)))
            .collect();
        Matrix::from_rows(&rows?)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.dim()))
    }
}

/// Solves `A·X = B` with partial pivoting.
pub fn solve_dense_lu(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if b.rows() != a.rows() {
        return Err(Error::invalid("solve_dense_lu: row counts differ"));
    }
    DenseLu::factor(a)?.solve(b)
}

/// `A⁻¹` via partial-pivoted LU.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    DenseLu::factor(a)?.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_solve() {
        let a = Matrix::from_diag(&[2.0, 4.0]);
        let x = solve_dense_lu(&a, &Matrix::column(&[1.0, 1.0])).unwrap();
        assert_eq!(x.data(), &[0.5, 0.25]);
    }

    #[test]
    fn singular_reports_pivot() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        match DenseLu::factor(&a) {
            Err(Error::SingularPivot { index }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn random_residual() {
        // fixed pseudo-random fill without pulling in an RNG
        let mut s = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = Matrix::from_fn(8, 8, |_, _| next());
        let b = Matrix::from_fn(8, 2, |_, _| next());
        let lu = DenseLu::factor(&a).unwrap();
        let x = lu.solve(&b).unwrap();
        let r = a.matmul(&x).unwrap().sub(&b).unwrap();
        assert!(r.max_abs() <= 1e-12 * b.max_abs() * 8.0);

        let xt = lu.solve_transpose_vec(&b.col(0)).unwrap();
        let rt = a.transpose().matvec(&xt).unwrap();
        for (u, v) in rt.iter().zip(b.col(0)) {
            assert!((u - v).abs() < 1e-12);
        }

        let inv = lu.inverse().unwrap();
        let id = inv.matmul(&a).unwrap();
        assert!(id.sub(&Matrix::identity(8)).unwrap().max_abs() < 1e-12);
    }
}
