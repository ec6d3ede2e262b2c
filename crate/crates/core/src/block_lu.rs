//! Non-pivoted block LU, `A = L·R`, with a choice of diagonal-block
//! factorization and a per-step record of the Schur complements.
//!
//! Step `k` splits the current Schur complement as
//!
//! ```text
//! S = [ D    S_kT ]      D = L_kk R_kk
//!     [ S_Tk S_TT ]      L_Tk = S_Tk R_kk⁻¹,  R_kT = L_kk⁻¹ S_kT
//! ```
//!
//! and continues with `S_TT − L_Tk R_kT`. The elimination is strictly
//! sequential in `k`, one full trailing update per step.

use serde::Serialize;

use crate::dense::{
    norm, sigma_max, singular_values, svd, Blocking, DenseLu, Matrix, NormKind, UNIT_ROUNDOFF,
};
use crate::error::{Error, Result};

/// How each diagonal block `D` of the current Schur complement is split into
/// `L_kk·R_kk`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagFactorizer {
    /// `L_kk = I`, `R_kk = D`.
    Identity,
    /// Unpivoted scalar LU of `D`.
    PointwiseLu,
    /// `L_kk = U`, `R_kk = ΣVᵀ` from the SVD of `D`.
    Unitary,
}

impl DiagFactorizer {
    pub const ALL: [DiagFactorizer; 3] = [
        DiagFactorizer::Identity,
        DiagFactorizer::PointwiseLu,
        DiagFactorizer::Unitary,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DiagFactorizer::Identity => "identity",
            DiagFactorizer::PointwiseLu => "pointwise",
            DiagFactorizer::Unitary => "unitary",
        }
    }
}

/// Norms of one Schur complement plus the quantities the factor-norm checks
/// need from the same step.
#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    /// 1-based step index; step 1 is `A` itself.
    pub step: usize,
    /// Aligned with [`GrowthTrace::kinds`].
    pub norms: Vec<f64>,
    /// Smallest singular value of the diagonal block before any modification.
    pub diag_sigma_min: f64,
    /// `‖L_Tk L_kk⁻¹‖₂`, the subdiagonal column times the inverse of the
    /// factored diagonal block. Zero on the last step.
    pub subdiag_ratio: f64,
    /// Largest `‖L_ik L_kk⁻¹‖₂` over the block rows `i > k`.
    pub subdiag_block_max_2: f64,
    /// Largest `‖L_ik L_kk⁻¹‖_F` over the block rows `i > k`.
    pub subdiag_block_max_fro: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthTrace {
    pub kinds: Vec<NormKind>,
    pub steps: Vec<StepRecord>,
}

impl GrowthTrace {
    fn index_of(&self, kind: &NormKind) -> Result<usize> {
        self.kinds
            .iter()
            .position(|k| k == kind)
            .ok_or_else(|| Error::invalid(format!("norm {kind} was not traced")))
    }

    /// `‖A‖` in a traced norm.
    pub fn initial_norm(&self, kind: &NormKind) -> Result<f64> {
        let i = self.index_of(kind)?;
        Ok(self.steps[0].norms[i])
    }

    /// `max_k ‖A^(k)‖` in a traced norm.
    pub fn max_norm(&self, kind: &NormKind) -> Result<f64> {
        let i = self.index_of(kind)?;
        Ok(self.steps.iter().map(|s| s.norms[i]).fold(0.0, f64::max))
    }

    pub fn contains(&self, kind: &NormKind) -> bool {
        self.kinds.contains(kind)
    }

    /// Largest recorded `‖L_Tk L_kk⁻¹‖₂`.
    pub fn max_subdiag_ratio(&self) -> f64 {
        self.steps.iter().map(|s| s.subdiag_ratio).fold(0.0, f64::max)
    }
}

/// `max_k ‖A^(k)‖ / ‖A‖` in the given norm.
pub fn growth_factor(trace: &GrowthTrace, kind: &NormKind) -> Result<f64> {
    let a = trace.initial_norm(kind)?;
    if a == 0.0 {
        return Err(Error::invalid("growth factor of the zero matrix"));
    }
    Ok(trace.max_norm(kind)? / a)
}

/// Max, 1, ∞, Frobenius and spectral norms.
pub fn default_trace_norms() -> Vec<NormKind> {
    NormKind::BASIC.to_vec()
}

/// The factorization of one diagonal block, kept for substitution.
#[derive(Clone, Debug)]
enum DiagBlock {
    /// `R_kk = D`, factored with partial pivoting if it was invertible.
    Identity(Option<DenseLu>),
    /// Unit lower and upper triangles live in `L` and `R`.
    Pointwise,
    Unitary { u: Matrix, sigma: Vec<f64>, vt: Matrix },
}

#[derive(Clone, Debug)]
pub struct BlockLuFactors {
    l: Matrix,
    r: Matrix,
    blocking: Blocking,
    diag: DiagFactorizer,
    blocks: Vec<DiagBlock>,
    trace: GrowthTrace,
}

/// One raised singular value of a diagonal block.
#[derive(Clone, Debug)]
pub(crate) struct RawModification {
    /// 0-based block index.
    pub block: usize,
    /// Left and right singular vectors, zero-padded to length `n`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma: f64,
    pub delta: f64,
}

impl BlockLuFactors {
    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn blocking(&self) -> &Blocking {
        &self.blocking
    }

    pub fn diag(&self) -> DiagFactorizer {
        self.diag
    }

    pub fn trace(&self) -> &GrowthTrace {
        &self.trace
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// `L·R`.
    pub fn product(&self) -> Matrix {
        self.l.matmul(&self.r).expect("square factors")
    }

    /// Singular values of `R_kk` (0-based block) as factored, for unitary
    /// diagonals; `None` otherwise.
    pub fn diag_singular_values(&self, k: usize) -> Option<&[f64]> {
        match &self.blocks[k] {
            DiagBlock::Unitary { sigma, .. } => Some(sigma),
            _ => None,
        }
    }

    /// Solves `L y = b` block by block using the stored diagonal factors.
    pub fn forward_sub(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let mut y = b.to_vec();
        for k in 0..self.blocking.num_blocks() {
            let rk = self.blocking.range(k);
            let yk = self.apply_l_inv(k, &y[rk.clone()])?;
            y[rk.clone()].copy_from_slice(&yk);
            for i in rk.end..self.dim() {
                let s: f64 = rk.clone().map(|j| self.l.get(i, j) * y[j]).sum();
                y[i] -= s;
            }
        }
        Ok(y)
    }

    /// Solves `R x = y` block by block using the stored diagonal factors.
    pub fn back_sub(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y.len())?;
        let mut x = y.to_vec();
        for k in (0..self.blocking.num_blocks()).rev() {
            let rk = self.blocking.range(k);
            let xk = self.apply_r_inv(k, &x[rk.clone()])?;
            x[rk.clone()].copy_from_slice(&xk);
            for i in 0..rk.start {
                let s: f64 = rk.clone().map(|j| self.r.get(i, j) * x[j]).sum();
                x[i] -= s;
            }
        }
        Ok(x)
    }

    /// Solves `Rᵀ z = c`.
    pub fn back_sub_transpose(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_len(c.len())?;
        let mut z = c.to_vec();
        for k in 0..self.blocking.num_blocks() {
            let rk = self.blocking.range(k);
            let zk = self.apply_r_inv_t(k, &z[rk.clone()])?;
            z[rk.clone()].copy_from_slice(&zk);
            for i in rk.end..self.dim() {
                let s: f64 = rk.clone().map(|j| self.r.get(j, i) * z[j]).sum();
                z[i] -= s;
            }
        }
        Ok(z)
    }

    /// `x = R⁻¹ L⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.back_sub(&self.forward_sub(b)?)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::invalid(format!(
                "right-hand side has length {len}, factors have dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    fn apply_l_inv(&self, k: usize, x: &[f64]) -> Result<Vec<f64>> {
        apply_l_inv(&self.blocks[k], &self.l, self.blocking.range(k).start, x)
    }

    fn apply_r_inv(&self, k: usize, x: &[f64]) -> Result<Vec<f64>> {
        apply_r_inv(&self.blocks[k], &self.r, self.blocking.range(k).start, x, k)
    }

    fn apply_r_inv_t(&self, k: usize, x: &[f64]) -> Result<Vec<f64>> {
        apply_r_inv_t(&self.blocks[k], &self.r, self.blocking.range(k).start, x, k)
    }
}

// The block helpers read triangular parts of `L_kk`/`R_kk` from the full
// factor matrices at offset `o`.

fn apply_l_inv(block: &DiagBlock, l: &Matrix, o: usize, x: &[f64]) -> Result<Vec<f64>> {
    Ok(match block {
        DiagBlock::Identity(_) => x.to_vec(),
        DiagBlock::Pointwise => {
            let mut y = x.to_vec();
            for i in 0..y.len() {
                let s: f64 = (0..i).map(|j| l.get(o + i, o + j) * y[j]).sum();
                y[i] -= s;
            }
            y
        }
        DiagBlock::Unitary { u, .. } => u.transpose().matvec(x)?,
    })
}

/// Solves `L_kkᵀ w = x`.
fn apply_l_inv_t(block: &DiagBlock, l: &Matrix, o: usize, x: &[f64]) -> Result<Vec<f64>> {
    Ok(match block {
        DiagBlock::Identity(_) => x.to_vec(),
        DiagBlock::Pointwise => {
            let mut w = x.to_vec();
            for i in (0..w.len()).rev() {
                let s: f64 = (i + 1..w.len()).map(|j| l.get(o + j, o + i) * w[j]).sum();
                w[i] -= s;
            }
            w
        }
        DiagBlock::Unitary { u, .. } => u.matvec(x)?,
    })
}

fn apply_r_inv(block: &DiagBlock, r: &Matrix, o: usize, x: &[f64], k: usize) -> Result<Vec<f64>> {
    match block {
        DiagBlock::Identity(Some(lu)) => lu.solve_vec(x),
        DiagBlock::Identity(None) => Err(Error::SingularBlock { block: k + 1 }),
        DiagBlock::Pointwise => {
            let mut y = x.to_vec();
            for i in (0..y.len()).rev() {
                let s: f64 = (i + 1..y.len()).map(|j| r.get(o + i, o + j) * y[j]).sum();
                y[i] = (y[i] - s) / r.get(o + i, o + i);
            }
            Ok(y)
        }
        DiagBlock::Unitary { sigma, vt, .. } => {
            let scaled: Vec<f64> = x.iter().zip(sigma).map(|(v, s)| v / s).collect();
            vt.transpose().matvec(&scaled)
        }
    }
}

/// Solves `R_kkᵀ z = x`.
fn apply_r_inv_t(
    block: &DiagBlock,
    r: &Matrix,
    o: usize,
    x: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    match block {
        DiagBlock::Identity(Some(lu)) => lu.solve_transpose_vec(x),
        DiagBlock::Identity(None) => Err(Error::SingularBlock { block: k + 1 }),
        DiagBlock::Pointwise => {
            let mut z = x.to_vec();
            for i in 0..z.len() {
                let s: f64 = (0..i).map(|j| r.get(o + j, o + i) * z[j]).sum();
                z[i] = (z[i] - s) / r.get(o + i, o + i);
            }
            Ok(z)
        }
        DiagBlock::Unitary { sigma, vt, .. } => Ok(vt
            .matvec(x)?
            .iter()
            .zip(sigma)
            .map(|(v, s)| v / s)
            .collect()),
    }
}

/// Block LU of `A` under `blocking`, tracing each Schur complement in the
/// requested norms.
///
/// Fails with [`Error::SingularBlock`] when a diagonal block is singular to
/// working precision. With [`DiagFactorizer::Identity`] the check happens
/// when the block is first inverted, so a singular final block only shows up
/// at solve time.
pub fn factor_block_lu(
    a: &Matrix,
    blocking: &Blocking,
    diag: DiagFactorizer,
    trace_norms: &[NormKind],
) -> Result<BlockLuFactors> {
    Ok(eliminate(a, blocking, diag, trace_norms, None)?.0)
}

/// Shared elimination loop. With `tau`, unitary diagonal blocks have every
/// singular value `<= tau` raised to `tau` and the changes are returned.
pub(crate) fn eliminate(
    a: &Matrix,
    blocking: &Blocking,
    diag: DiagFactorizer,
    trace_norms: &[NormKind],
    tau: Option<f64>,
) -> Result<(BlockLuFactors, Vec<RawModification>)> {
    if !a.is_square() || a.is_empty() {
        return Err(Error::invalid(format!(
            "block LU needs a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    blocking.check_dim(a.rows(), "block LU")?;
    if !a.is_finite() {
        return Err(Error::invalid("block LU: matrix has non-finite entries"));
    }
    for kind in trace_norms {
        if let NormKind::BlockMax { rows, cols, .. } | NormKind::BlockSum { rows, cols, .. } = kind {
            if rows.dim() != a.rows() || cols.dim() != a.cols() {
                return Err(Error::invalid(format!(
                    "traced norm {kind} has a partition of the wrong size"
                )));
            }
            for &o in blocking.offsets() {
                if o < a.rows() && (!rows.offsets().contains(&o) || !cols.offsets().contains(&o))
                {
                    return Err(Error::invalid(format!(
                        "traced norm {kind} is not aligned with the factorization blocking"
                    )));
                }
            }
        }
    }

    let n = a.rows();
    let nt = blocking.num_blocks();
    let mut l = Matrix::zeros(n, n);
    let mut r = Matrix::zeros(n, n);
    let mut blocks = Vec::with_capacity(nt);
    let mut steps = Vec::with_capacity(nt);
    let mut mods = Vec::new();
    let mut s = a.clone();

    for k in 0..nt {
        let o = blocking.offsets()[k];
        let b = blocking.block_size(k);
        let rest = n - o - b;

        let mut norms = Vec::with_capacity(trace_norms.len());
        for kind in trace_norms {
            norms.push(norm(&s, &restrict(kind, o))?);
        }

        let d = s.submatrix(0..b, 0..b);
        let s_tk = s.submatrix(b..b + rest, 0..b);
        let s_kt = s.submatrix(0..b, b..b + rest);

        let (block, diag_sigma_min) = match diag {
            DiagFactorizer::Identity => {
                let smin = singular_values(&d)?.last().copied().unwrap();
                let lu = DenseLu::factor(&d).ok();
                if lu.is_none() && rest > 0 {
                    return Err(Error::SingularBlock { block: k + 1 });
                }
                for i in 0..b {
                    l.set(o + i, o + i, 1.0);
                }
                r.set_block(o, o, &d);
                (DiagBlock::Identity(lu), smin)
            }
            DiagFactorizer::PointwiseLu => {
                let smin = singular_values(&d)?.last().copied().unwrap();
                let (lk, rk) = doolittle(&d).ok_or(Error::SingularBlock { block: k + 1 })?;
                l.set_block(o, o, &lk);
                r.set_block(o, o, &rk);
                (DiagBlock::Pointwise, smin)
            }
            DiagFactorizer::Unitary => {
                let mut f = svd(&d)?;
                let smin = f.sigma_min();
                if let Some(tau) = tau {
                    for i in 0..b {
                        if f.sigma[i] <= tau {
                            let mut u = vec![0.0; n];
                            let mut v = vec![0.0; n];
                            for p in 0..b {
                                u[o + p] = f.u.get(p, i);
                                v[o + p] = f.vt.get(i, p);
                            }
                            mods.push(RawModification {
                                block: k,
                                u,
                                v,
                                sigma: f.sigma[i],
                                delta: tau - f.sigma[i],
                            });
                            f.sigma[i] = tau;
                        }
                    }
                } else if f.sigma_min() <= UNIT_ROUNDOFF * f.sigma_max() {
                    return Err(Error::SingularBlock { block: k + 1 });
                }
                let rk = Matrix::from_fn(b, b, |i, j| f.sigma[i] * f.vt.get(i, j));
                l.set_block(o, o, &f.u);
                r.set_block(o, o, &rk);
                (
                    DiagBlock::Unitary {
                        u: f.u,
                        sigma: f.sigma,
                        vt: f.vt,
                    },
                    smin,
                )
            }
        };

        let mut record = StepRecord {
            step: k + 1,
            norms,
            diag_sigma_min,
            subdiag_ratio: 0.0,
            subdiag_block_max_2: 0.0,
            subdiag_block_max_fro: 0.0,
        };

        if rest > 0 {
            // L_Tk = S_Tk R_kk⁻¹, one row at a time through R_kkᵀ.
            let mut l_tk = Matrix::zeros(rest, b);
            for i in 0..rest {
                let row = apply_r_inv_t(&block, &r, o, s_tk.row(i), k)?;
                for (j, v) in row.into_iter().enumerate() {
                    l_tk.set(i, j, v);
                }
            }
            // R_kT = L_kk⁻¹ S_kT, one column at a time.
            let mut r_kt = Matrix::zeros(b, rest);
            for j in 0..rest {
                let col = apply_l_inv(&block, &l, o, &s_kt.col(j))?;
                for (i, v) in col.into_iter().enumerate() {
                    r_kt.set(i, j, v);
                }
            }
            l.set_block(o + b, o, &l_tk);
            r.set_block(o, o + b, &r_kt);

            // L_Tk L_kk⁻¹ = S_Tk D⁻¹ with D the factored (possibly raised) block.
            let mut w = Matrix::zeros(rest, b);
            for i in 0..rest {
                let row = apply_l_inv_t(&block, &l, o, l_tk.row(i))?;
                for (j, v) in row.into_iter().enumerate() {
                    w.set(i, j, v);
                }
            }
            record.subdiag_ratio = sigma_max(&w)?;
            for q in k + 1..nt {
                let rq = blocking.range(q);
                let wq = w.submatrix(rq.start - o - b..rq.end - o - b, 0..b);
                record.subdiag_block_max_2 = record.subdiag_block_max_2.max(sigma_max(&wq)?);
                record.subdiag_block_max_fro = record
                    .subdiag_block_max_fro
                    .max(norm(&wq, &NormKind::Frobenius)?);
            }

            let update = l_tk.matmul(&r_kt)?;
            s = s.submatrix(b..b + rest, b..b + rest).sub(&update)?;
        }
        steps.push(record);
        blocks.push(block);
    }

    Ok((
        BlockLuFactors {
            l,
            r,
            blocking: blocking.clone(),
            diag,
            blocks,
            trace: GrowthTrace {
                kinds: trace_norms.to_vec(),
                steps,
            },
        },
        mods,
    ))
}

/// `kind` restricted to the trailing matrix starting at row/column `o`.
fn restrict(kind: &NormKind, o: usize) -> NormKind {
    match kind {
        NormKind::BlockMax { rows, .. } | NormKind::BlockSum { rows, .. } => {
            let k = rows.offsets().iter().position(|&x| x == o).expect("aligned");
            kind.trailing(k)
        }
        other => other.clone(),
    }
}

/// Unpivoted scalar LU. `None` when a pivot is at most `u·‖D‖_max`.
fn doolittle(d: &Matrix) -> Option<(Matrix, Matrix)> {
    let b = d.rows();
    let tol = UNIT_ROUNDOFF * d.max_abs();
    let mut w = d.clone();
    for k in 0..b {
        let p = w.get(k, k);
        if p.abs() <= tol || !p.is_finite() {
            return None;
        }
        for i in k + 1..b {
            let m = w.get(i, k) / p;
            w.set(i, k, m);
            for j in k + 1..b {
                let v = w.get(i, j) - m * w.get(k, j);
                w.set(i, j, v);
            }
        }
    }
    let lk = Matrix::from_fn(b, b, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => w.get(i, j),
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => 0.0,
    });
    let rk = Matrix::from_fn(b, b, |i, j| if i <= j { w.get(i, j) } else { 0.0 });
    Some((lk, rk))
}

/// Solves `L y = b` for a block lower-triangular `L`, eliminating in
/// ascending block order. Diagonal blocks are solved with partial pivoting.
pub fn block_forward_sub(l: &Matrix, blocking: &Blocking, b: &[f64]) -> Result<Vec<f64>> {
    check_triangular_args(l, blocking, b.len())?;
    let n = l.rows();
    let mut y = b.to_vec();
    for k in 0..blocking.num_blocks() {
        let rk = blocking.range(k);
        let lu = DenseLu::factor(&l.submatrix(rk.clone(), rk.clone()))
            .map_err(|_| Error::SingularBlock { block: k + 1 })?;
        let yk = lu.solve_vec(&y[rk.clone()])?;
        y[rk.clone()].copy_from_slice(&yk);
        for i in rk.end..n {
            let s: f64 = rk.clone().map(|j| l.get(i, j) * y[j]).sum();
            y[i] -= s;
        }
    }
    Ok(y)
}

/// Solves `R x = y` for a block upper-triangular `R`, in descending block
/// order.
pub fn block_back_sub(r: &Matrix, blocking: &Blocking, y: &[f64]) -> Result<Vec<f64>> {
    check_triangular_args(r, blocking, y.len())?;
    let mut x = y.to_vec();
    for k in (0..blocking.num_blocks()).rev() {
        let rk = blocking.range(k);
        let lu = DenseLu::factor(&r.submatrix(rk.clone(), rk.clone()))
            .map_err(|_| Error::SingularBlock { block: k + 1 })?;
        let xk = lu.solve_vec(&x[rk.clone()])?;
        x[rk.clone()].copy_from_slice(&xk);
        for i in 0..rk.start {
            let s: f64 = rk.clone().map(|j| r.get(i, j) * x[j]).sum();
            x[i] -= s;
        }
    }
    Ok(x)
}

fn check_triangular_args(t: &Matrix, blocking: &Blocking, len: usize) -> Result<()> {
    if !t.is_square() {
        return Err(Error::invalid("triangular factor must be square"));
    }
    blocking.check_dim(t.rows(), "block substitution")?;
    if len != t.rows() {
        return Err(Error::invalid("right-hand side length mismatch"));
    }
    Ok(())
}

/// True iff every blocking-aligned leading principal submatrix has
/// `σ_min > tol·‖A‖₂`.
pub fn is_block_strongly_nonsingular(a: &Matrix, blocking: &Blocking, tol: f64) -> bool {
    if !a.is_square() || blocking.dim() != a.rows() || a.is_empty() {
        return false;
    }
    let Ok(a2) = sigma_max(a) else { return false };
    (1..=blocking.num_blocks()).all(|k| {
        let m = blocking.offsets()[k];
        match singular_values(&a.leading(m)) {
            Ok(s) => *s.last().unwrap() > tol * a2,
            Err(_) => false,
        }
    })
}
