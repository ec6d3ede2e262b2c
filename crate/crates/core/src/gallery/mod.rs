//! Test-matrix families and Matrix Market exchange.
//!
//! Random families draw from ChaCha8 seeded with `seed_from_u64` and a
//! standard normal, so a spec and seed always produce the same matrix.

mod market;

pub use market::{parse_matrix_market, read_matrix_market, write_matrix_market};

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dense::{inverse, norm, Blocking, Matrix, NormKind};
use crate::diagnostics::{block_col_margins, col_margins, row_margins};
use crate::error::{Error, Result};

/// A block partition given either as a uniform size or as 1-based starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockLayout {
    Size(usize),
    Starts(Vec<usize>),
}

impl BlockLayout {
    pub fn to_blocking(&self, n: usize) -> Result<Blocking> {
        match self {
            BlockLayout::Size(nb) => Blocking::uniform(n, *nb),
            BlockLayout::Starts(s) => {
                let b = Blocking::from_starts(s)?;
                if b.dim() != n {
                    return Err(Error::invalid(format!(
                        "block starts {s:?} do not end at n+1 = {}",
                        n + 1
                    )));
                }
                Ok(b)
            }
        }
    }
}

impl fmt::Display for BlockLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockLayout::Size(nb) => write!(f, "nb={nb}"),
            BlockLayout::Starts(s) => {
                let s: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                write!(f, "starts=[{}]", s.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MatrixSpec {
    /// Zero diagonal, ones above it, `−1` in the bottom-left corner.
    Zielke { n: usize },
    /// Ones on the diagonal, `−1` strictly below.
    TuringT { n: usize },
    /// `T⁻ᵀT⁻¹` for the lower-triangular all-ones `T`: tridiagonal with `2`
    /// on the diagonal except a final `1`, and `−1` beside it.
    TridiagTtt { n: usize },
    DiagDomRows { n: usize, delta: f64, seed: u64 },
    DiagDomCols { n: usize, delta: f64, seed: u64 },
    DiagDomBoth { n: usize, delta: f64, seed: u64 },
    /// Block column dominant in the 1-norm with margin at least `delta`.
    BlockDiagDomCols {
        n: usize,
        blocking: BlockLayout,
        delta: f64,
        seed: u64,
    },
    /// Symmetric positive definite with a log-spaced spectrum from 1 down to
    /// `1/cond`.
    Spd { n: usize, cond: f64, seed: u64 },
    /// Inverse of a block row dominant matrix (∞-norm inner, margin `delta`).
    InverseBlockDiagDomRows {
        n: usize,
        blocking: BlockLayout,
        delta: f64,
        seed: u64,
    },
    /// `U·diag(σ)·Vᵀ` with random orthogonal factors and log-spaced `σ`.
    RandomCond { n: usize, cond: f64, seed: u64 },
    /// Identity with `[[0,1],[1,0]]` as its leading 2×2 block.
    LeadingSwap { n: usize },
}

impl MatrixSpec {
    pub fn n(&self) -> usize {
        match self {
            MatrixSpec::Zielke { n }
            | MatrixSpec::TuringT { n }
            | MatrixSpec::TridiagTtt { n }
            | MatrixSpec::DiagDomRows { n, .. }
            | MatrixSpec::DiagDomCols { n, .. }
            | MatrixSpec::DiagDomBoth { n, .. }
            | MatrixSpec::BlockDiagDomCols { n, .. }
            | MatrixSpec::Spd { n, .. }
            | MatrixSpec::InverseBlockDiagDomRows { n, .. }
            | MatrixSpec::RandomCond { n, .. }
            | MatrixSpec::LeadingSwap { n } => *n,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            MatrixSpec::Zielke { .. } => "zielke",
            MatrixSpec::TuringT { .. } => "turing_t",
            MatrixSpec::TridiagTtt { .. } => "tridiag_ttt",
            MatrixSpec::DiagDomRows { .. } => "diag_dom_rows",
            MatrixSpec::DiagDomCols { .. } => "diag_dom_cols",
            MatrixSpec::DiagDomBoth { .. } => "diag_dom_both",
            MatrixSpec::BlockDiagDomCols { .. } => "block_diag_dom_cols",
            MatrixSpec::Spd { .. } => "spd",
            MatrixSpec::InverseBlockDiagDomRows { .. } => "inverse_block_diag_dom_rows",
            MatrixSpec::RandomCond { .. } => "random_cond",
            MatrixSpec::LeadingSwap { .. } => "leading_swap",
        }
    }

    /// The seed of a random family, `None` for the fixed constructions.
    pub fn seed(&self) -> Option<u64> {
        match self {
            MatrixSpec::DiagDomRows { seed, .. }
            | MatrixSpec::DiagDomCols { seed, .. }
            | MatrixSpec::DiagDomBoth { seed, .. }
            | MatrixSpec::BlockDiagDomCols { seed, .. }
            | MatrixSpec::Spd { seed, .. }
            | MatrixSpec::InverseBlockDiagDomRows { seed, .. }
            | MatrixSpec::RandomCond { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// A copy drawn with a different seed. Fixed constructions are returned
    /// unchanged.
    pub fn reseeded(&self, new_seed: u64) -> MatrixSpec {
        let mut s = self.clone();
        match &mut s {
            MatrixSpec::DiagDomRows { seed, .. }
            | MatrixSpec::DiagDomCols { seed, .. }
            | MatrixSpec::DiagDomBoth { seed, .. }
            | MatrixSpec::BlockDiagDomCols { seed, .. }
            | MatrixSpec::Spd { seed, .. }
            | MatrixSpec::InverseBlockDiagDomRows { seed, .. }
            | MatrixSpec::RandomCond { seed, .. } => *seed = new_seed,
            _ => {}
        }
        s
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::invalid(format!("{}: n must be at least 2", self.family())));
        }
        match self {
            MatrixSpec::DiagDomRows { delta, .. }
            | MatrixSpec::DiagDomCols { delta, .. }
            | MatrixSpec::DiagDomBoth { delta, .. }
            | MatrixSpec::BlockDiagDomCols { delta, .. }
            | MatrixSpec::InverseBlockDiagDomRows { delta, .. } => {
                if !(*delta > 0.0 && delta.is_finite()) {
                    return Err(Error::invalid(format!(
                        "{}: delta must be positive, got {delta}",
                        self.family()
                    )));
                }
            }
            // a random fill cannot be tuned to condition exactly 1
            MatrixSpec::Spd { cond, .. } | MatrixSpec::RandomCond { cond, .. }
                if !(*cond > 1.0 && cond.is_finite()) =>
            {
                return Err(Error::invalid(format!(
                    "{}: cond must be finite and greater than 1, got {cond}",
                    self.family()
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for MatrixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = self.family();
        match self {
            MatrixSpec::Zielke { n }
            | MatrixSpec::TuringT { n }
            | MatrixSpec::TridiagTtt { n }
            | MatrixSpec::LeadingSwap { n } => write!(f, "{fam}(n={n})"),
            MatrixSpec::DiagDomRows { n, delta, seed }
            | MatrixSpec::DiagDomCols { n, delta, seed }
            | MatrixSpec::DiagDomBoth { n, delta, seed } => {
                write!(f, "{fam}(n={n},delta={delta},seed={seed})")
            }
            MatrixSpec::BlockDiagDomCols {
                n,
                blocking,
                delta,
                seed,
            }
            | MatrixSpec::InverseBlockDiagDomRows {
                n,
                blocking,
                delta,
                seed,
            } => write!(f, "{fam}(n={n},{blocking},delta={delta},seed={seed})"),
            MatrixSpec::Spd { n, cond, seed } | MatrixSpec::RandomCond { n, cond, seed } => {
                write!(f, "{fam}(n={n},cond={cond},seed={seed})")
            }
        }
    }
}

/// Builds the matrix described by `spec`.
pub fn generate(spec: &MatrixSpec) -> Result<Matrix> {
    spec.validate()?;
    let n = spec.n();
    Ok(match spec {
        MatrixSpec::Zielke { .. } => zielke(n),
        MatrixSpec::TuringT { .. } => {
            Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Equal => 1.0,
                std::cmp::Ordering::Greater => -1.0,
                std::cmp::Ordering::Less => 0.0,
            })
        }
        MatrixSpec::TridiagTtt { .. } => Matrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 if i == n - 1 => 1.0,
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        }),
        MatrixSpec::DiagDomRows { delta, seed, .. } => {
            let mut a = gaussian(n, n, &mut rng(*seed));
            let s = offdiag_sums(&a, false);
            set_dominant_diag(&mut a, &s, *delta, &mut rng(seed ^ 0x5eed));
            nudge_until(&mut a, *delta, |a| min_or_zero(&row_margins(a)));
            a
        }
        MatrixSpec::DiagDomCols { delta, seed, .. } => {
            let mut a = gaussian(n, n, &mut rng(*seed));
            let s = offdiag_sums(&a, true);
            set_dominant_diag(&mut a, &s, *delta, &mut rng(seed ^ 0x5eed));
            nudge_until(&mut a, *delta, |a| min_or_zero(&col_margins(a)));
            a
        }
        MatrixSpec::DiagDomBoth { delta, seed, .. } => {
            let mut a = gaussian(n, n, &mut rng(*seed));
            let r = offdiag_sums(&a, false);
            let c = offdiag_sums(&a, true);
            let s: Vec<f64> = r.iter().zip(&c).map(|(x, y)| x.max(*y)).collect();
            set_dominant_diag(&mut a, &s, *delta, &mut rng(seed ^ 0x5eed));
            nudge_until(&mut a, *delta, |a| {
                min_or_zero(&row_margins(a)).min(min_or_zero(&col_margins(a)))
            });
            a
        }
        MatrixSpec::BlockDiagDomCols {
            blocking,
            delta,
            seed,
            ..
        } => block_col_dominant(&blocking.to_blocking(n)?, *delta, *seed)?,
        MatrixSpec::InverseBlockDiagDomRows {
            blocking,
            delta,
            seed,
            ..
        } => {
            // transposing swaps 1- and ∞-norms, so this is block row dominant
            let b = block_col_dominant(&blocking.to_blocking(n)?, *delta, *seed)?.transpose();
            let inv = inverse(&b)?;
            let check = inv.matmul(&b)?.sub(&Matrix::identity(n))?.max_abs();
            if check > 1e-10 {
                return Err(Error::invalid(format!(
                    "inverse certification failed: ‖A⁻¹A − I‖_max = {check:e}"
                )));
            }
            inv
        }
        MatrixSpec::Spd { cond, seed, .. } => {
            let q = random_orthogonal(n, &mut rng(*seed));
            let lam = log_spaced(n, *cond);
            let a = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| q.get(i, k) * lam[k] * q.get(j, k)).sum());
            Matrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)))
        }
        MatrixSpec::RandomCond { cond, seed, .. } => {
            let mut r = rng(*seed);
            let u = random_orthogonal(n, &mut r);
            let v = random_orthogonal(n, &mut r);
            let s = log_spaced(n, *cond);
            Matrix::from_fn(n, n, |i, j| (0..n).map(|k| u.get(i, k) * s[k] * v.get(j, k)).sum())
        }
        MatrixSpec::LeadingSwap { .. } => Matrix::from_fn(n, n, |i, j| match (i, j) {
            (0, 1) | (1, 0) => 1.0,
            (0, 0) | (1, 1) => 0.0,
            _ if i == j => 1.0,
            _ => 0.0,
        }),
    })
}

fn zielke(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| {
        if j > i {
            1.0
        } else if i == n - 1 && j == 0 {
            -1.0
        } else {
            0.0
        }
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn offdiag_sums(a: &Matrix, by_cols: bool) -> Vec<f64> {
    let n = a.rows();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| if by_cols { a.get(j, i) } else { a.get(i, j) }.abs())
                .sum()
        })
        .collect()
}

/// Diagonal entries `±(s_i + δ)` with random signs.
fn set_dominant_diag(a: &mut Matrix, s: &[f64], delta: f64, rng: &mut ChaCha8Rng) {
    for (i, si) in s.iter().enumerate() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        a.set(i, i, sign * (si + delta));
    }
}

fn min_or_zero(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Scales the diagonal up by an ulp at a time until the measured margin
/// reaches `delta`, absorbing rounding in the off-diagonal sums.
fn nudge_until(a: &mut Matrix, delta: f64, margin: impl Fn(&Matrix) -> f64) {
    while margin(a) < delta {
        for i in 0..a.rows() {
            let d = a.get(i, i);
            a.set(i, i, d * (1.0 + 4.0 * f64::EPSILON));
        }
    }
}

fn block_col_dominant(blocking: &Blocking, delta: f64, seed: u64) -> Result<Matrix> {
    let n = blocking.dim();
    let mut r = rng(seed);
    let mut a = gaussian(n, n, &mut r);
    let nt = blocking.num_blocks();
    for j in 0..nt {
        let cj = blocking.range(j);
        let off: f64 = (0..nt)
            .filter(|&i| i != j)
            .map(|i| norm(&a.submatrix(blocking.range(i), cj.clone()), &NormKind::One))
            .sum::<Result<f64>>()?;
        let q = random_orthogonal(cj.len(), &mut r);
        // ‖Q⁻¹‖₁ = ‖Qᵀ‖₁, so scaling by it sets ‖D⁻¹‖₁⁻¹ = off + δ
        let scale = (off + delta) * norm(&q.transpose(), &NormKind::One)?;
        a.set_block(cj.start, cj.start, &q.scale(scale));
    }
    let one = NormKind::One;
    let mut margin = min_or_zero(&block_col_margins(&a, blocking, &one)?);
    while margin < delta {
        for j in 0..nt {
            let cj = blocking.range(j);
            let d = a.submatrix(cj.clone(), cj.clone()).scale(1.0 + 4.0 * f64::EPSILON);
            a.set_block(cj.start, cj.start, &d);
        }
        margin = min_or_zero(&block_col_margins(&a, blocking, &one)?);
    }
    Ok(a)
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = gaussian(n, n, rng);
    let mut q: Vec<Vec<f64>> = (0..n).map(|j| g.col(j)).collect();
    for j in 0..n {
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for p in 0..j {
                let d: f64 = q[p].iter().zip(&q[j]).map(|(x, y)| x * y).sum();
                let (head, tail) = q.split_at_mut(j);
                tail[0].iter_mut().zip(&head[p]).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nrm = crate::dense::norm2_vec(&q[j]);
        q[j].iter_mut().for_each(|x| *x /= nrm);
    }
    Matrix::from_columns(n, &q).expect("square")
}

/// `1, κ^(−1/(n−1)), …, 1/κ`.
fn log_spaced(n: usize, cond: f64) -> Vec<f64> {
    (0..n)
        .map(|k| cond.powf(-(k as f64) / (n - 1) as f64))
        .collect()
}
