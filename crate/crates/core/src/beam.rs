//! BEAM: block LU with SVD-factored diagonal blocks in which every singular
//! value at or below a threshold `τ` is raised to exactly `τ`.
//!
//! The factors are those of a modified matrix `Ã = A + M_U·diag(δ)·M_Vᵀ`.
//! Solves with `A` itself go through the Woodbury correction
//!
//! ```text
//! A⁻¹ = R̃⁻¹ (I + C_L C⁻¹ C_R) L̃⁻¹,   C_L = L̃⁻¹ M_U,  C_R = diag(δ) M_Vᵀ R̃⁻¹,
//!                                     C = I − C_R C_L
//! ```
//!
//! followed by optional iterative refinement against the original `A`.

use serde::Serialize;

use crate::block_lu::{eliminate, BlockLuFactors, DiagFactorizer};
use crate::dense::{norm2_vec, sigma_max, Blocking, DenseLu, Matrix, NormKind};
use crate::error::{Error, Result};

/// How the modification threshold is specified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// `τ = τ̂·‖A‖₂` with `0 < τ̂ < 1`.
    Relative(f64),
    /// `τ` given directly.
    Absolute(f64),
}

#[derive(Clone, Debug)]
pub struct BeamOptions {
    pub threshold: Threshold,
    pub woodbury: bool,
    pub trace_norms: Vec<NormKind>,
}

impl BeamOptions {
    pub fn relative(tau_hat: f64) -> Self {
        Self {
            threshold: Threshold::Relative(tau_hat),
            woodbury: true,
            trace_norms: crate::block_lu::default_trace_norms(),
        }
    }

    pub fn absolute(tau: f64) -> Self {
        Self {
            threshold: Threshold::Absolute(tau),
            ..Self::relative(0.5)
        }
    }

    pub fn woodbury(mut self, on: bool) -> Self {
        self.woodbury = on;
        self
    }

    pub fn trace_norms(mut self, kinds: Vec<NormKind>) -> Self {
        self.trace_norms = kinds;
        self
    }
}

/// The raised singular values and their singular vectors.
#[derive(Clone, Debug, Serialize)]
pub struct ModificationRecord {
    pub tau: f64,
    pub tau_hat: f64,
    /// `n × m`; column `j` is the left singular vector of modification `j`,
    /// zero outside its block.
    #[serde(skip)]
    pub u_cols: Matrix,
    #[serde(skip)]
    pub v_cols: Matrix,
    /// `τ − σ` for each raised singular value.
    pub deltas: Vec<f64>,
    /// The singular values before raising.
    pub sigmas: Vec<f64>,
    /// 1-based owning block of each modification.
    pub block_of: Vec<usize>,
}

impl ModificationRecord {
    pub fn count(&self) -> usize {
        self.deltas.len()
    }

    /// `M_U·diag(δ)·M_Vᵀ`.
    pub fn correction(&self) -> Matrix {
        let n = self.u_cols.rows();
        let m = self.count();
        Matrix::from_fn(n, n, |i, j| {
            (0..m)
                .map(|p| self.u_cols.get(i, p) * self.deltas[p] * self.v_cols.get(j, p))
                .sum()
        })
    }
}

/// Precomputed Woodbury terms.
#[derive(Clone, Debug)]
pub struct Capacitance {
    c_l: Matrix,
    c_r: Matrix,
    c: Matrix,
    lu: std::result::Result<DenseLu, usize>,
}

impl Capacitance {
    /// `L̃⁻¹ M_U`, `n × m`.
    pub fn c_l(&self) -> &Matrix {
        &self.c_l
    }

    /// `diag(δ) M_Vᵀ R̃⁻¹`, `m × n`.
    pub fn c_r(&self) -> &Matrix {
        &self.c_r
    }

    /// `I − C_R C_L`.
    pub fn matrix(&self) -> &Matrix {
        &self.c
    }
}

#[derive(Clone, Debug)]
pub struct BeamFactorization {
    factors: BlockLuFactors,
    mods: ModificationRecord,
    capacitance: Option<Capacitance>,
    a_norm2: f64,
}

/// Stopping rule for iterative refinement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Refinement {
    pub max_iters: usize,
    pub target: f64,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            max_iters: 10,
            target: 1e-13,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Refinement corrections applied.
    pub iterations: usize,
    /// `‖b − Ax‖₂ / (‖A‖₂‖x‖₂)` after the initial solve and after each
    /// correction.
    pub residuals: Vec<f64>,
    pub woodbury_used: bool,
    /// Residual grew on two consecutive iterations.
    pub diverged: bool,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().unwrap()
    }
}

/// BEAM factorization with `τ = τ̂·‖A‖₂`.
pub fn beam_factor(
    a: &Matrix,
    blocking: &Blocking,
    tau_hat: f64,
    woodbury: bool,
    trace_norms: &[NormKind],
) -> Result<BeamFactorization> {
    beam_factor_with(
        a,
        blocking,
        &BeamOptions::relative(tau_hat)
            .woodbury(woodbury)
            .trace_norms(trace_norms.to_vec()),
    )
}

pub fn beam_factor_with(
    a: &Matrix,
    blocking: &Blocking,
    opts: &BeamOptions,
) -> Result<BeamFactorization> {
    if a.is_empty() || !a.is_square() {
        return Err(Error::invalid("BEAM needs a non-empty square matrix"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("BEAM: matrix has non-finite entries"));
    }
    let a_norm2 = sigma_max(a)?;
    if a_norm2 == 0.0 {
        return Err(Error::invalid("BEAM: zero matrix"));
    }
    let (tau, tau_hat) = match opts.threshold {
        Threshold::Relative(t) => {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::invalid(format!("tau_hat must lie in (0, 1), got {t}")));
            }
            (t * a_norm2, t)
        }
        Threshold::Absolute(t) => {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("tau must be positive, got {t}")));
            }
            (t, t / a_norm2)
        }
    };

    let (factors, raw) = eliminate(
        a,
        blocking,
        DiagFactorizer::Unitary,
        &opts.trace_norms,
        Some(tau),
    )?;
    let n = a.rows();
    let m = raw.len();
    let mods = ModificationRecord {
        tau,
        tau_hat,
        u_cols: Matrix::from_fn(n, m, |i, j| raw[j].u[i]),
        v_cols: Matrix::from_fn(n, m, |i, j| raw[j].v[i]),
        deltas: raw.iter().map(|r| r.delta).collect(),
        sigmas: raw.iter().map(|r| r.sigma).collect(),
        block_of: raw.iter().map(|r| r.block + 1).collect(),
    };

    let capacitance = if opts.woodbury && m > 0 {
        Some(build_capacitance(&factors, &mods)?)
    } else {
        None
    };

    Ok(BeamFactorization {
        factors,
        mods,
        capacitance,
        a_norm2,
    })
}

fn build_capacitance(f: &BlockLuFactors, mods: &ModificationRecord) -> Result<Capacitance> {
    let n = f.dim();
    let m = mods.count();
    let mut cl_cols = Vec::with_capacity(m);
    let mut cr_rows = Vec::with_capacity(m);
    for j in 0..m {
        cl_cols.push(f.forward_sub(&mods.u_cols.col(j))?);
        // row j of C_R is δ_j (R̃⁻ᵀ v_j)ᵀ
        let z = f.back_sub_transpose(&mods.v_cols.col(j))?;
        cr_rows.push(z.iter().map(|v| v * mods.deltas[j]).collect::<Vec<_>>());
    }
    let c_l = Matrix::from_columns(n, &cl_cols)?;
    let c_r = Matrix::from_rows(&cr_rows)?;
    let c = Matrix::identity(m).sub(&c_r.matmul(&c_l)?)?;
    let lu = match DenseLu::factor(&c) {
        Ok(lu) => Ok(lu),
        Err(Error::SingularPivot { index }) => Err(index),
        Err(e) => return Err(e),
    };
    Ok(Capacitance { c_l, c_r, c, lu })
}

impl BeamFactorization {
    pub fn factors(&self) -> &BlockLuFactors {
        &self.factors
    }

    pub fn mods(&self) -> &ModificationRecord {
        &self.mods
    }

    pub fn capacitance(&self) -> Option<&Capacitance> {
        self.capacitance.as_ref()
    }

    pub fn tau(&self) -> f64 {
        self.mods.tau
    }

    pub fn tau_hat(&self) -> f64 {
        self.mods.tau_hat
    }

    /// `‖A‖₂` of the unmodified input.
    pub fn a_norm2(&self) -> f64 {
        self.a_norm2
    }

    /// One pass `R̃⁻¹ (I + C_L C⁻¹ C_R) L̃⁻¹ b`, without refinement. Without
    /// capacitance this is a solve with `Ã`.
    pub fn apply(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.factors.forward_sub(b)?;
        if let Some(cap) = &self.capacitance {
            let lu = cap
                .lu
                .as_ref()
                .map_err(|&index| Error::SingularPivot { index })?;
            let t = cap.c_r.matvec(&y)?;
            let s = lu.solve_vec(&t)?;
            let corr = cap.c_l.matvec(&s)?;
            y.iter_mut().zip(corr).for_each(|(yi, ci)| *yi += ci);
        }
        self.factors.back_sub(&y)
    }

    /// Solves `A x = b` for the original `A`, refining against it.
    pub fn solve(&self, a: &Matrix, b: &[f64], refine: Option<Refinement>) -> Result<SolveReport> {
        if a.shape() != (self.factors.dim(), self.factors.dim()) {
            return Err(Error::invalid("solve: matrix does not match the factorization"));
        }
        let mut x = self.apply(b)?;
        let (mut r, mut rel) = residual(a, b, &x, self.a_norm2)?;
        let mut residuals = vec![rel];
        let mut iterations = 0;
        let mut diverged = false;
        let mut rises = 0;
        if let Some(opts) = refine {
            while iterations < opts.max_iters && rel > opts.target {
                let d = self.apply(&r)?;
                x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += di);
                iterations += 1;
                let prev = rel;
                (r, rel) = residual(a, b, &x, self.a_norm2)?;
                residuals.push(rel);
                rises = if rel > prev { rises + 1 } else { 0 };
                if rises >= 2 {
                    diverged = true;
                    break;
                }
            }
        }
        Ok(SolveReport {
            x,
            iterations,
            residuals,
            woodbury_used: self.capacitance.is_some(),
            diverged,
        })
    }
}

fn residual(a: &Matrix, b: &[f64], x: &[f64], a_norm2: f64) -> Result<(Vec<f64>, f64)> {
    let ax = a.matvec(x)?;
    let r: Vec<f64> = b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect();
    let rn = norm2_vec(&r);
    let denom = a_norm2 * norm2_vec(x);
    let rel = if rn == 0.0 { 0.0 } else { rn / denom };
    Ok((r, rel))
}

/// Free-function form of [`BeamFactorization::solve`].
pub fn beam_solve(
    f: &BeamFactorization,
    b: &[f64],
    refine: Option<Refinement>,
    a: &Matrix,
) -> Result<SolveReport> {
    f.solve(a, b, refine)
}

/// `Ã = A + M_U·diag(δ)·M_Vᵀ`.
pub fn modified_matrix(f: &BeamFactorization, a: &Matrix) -> Matrix {
    if f.mods.count() == 0 {
        return a.clone();
    }
    a.add(&f.mods.correction()).expect("same shape")
}
