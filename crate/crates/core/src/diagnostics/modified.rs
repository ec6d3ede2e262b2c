//! How far the BEAM-modified matrix and its capacitance can drift from the
//! original.

use serde::Serialize;

use crate::beam::{beam_factor_with, modified_matrix, BeamFactorization, BeamOptions};
use crate::block_lu::growth_factor;
use crate::dense::{
    cond2, sigma_max, sigma_min, solve_dense_lu, symmetric_eigenvalues, Blocking, Matrix, NormKind,
};
use crate::error::{Error, Result};
use crate::gallery::{generate, MatrixSpec};

use super::{BoundCheck, CheckReport};

/// Smallest eigenvalue of `FᵀF + F + Fᵀ` still counted as nonnegative.
const PSD_TOL: f64 = -1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct PsiReport {
    /// `σ_min(A)/σ_min(Ã)`; `None` when `Ã` is singular.
    pub psi: Option<f64>,
    pub cond_a: f64,
    pub tau_hat: f64,
    /// `1 + τ̂κ`, valid when the PSD gate holds.
    pub bound_psd: f64,
    /// `1/(1 − τ̂κ)`, present when `τ̂κ < 1`.
    pub bound_small: Option<f64>,
    /// Smallest eigenvalue of `FᵀF + F + Fᵀ`.
    pub gate_min_eig: Option<f64>,
    pub psd_gate: bool,
    /// `cond₂` of `I − diag(δ) M_Vᵀ Ã⁻¹ M_U`.
    pub cond_c: Option<f64>,
    pub note: Option<String>,
}

fn sqrt_delta_scale(m: &Matrix, d: &[f64], rows: bool) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        let s = if rows { d[i] } else { d[j] };
        m.get(i, j) * s
    })
}

/// Measures `ψ` and `cond₂(C)` for a BEAM factorization of `a` and checks
/// them against their bounds.
pub fn psi_and_capacitance(f: &BeamFactorization, a: &Matrix) -> Result<(PsiReport, CheckReport)> {
    let mods = f.mods();
    let tau_hat = f.tau_hat();
    let cond_a = cond2(a)?;
    let mut checks = CheckReport::default();
    let mut rep = PsiReport {
        psi: Some(1.0),
        cond_a,
        tau_hat,
        bound_psd: 1.0 + tau_hat * cond_a,
        bound_small: (tau_hat * cond_a < 1.0).then(|| 1.0 / (1.0 - tau_hat * cond_a)),
        gate_min_eig: None,
        psd_gate: false,
        cond_c: None,
        note: None,
    };
    if mods.count() == 0 {
        rep.note = Some("no modifications".into());
        checks.skip("psi", "no modifications");
        return Ok((rep, checks));
    }
    if !cond_a.is_finite() {
        rep.psi = None;
        rep.note = Some("A is singular".into());
        checks.skip("psi", "A is singular");
        return Ok((rep, checks));
    }

    let at = modified_matrix(f, a);
    let smin_t = sigma_min(&at)?;
    let psi = (smin_t > 0.0).then(|| sigma_min(a).map(|s| s / smin_t)).transpose()?;
    rep.psi = psi;

    let half: Vec<f64> = mods.deltas.iter().map(|d| d.sqrt()).collect();
    let ainv_u = solve_dense_lu(a, &mods.u_cols)?;
    let fm = sqrt_delta_scale(
        &sqrt_delta_scale(&mods.v_cols.transpose().matmul(&ainv_u)?, &half, true),
        &half,
        false,
    );
    let ft = fm.transpose();
    let g = ft.matmul(&fm)?.add(&fm)?.add(&ft)?;
    let g = g.add(&g.transpose())?.scale(0.5);
    let min_eig = symmetric_eigenvalues(&g)?[0];
    rep.gate_min_eig = Some(min_eig);
    rep.psd_gate = min_eig >= PSD_TOL;

    match psi {
        Some(psi) => {
            if rep.psd_gate {
                checks.push(BoundCheck::at_most("psi_psd", psi, rep.bound_psd));
            } else {
                checks.skip("psi_psd", "gate matrix is indefinite");
            }
            match rep.bound_small {
                Some(b) => checks.push(BoundCheck::at_most("psi_small_tau", psi, b)),
                None => checks.skip("psi_small_tau", "tau_hat times cond(A) is at least one"),
            }
        }
        None => checks.skip("psi", "modified matrix is singular"),
    }

    match solve_dense_lu(&at, &mods.u_cols) {
        Ok(tinv_u) => {
            let cr = sqrt_delta_scale(&mods.v_cols.transpose(), &mods.deltas, true);
            let c = Matrix::identity(mods.count()).sub(&cr.matmul(&tinv_u)?)?;
            let cc = cond2(&c)?;
            rep.cond_c = Some(cc);
            if let Some(psi) = psi {
                let bound = (1.0 + tau_hat * psi * cond_a) * (1.0 + tau_hat * cond_a);
                checks.push(BoundCheck::at_most("capacitance_cond", cc, bound));
            }
        }
        Err(Error::SingularPivot { .. }) => checks.skip("capacitance_cond", "modified matrix is singular"),
        Err(e) => return Err(e),
    }
    Ok((rep, checks))
}

/// Log-scale bounds on `‖Ã⁻¹‖₂`, `cond₂(Ã)` and the leading inverses of `Ã`,
/// which follow from every diagonal block having `σ_min ≥ τ`.
pub fn determinant_bounds(f: &BeamFactorization, a: &Matrix) -> Result<CheckReport> {
    let at = modified_matrix(f, a);
    let n = a.rows() as f64;
    let a2 = f.a_norm2();
    let t2 = sigma_max(&at)?;
    let ln_ratio = (t2 / a2).ln();
    let ln_tau = f.tau_hat().ln();
    let mut r = CheckReport::default();

    r.push(BoundCheck::at_most("modified_norm_ratio", t2 / a2, 1.0 + f.tau_hat()));

    let smin = sigma_min(&at)?;
    // κ(A)⁻¹‖A⁻¹‖₂ = 1/‖A‖₂
    r.push(BoundCheck::log_at_most(
        "log_inverse_norm",
        -smin.ln(),
        (n - 1.0) * ln_ratio - n * ln_tau - a2.ln(),
    ));
    r.push(BoundCheck::log_at_most(
        "log_cond",
        t2.ln() - smin.ln(),
        n * ln_ratio - n * ln_tau,
    ));

    let blocking = f.factors().blocking();
    for k in 0..blocking.num_blocks() {
        let lead = at.leading(blocking.range(k).end);
        let nk = lead.rows() as f64;
        let ratio_k = (sigma_max(&lead)? / a2).ln();
        r.push(BoundCheck::log_at_most(
            format!("log_leading_inverse_{}", k + 1),
            a2.ln() - sigma_min(&lead)?.ln(),
            (nk - 1.0) * ratio_k - nk * ln_tau,
        ));
    }
    Ok(r)
}

/// Runs BEAM with absolute threshold `tau` on the Zielke matrix of order `n`
/// in blocks of `nb` and checks the exact max-norm growth `τ^{1−n_t}` and
/// one modification in each block but the last, whose diagonal block
/// inherits a nonzero corner from the growing last row.
pub fn zielke_growth_check(n: usize, nb: usize, tau: f64) -> Result<CheckReport> {
    if !(tau > 0.0 && tau <= 0.5) {
        return Err(Error::invalid(format!("tau must lie in (0, 1/2], got {tau}")));
    }
    let blocking = Blocking::uniform(n, nb)?;
    let nt = blocking.num_blocks();
    if (0..nt).any(|k| blocking.block_size(k) < 2) {
        return Err(Error::invalid("every block needs at least two rows"));
    }
    let a = generate(&MatrixSpec::Zielke { n })?;
    let opts = BeamOptions::absolute(tau).trace_norms(vec![NormKind::Max]);
    let f = beam_factor_with(&a, &blocking, &opts)?;

    let mut r = CheckReport::default();
    let p = growth_factor(f.factors().trace(), &NormKind::Max)?;
    let expected = tau.powi(1 - nt as i32);
    r.push(BoundCheck::close("zielke_growth_max", p, expected, 1e-8));
    r.push(BoundCheck::close(
        "zielke_mod_count",
        f.mods().count() as f64,
        (nt - 1) as f64,
        0.0,
    ));
    let mut per_block = vec![0usize; nt];
    for &k in &f.mods().block_of {
        per_block[k - 1] += 1;
    }
    let worst = per_block
        .iter()
        .enumerate()
        .map(|(k, &c)| c.abs_diff(usize::from(k + 1 < nt)))
        .max()
        .unwrap_or(0);
    r.push(BoundCheck::close("zielke_mods_per_block", worst as f64, 0.0, 0.0));
    Ok(r.with_context(&format!("zielke(n={n}) nb={nb} tau={tau}")))
}
