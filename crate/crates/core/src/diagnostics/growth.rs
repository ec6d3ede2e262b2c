//! Growth-factor and factor-norm bounds checked against a finished
//! factorization.

use crate::beam::{modified_matrix, BeamFactorization};
use crate::block_lu::{growth_factor, BlockLuFactors, DiagFactorizer, GrowthTrace};
use crate::dense::{
    cond2, inverse, norm, sigma_max, sigma_min, symmetric_eigenvalues, Blocking, Matrix, NormKind,
    UNIT_ROUNDOFF,
};
use crate::error::{Error, Result};

use super::dominance::{block_col_margins, block_row_margins, col_margins, row_margins};
use super::{BoundCheck, CheckReport};

const INNER: [NormKind; 4] = [
    NormKind::One,
    NormKind::Inf,
    NormKind::Spectral,
    NormKind::Frobenius,
];

/// The basic norms plus block-max and block-sum over `blocking` for every
/// submultiplicative inner norm; enough for every growth check.
pub fn growth_trace_norms(blocking: &Blocking) -> Vec<NormKind> {
    let mut v = NormKind::BASIC.to_vec();
    for inner in INNER {
        v.push(NormKind::block_max(inner.clone(), blocking));
        v.push(NormKind::block_sum(inner, blocking));
    }
    v
}

/// Either kind of factorization, for checks that apply to both.
#[derive(Clone, Copy)]
pub enum Factorization<'a> {
    BlockLu(&'a BlockLuFactors),
    Beam(&'a BeamFactorization),
}

impl<'a> From<&'a BlockLuFactors> for Factorization<'a> {
    fn from(f: &'a BlockLuFactors) -> Self {
        Factorization::BlockLu(f)
    }
}

impl<'a> From<&'a BeamFactorization> for Factorization<'a> {
    fn from(f: &'a BeamFactorization) -> Self {
        Factorization::Beam(f)
    }
}

impl<'a> Factorization<'a> {
    fn factors(&self) -> &'a BlockLuFactors {
        match self {
            Factorization::BlockLu(f) => f,
            Factorization::Beam(f) => f.factors(),
        }
    }
}

/// `‖M⁻¹‖` in the given kind, `None` when `M` is singular.
fn inverse_norm(m: &Matrix, kind: &NormKind) -> Result<Option<f64>> {
    if *kind == NormKind::Spectral {
        let s = sigma_min(m)?;
        return Ok((s > 0.0).then(|| 1.0 / s));
    }
    match inverse(m) {
        Ok(inv) => Ok(Some(norm(&inv, kind)?)),
        Err(Error::SingularPivot { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `max_{k < n_t} ‖M_{1:k}⁻¹‖` over leading block submatrices, zero for a
/// single block, `None` if one of them is singular.
fn max_leading_inverse(m: &Matrix, blocking: &Blocking, kind: &NormKind) -> Result<Option<f64>> {
    let mut worst = 0.0_f64;
    for k in 1..blocking.num_blocks() {
        let end = blocking.range(k - 1).end;
        match inverse_norm(&m.leading(end), kind)? {
            Some(v) => worst = worst.max(v),
            None => return Ok(None),
        }
    }
    Ok(Some(worst))
}

fn sandwich(report: &mut CheckReport, trace: &GrowthTrace, n: usize) -> Result<()> {
    if !trace.contains(&NormKind::Max) {
        report.skip("growth_equivalence", "max norm not traced");
        return Ok(());
    }
    let pmax = growth_factor(trace, &NormKind::Max)?;
    let nf = n as f64;
    for kind in [NormKind::One, NormKind::Spectral, NormKind::Inf, NormKind::Frobenius] {
        if !trace.contains(&kind) {
            continue;
        }
        let p = growth_factor(trace, &kind)?;
        report.push(BoundCheck::at_most(format!("growth_{kind}_upper"), p, nf * pmax));
        report.push(BoundCheck::at_most(format!("growth_{kind}_lower"), pmax, nf * p));
    }
    Ok(())
}

/// `P ≤ 1 + max_k ‖M_{1:k}⁻¹‖‖A‖` where `M` supplies the leading inverses.
fn schur_bound(
    report: &mut CheckReport,
    trace: &GrowthTrace,
    m: &Matrix,
    blocking: &Blocking,
) -> Result<()> {
    for kind in [NormKind::Spectral, NormKind::Frobenius] {
        let name = format!("growth_{kind}_schur");
        if !trace.contains(&kind) {
            report.skip(name, "norm not traced");
            continue;
        }
        match max_leading_inverse(m, blocking, &kind)? {
            Some(inv) => {
                let bound = 1.0 + inv * trace.initial_norm(&kind)?;
                report.push(BoundCheck::at_most(name, growth_factor(trace, &kind)?, bound));
            }
            None => report.skip(name, "a leading block submatrix is singular"),
        }
    }
    Ok(())
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn dominance_growth(
    report: &mut CheckReport,
    a: &Matrix,
    blocking: &Blocking,
    trace: &GrowthTrace,
) -> Result<()> {
    let rows = min_of(&row_margins(a)) > 0.0;
    let cols = min_of(&col_margins(a)) > 0.0;
    let traced = |k: &NormKind| trace.contains(k);
    if rows && traced(&NormKind::Inf) {
        report.push(BoundCheck::at_most(
            "growth_inf_row_dominant",
            growth_factor(trace, &NormKind::Inf)?,
            1.0,
        ));
    }
    if cols && traced(&NormKind::One) {
        report.push(BoundCheck::at_most(
            "growth_1_col_dominant",
            growth_factor(trace, &NormKind::One)?,
            1.0,
        ));
    }
    if (rows || cols) && traced(&NormKind::Max) {
        report.push(BoundCheck::at_most(
            "growth_max_dominant",
            growth_factor(trace, &NormKind::Max)?,
            2.0,
        ));
    }

    let inv = match inverse(a) {
        Ok(m) => Some(m),
        Err(Error::SingularPivot { .. }) => None,
        Err(e) => return Err(e),
    };
    for inner in INNER {
        let bmax = NormKind::block_max(inner.clone(), blocking);
        let bsum = NormKind::block_sum(inner.clone(), blocking);
        if !traced(&bmax) && !traced(&bsum) {
            continue;
        }
        let bcols = min_of(&block_col_margins(a, blocking, &inner)?) > 0.0;
        let brows = min_of(&block_row_margins(a, blocking, &inner)?) > 0.0;
        if bcols || brows {
            if traced(&bmax) {
                report.push(BoundCheck::at_most(
                    format!("growth_{bmax}_block_dominant"),
                    growth_factor(trace, &bmax)?,
                    2.0,
                ));
            }
            if traced(&bsum) {
                report.push(BoundCheck::at_most(
                    format!("growth_{bsum}_block_dominant"),
                    growth_factor(trace, &bsum)?,
                    1.0,
                ));
            }
        }
        if bcols && inner == NormKind::One && traced(&NormKind::One) {
            report.push(BoundCheck::at_most(
                "growth_1_block_col_dominant",
                growth_factor(trace, &NormKind::One)?,
                4.0,
            ));
        }
        if brows && inner == NormKind::Inf && traced(&NormKind::Inf) {
            report.push(BoundCheck::at_most(
                "growth_inf_block_row_dominant",
                growth_factor(trace, &NormKind::Inf)?,
                4.0,
            ));
        }
        if let Some(inv) = &inv {
            if traced(&bmax) && min_of(&block_row_margins(inv, blocking, &inner)?) > 0.0 {
                report.push(BoundCheck::at_most(
                    format!("growth_{bmax}_inverse_block_row_dominant"),
                    growth_factor(trace, &bmax)?,
                    2.0,
                ));
            }
        }
    }
    Ok(())
}

/// Growth checks for an unmodified factorization of `a`: the equivalence
/// sandwich between growth factors, the Schur-complement bound, and the
/// dominance bounds whose hypotheses `a` satisfies.
pub fn check_growth_bounds(
    a: &Matrix,
    blocking: &Blocking,
    trace: &GrowthTrace,
) -> Result<CheckReport> {
    let mut r = CheckReport::default();
    sandwich(&mut r, trace, a.rows())?;
    schur_bound(&mut r, trace, a, blocking)?;
    dominance_growth(&mut r, a, blocking, trace)?;
    Ok(r)
}

/// Growth checks for BEAM. The Schur bound uses leading inverses of the
/// modified matrix; dominance bounds apply only if nothing was modified.
pub fn check_beam_growth(f: &BeamFactorization, a: &Matrix) -> Result<CheckReport> {
    let blocking = f.factors().blocking();
    let trace = f.factors().trace();
    let mut r = CheckReport::default();
    sandwich(&mut r, trace, a.rows())?;
    schur_bound(&mut r, trace, &modified_matrix(f, a), blocking)?;
    if f.mods().count() == 0 {
        dominance_growth(&mut r, a, blocking, trace)?;
    } else {
        r.skip("growth_dominance", "matrix was modified");
    }
    Ok(r)
}

/// `σ_min` of every leading block submatrix against `σ_min` of the
/// corresponding diagonal block of the Schur complement. For BEAM both sides
/// refer to the modified matrix and the raised diagonal blocks.
pub fn check_interlacing<'a>(f: impl Into<Factorization<'a>>, a: &Matrix) -> Result<CheckReport> {
    let f = f.into();
    let factors = f.factors();
    let blocking = factors.blocking();
    let m = match f {
        Factorization::BlockLu(_) => a.clone(),
        Factorization::Beam(b) => modified_matrix(b, a),
    };
    let headroom = 8.0 * m.rows() as f64 * UNIT_ROUNDOFF * sigma_max(&m)?;
    let mut r = CheckReport::default();
    for k in 0..blocking.num_blocks() {
        let lead = sigma_min(&m.leading(blocking.range(k).end))?;
        let diag = match f {
            Factorization::BlockLu(_) => factors.trace().steps[k].diag_sigma_min,
            Factorization::Beam(_) => factors
                .diag_singular_values(k)
                .map(min_of)
                .unwrap_or(f64::NAN),
        };
        r.push(BoundCheck::at_most(
            format!("interlacing_block_{}", k + 1),
            lead,
            diag + headroom,
        ));
    }
    Ok(r)
}

/// Norm bounds on the computed `L` and `R`. Bounds on `L` need unitary
/// diagonal factors; bounds on `R` hold for identity and unitary diagonals.
pub fn check_factor_bounds<'a>(f: impl Into<Factorization<'a>>, a: &Matrix) -> Result<CheckReport> {
    let f = f.into();
    let factors = f.factors();
    let trace = factors.trace();
    let blocking = factors.blocking();
    let nt = blocking.num_blocks() as f64;
    let nb = blocking.max_block_size() as f64;
    let mut r = CheckReport::default();

    let diag = factors.diag();
    if diag == DiagFactorizer::PointwiseLu {
        r.skip("factor_bounds", "no factor bound for pointwise diagonal LU");
        return Ok(r);
    }
    let unitary = diag == DiagFactorizer::Unitary;
    let (target, tau, m_count) = match f {
        Factorization::BlockLu(_) => (a.clone(), 0.0, 0usize),
        Factorization::Beam(b) => (modified_matrix(b, a), b.tau(), b.mods().count()),
    };

    for kind in [NormKind::Spectral, NormKind::Frobenius] {
        if !trace.contains(&kind) {
            r.skip(format!("factor_{kind}"), "norm not traced");
            continue;
        }
        // largest norm of a (modified) Schur complement
        let extra = match kind {
            NormKind::Spectral => tau,
            _ => tau * (m_count as f64).sqrt(),
        };
        let g = trace.max_norm(&kind)? + extra;
        r.push(BoundCheck::at_most(
            format!("r_norm_{kind}"),
            norm(factors.r(), &kind)?,
            nt * g,
        ));
        if !unitary {
            continue;
        }
        let diag_part = match kind {
            NormKind::Spectral => nt,
            _ => nb.sqrt() * nt,
        };
        match inverse_norm(&target, &kind)? {
            Some(inv) => r.push(BoundCheck::at_most(
                format!("l_norm_{kind}"),
                norm(factors.l(), &kind)?,
                diag_part + nt * g * inv,
            )),
            None => r.skip(format!("l_norm_{kind}"), "matrix is singular"),
        }
    }
    if !unitary {
        return Ok(r);
    }

    let l2 = norm(factors.l(), &NormKind::Spectral)?;
    if let Factorization::Beam(b) = f {
        if trace.contains(&NormKind::Spectral) {
            let p2 = growth_factor(trace, &NormKind::Spectral)?;
            r.push(BoundCheck::at_most("l_norm_2_tau", l2, nt + nt * p2 / b.tau_hat()));
        }
    }

    if m_count == 0 {
        if min_of(&col_margins(a)) > 0.0 {
            r.push(BoundCheck::at_most(
                "l_norm_2_col_dominant",
                l2,
                (nb.powf(1.5) + 1.0) * nt,
            ));
        }
        if a.is_symmetric(0.0) && symmetric_eigenvalues(a)?[0] > 0.0 {
            let kappa = cond2(a)?;
            r.push(BoundCheck::at_most("l_norm_2_spd", l2, (kappa.sqrt() + 1.0) * nt));
        }
    } else {
        r.skip("l_norm_2_structured", "matrix was modified");
    }

    let steps = &trace.steps;
    let max2 = steps.iter().map(|s| s.subdiag_block_max_2).fold(0.0, f64::max);
    let maxf = steps.iter().map(|s| s.subdiag_block_max_fro).fold(0.0, f64::max);
    if max2 <= 1.0 {
        r.push(BoundCheck::at_most(
            "l_blockmax_2_subdiag",
            norm(factors.l(), &NormKind::block_max(NormKind::Spectral, blocking))?,
            1.0,
        ));
    } else {
        r.skip("l_blockmax_2_subdiag", "subdiagonal ratio exceeds one");
    }
    if maxf <= 1.0 {
        r.push(BoundCheck::at_most(
            "l_blockmax_fro_subdiag",
            norm(factors.l(), &NormKind::block_max(NormKind::Frobenius, blocking))?,
            nb.sqrt(),
        ));
    } else {
        r.skip("l_blockmax_fro_subdiag", "subdiagonal ratio exceeds one");
    }
    Ok(r)
}
