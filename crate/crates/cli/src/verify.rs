//! Seeded verification suites. Each suite generates its instances, runs the
//! relevant bound checks and tallies them by check name.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use blocklu::beam::{beam_factor, beam_factor_with, BeamFactorization, BeamOptions, Refinement};
use blocklu::block_lu::{factor_block_lu, growth_factor, DiagFactorizer};
use blocklu::dense::{cond2, norm, Blocking, Matrix, NormKind, UNIT_ROUNDOFF};
use blocklu::diagnostics::{
    check_beam_growth, check_factor_bounds, check_growth_bounds, check_interlacing,
    determinant_bounds, dominance, growth_trace_norms, modification_free_bound,
    psi_and_capacitance, zielke_growth_check, BoundCheck, CheckReport, Comparison,
};
use blocklu::gallery::{generate, BlockLayout, MatrixSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUITES: [&str; 6] = ["norms", "growth", "beam", "zielke", "modfree", "psi"];

#[derive(Debug, Default)]
pub struct Tally {
    pub count: usize,
    pub failed: usize,
    /// Largest measured/bound ratio, or relative deviation for closeness checks.
    pub worst: f64,
    pub first_failure: Option<String>,
}

#[derive(Debug, Default)]
pub struct SuiteResult {
    pub groups: BTreeMap<String, Tally>,
    pub errors: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.groups.values().all(|t| t.failed == 0)
    }

    pub fn checks(&self) -> usize {
        self.groups.values().map(|t| t.count).sum()
    }

    fn absorb(&mut self, label: &str, r: blocklu::Result<CheckReport>) {
        match r {
            Ok(r) => r.checks.iter().for_each(|c| self.add(label, c)),
            Err(e) => self.errors.push(format!("{label}: {e}")),
        }
    }

    fn add(&mut self, label: &str, c: &BoundCheck) {
        let t = self.groups.entry(group_of(&c.name).to_string()).or_default();
        t.count += 1;
        let margin = match c.comparison {
            Comparison::AtMost if c.bound > 0.0 => c.measured / c.bound,
            Comparison::AtMost => f64::from(u8::from(!c.satisfied)),
            Comparison::LogAtMost => (c.measured - c.bound).exp(),
            Comparison::Close { .. } if c.bound != 0.0 => ((c.measured - c.bound) / c.bound).abs(),
            Comparison::Close { .. } => c.measured.abs(),
        };
        if margin > t.worst || margin.is_nan() {
            t.worst = margin;
        }
        if !c.satisfied {
            t.failed += 1;
            if t.first_failure.is_none() {
                t.first_failure = Some(format!(
                    "{label} {}: measured {:.6e}, bound {:.6e}",
                    c.context, c.measured, c.bound
                ));
            }
        }
    }

    pub fn table(&self, suite: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "suite {suite}");
        let _ = writeln!(s, "  {:<40} {:>7} {:>7} {:>12}", "check", "count", "failed", "worst");
        for (name, t) in &self.groups {
            let _ = writeln!(s, "  {:<40} {:>7} {:>7} {:>12.4e}", name, t.count, t.failed, t.worst);
        }
        for t in self.groups.values() {
            if let Some(f) = &t.first_failure {
                let _ = writeln!(s, "  first failure: {f}");
            }
        }
        for e in self.errors.iter().take(10) {
            let _ = writeln!(s, "  error: {e}");
        }
        s
    }
}

/// Per-block checks such as `interlacing_block_3` share one row.
fn group_of(name: &str) -> &str {
    match name.rsplit_once('_') {
        Some((head, k))
            if k.bytes().all(|b| b.is_ascii_digit())
                && (head.ends_with("block") || head.ends_with("leading_inverse")) =>
        {
            head
        }
        _ => name,
    }
}

/// `None` for an unknown suite.
pub fn run_suite(name: &str) -> Option<SuiteResult> {
    Some(match name {
        "norms" => norms(),
        "growth" => growth(),
        "beam" => beam(),
        "zielke" => zielke(),
        "modfree" => modfree(),
        "psi" => psi(),
        _ => return None,
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_blocking(n: usize, max_nb: usize, r: &mut ChaCha8Rng) -> Blocking {
    let mut offsets = vec![0];
    while *offsets.last().unwrap() < n {
        let step = r.random_range(1..=max_nb);
        offsets.push((offsets.last().unwrap() + step).min(n));
    }
    Blocking::from_offsets(offsets).unwrap()
}

fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(r.random_range(lo..hi))
}

fn norms() -> SuiteResult {
    let mut out = SuiteResult::default();
    let mut r = rng(41);
    for trial in 0..1000 {
        let rep = norm_trial(&mut r);
        out.absorb(&format!("trial {trial}"), rep);
    }
    out
}

fn norm_trial(r: &mut ChaCha8Rng) -> blocklu::Result<CheckReport> {
    let rows = r.random_range(1..=12);
    let cols = r.random_range(1..=12);
    let scale = log_uniform(r, -3.0, 3.0);
    let a = Matrix::from_fn(rows, cols, |_, _| scale * r.random_range(-1.0..1.0));
    let rb = random_blocking(rows, 5, r);
    let cb = random_blocking(cols, 5, r);
    let cells = (rb.num_blocks() * cb.num_blocks()) as f64;
    let block = |max: bool, inner: &NormKind, rows: &Blocking, cols: &Blocking| {
        let (inner, rows, cols) = (Box::new(inner.clone()), rows.clone(), cols.clone());
        if max {
            NormKind::BlockMax { inner, rows, cols }
        } else {
            NormKind::BlockSum { inner, rows, cols }
        }
    };
    let mut rep = CheckReport::default();
    for inner in NormKind::BASIC.iter().chain([NormKind::Sum].iter()) {
        let whole = norm(&a, inner)?;
        let mx = norm(&a, &block(true, inner, &rb, &cb))?;
        let sm = norm(&a, &block(false, inner, &rb, &cb))?;
        rep.push(BoundCheck::at_most("family_block_max_below", mx, whole));
        rep.push(BoundCheck::at_most("family_block_sum_above", whole, sm));
        rep.push(BoundCheck::at_most("sandwich_lower", sm / cells, mx));
        rep.push(BoundCheck::at_most("sandwich_upper", sm, cells * mx));

        let (pr, pc) = (r.random_range(0..3), r.random_range(0..3));
        let padded = a.pad_zeros(pr, pc);
        let (prb, pcb) = (rb.extended(pr), cb.extended(pc));
        rep.push(BoundCheck::close("padding", norm(&padded, inner)?, whole, 1e-13));
        rep.push(BoundCheck::close("padding_block_max", norm(&padded, &block(true, inner, &prb, &pcb))?, mx, 1e-13));
        rep.push(BoundCheck::close("padding_block_sum", norm(&padded, &block(false, inner, &prb, &pcb))?, sm, 1e-13));
    }
    let (mt, nt) = (rb.num_blocks() as f64, cb.num_blocks() as f64);
    let bmax = |inner: NormKind| norm(&a, &block(true, &inner, &rb, &cb));
    rep.push(BoundCheck::at_most("equivalence_1", norm(&a, &NormKind::One)?, mt * bmax(NormKind::One)?));
    rep.push(BoundCheck::at_most("equivalence_inf", norm(&a, &NormKind::Inf)?, nt * bmax(NormKind::Inf)?));
    rep.push(BoundCheck::at_most(
        "equivalence_fro",
        norm(&a, &NormKind::Frobenius)?,
        (mt * nt).sqrt() * bmax(NormKind::Frobenius)?,
    ));

    let k = r.random_range(1..=12);
    let b = Matrix::from_fn(cols, k, |_, _| r.random_range(-1.0..1.0));
    let kb = random_blocking(k, 5, r);
    let prod = a.matmul(&b)?;
    for inner in [NormKind::One, NormKind::Inf, NormKind::Frobenius, NormKind::Spectral] {
        let lhs = norm(&prod, &block(false, &inner, &rb, &kb))?;
        let x = norm(&a, &block(false, &inner, &rb, &cb))?;
        let y = norm(&b, &block(false, &inner, &cb, &kb))?;
        rep.push(BoundCheck::at_most("block_sum_submultiplicative", lhs, x * y));
    }
    Ok(rep)
}

fn family(name: &str, n: usize, b: &Blocking, r: &mut ChaCha8Rng, seed: u64) -> MatrixSpec {
    let delta = r.random_range(0.05..1.0);
    match name {
        "rows" => MatrixSpec::DiagDomRows { n, delta, seed },
        "cols" => MatrixSpec::DiagDomCols { n, delta, seed },
        "both" => MatrixSpec::DiagDomBoth { n, delta, seed },
        "block_cols" => MatrixSpec::BlockDiagDomCols {
            n,
            blocking: BlockLayout::Starts(b.starts()),
            delta,
            seed,
        },
        "inverse_block_rows" => MatrixSpec::InverseBlockDiagDomRows {
            n,
            blocking: BlockLayout::Starts(b.starts()),
            delta,
            seed,
        },
        "spd" => MatrixSpec::Spd { n, cond: log_uniform(r, 0.5, 4.0), seed },
        _ => MatrixSpec::RandomCond { n, cond: log_uniform(r, 0.3, 4.0), seed },
    }
}

fn growth() -> SuiteResult {
    let mut out = SuiteResult::default();
    let fams = ["rows", "cols", "both", "block_cols", "inverse_block_rows", "spd", "random"];
    for (fi, fam) in fams.iter().enumerate() {
        for s in 0..30u64 {
            let seed = 100 * fi as u64 + s;
            let mut r = rng(seed);
            let n = r.random_range(4..=32);
            let b = random_blocking(n, 6, &mut r);
            let spec = family(fam, n, &b, &mut r, seed);
            let a = match generate(&spec) {
                Ok(a) => a,
                Err(e) => {
                    out.errors.push(format!("{spec}: {e}"));
                    continue;
                }
            };
            for d in DiagFactorizer::ALL {
                let label = format!("{spec} {} {}", b.label(), d.label());
                let f = match factor_block_lu(&a, &b, d, &growth_trace_norms(&b)) {
                    Ok(f) => f,
                    Err(e) => {
                        out.errors.push(format!("{label}: {e}"));
                        continue;
                    }
                };
                out.absorb(&label, check_growth_bounds(&a, &b, f.trace()));
                out.absorb(&label, check_factor_bounds(&f, &a));
                out.absorb(&label, check_interlacing(&f, &a));
            }
        }
    }
    out
}

/// A random matrix whose first diagonal block is singular, so that BEAM has
/// to modify it.
fn rank_deficient_lead(n: usize, b: &Blocking, cond: f64, seed: u64) -> blocklu::Result<Matrix> {
    let base = generate(&MatrixSpec::RandomCond { n, cond, seed })?;
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| base.row(i).to_vec()).collect();
    let first = b.range(0);
    if first.len() >= 2 {
        for j in first {
            rows[0][j] = rows[1][j];
        }
    } else {
        rows[0][0] = 0.0;
    }
    Matrix::from_rows(&rows)
}

fn beam_checks(out: &mut SuiteResult, label: &str, f: &BeamFactorization, a: &Matrix) {
    out.absorb(label, check_beam_growth(f, a));
    out.absorb(label, check_interlacing(f, a));
    out.absorb(label, check_factor_bounds(f, a));
    out.absorb(label, determinant_bounds(f, a));
}

fn beam() -> SuiteResult {
    let mut out = SuiteResult::default();
    let u = UNIT_ROUNDOFF;
    let swap = generate(&MatrixSpec::LeadingSwap { n: 2 }).map(|a| (a, Blocking::pointwise(2).unwrap(), 0.1));
    let mut cases = vec![("leading_swap(n=2)".to_string(), swap)];
    for s in 0..60u64 {
        let seed = 5000 + s;
        let mut r = rng(seed);
        let n = r.random_range(6..=40);
        let b = random_blocking(n, 8, &mut r);
        let cond = log_uniform(&mut r, 1.0, 5.0);
        let tau_hat = log_uniform(&mut r, -6.0, -1.0);
        let a = rank_deficient_lead(n, &b, cond, seed);
        cases.push((format!("rank_deficient_lead(n={n},seed={seed})"), a.map(|a| (a, b, tau_hat))));
    }
    for (label, case) in cases {
        let (a, b, tau_hat) = match case {
            Ok(c) => c,
            Err(e) => {
                out.errors.push(format!("{label}: {e}"));
                continue;
            }
        };
        let label = format!("{label} {} tau_hat={tau_hat:.3e}", b.label());
        let f = match beam_factor(&a, &b, tau_hat, true, &growth_trace_norms(&b)) {
            Ok(f) => f,
            Err(e) => {
                out.errors.push(format!("{label}: {e}"));
                continue;
            }
        };
        beam_checks(&mut out, &label, &f, &a);
        out.absorb(&label, solve_checks(&f, &a, u));
    }
    out
}

fn solve_checks(f: &BeamFactorization, a: &Matrix, u: f64) -> blocklu::Result<CheckReport> {
    let n = a.rows();
    let mut r = rng(n as u64);
    let x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let rhs = a.matvec(&x)?;
    let mut rep = CheckReport::default();
    rep.push(BoundCheck::close(
        "modifications_present",
        f.mods().count().min(1) as f64,
        1.0,
        0.0,
    ));
    let Some(cap) = f.capacitance() else {
        rep.skip("woodbury_residual", "no capacitance");
        return Ok(rep);
    };
    let cc = cond2(cap.matrix())?;
    let p2 = growth_factor(f.factors().trace(), &NormKind::Spectral)?;
    let plain = f.solve(a, &rhs, None)?;
    rep.push(BoundCheck::at_most(
        "woodbury_residual",
        plain.final_residual(),
        1e3 * n as f64 * u * cc * p2,
    ));
    if cond2(a)? <= 1e8 {
        let refined = f.solve(a, &rhs, Some(Refinement { max_iters: 10, target: 1e-13 }))?;
        rep.push(BoundCheck::at_most("refined_residual", refined.final_residual(), 1e-12));
    }
    Ok(rep)
}

fn zielke() -> SuiteResult {
    let mut out = SuiteResult::default();
    for n in [8, 16] {
        for tau in [0.5, 0.25, 0.1] {
            out.absorb(&format!("zielke(n={n}) tau={tau}"), zielke_growth_check(n, 2, tau));
        }
    }
    out
}

fn modfree() -> SuiteResult {
    let mut out = SuiteResult::default();
    for (fi, fam) in ["cols", "rows", "both", "block_cols", "spd"].iter().enumerate() {
        for s in 0..40u64 {
            let seed = 7000 + 100 * fi as u64 + s;
            let mut r = rng(seed);
            let n = r.random_range(4..=40);
            let b = random_blocking(n, 6, &mut r);
            let spec = family(fam, n, &b, &mut r, seed);
            let label = format!("{spec} {}", b.label());
            let res = (|| -> blocklu::Result<CheckReport> {
                let a = generate(&spec)?;
                let bounds = modification_free_bound(&dominance(&a, &b, None)?, &a)?;
                let tau_max = match *fam {
                    "cols" => bounds.tau_max_cols,
                    "rows" => bounds.tau_max_rows,
                    "both" => bounds.tau_max_both,
                    "block_cols" => bounds.tau_max_block_cols,
                    _ => bounds.tau_max_spd,
                };
                let mut rep = CheckReport::default();
                let Some(t) = tau_max else {
                    rep.push(BoundCheck::close("family_detected", 0.0, 1.0, 0.0));
                    return Ok(rep);
                };
                let opts = BeamOptions::absolute(0.99 * t).trace_norms(growth_trace_norms(&b));
                let f = beam_factor_with(&a, &b, &opts)?;
                rep.push(BoundCheck::close("modfree_count", f.mods().count() as f64, 0.0, 0.0));
                rep.extend(check_beam_growth(&f, &a)?);
                Ok(rep)
            })();
            out.absorb(&label, res);
        }
    }
    out
}

fn psi() -> SuiteResult {
    let mut out = SuiteResult::default();
    for s in 0..40u64 {
        let seed = 9000 + s;
        let mut r = rng(seed);
        let n = r.random_range(6..=40);
        let b = random_blocking(n, 6, &mut r);
        let spec = MatrixSpec::Spd { n, cond: log_uniform(&mut r, 1.0, 4.0), seed };
        let label = format!("{spec} {}", b.label());
        let res = (|| -> blocklu::Result<CheckReport> {
            let a = generate(&spec)?;
            // smallest threshold that forces a modification, found by growing τ̂
            let mut tau_hat = 1.01 / cond2(&a)?;
            let mut f = beam_factor(&a, &b, tau_hat, true, &NormKind::BASIC)?;
            while f.mods().count() == 0 && tau_hat * 1.5 < 1.0 {
                tau_hat *= 1.5;
                f = beam_factor(&a, &b, tau_hat, true, &NormKind::BASIC)?;
            }
            let (_, mut rep) = psi_and_capacitance(&f, &a)?;
            rep.extend(determinant_bounds(&f, &a)?);
            Ok(rep)
        })();
        out.absorb(&label, res);
    }
    for s in 0..40u64 {
        let seed = 9500 + s;
        let mut r = rng(seed);
        let n = r.random_range(6..=40);
        let b = random_blocking(n, 6, &mut r);
        let cond = log_uniform(&mut r, 1.0, 3.0);
        let label = format!("rank_deficient_lead(n={n},seed={seed}) {}", b.label());
        let res = (|| -> blocklu::Result<CheckReport> {
            let a = rank_deficient_lead(n, &b, cond, seed)?;
            let f = beam_factor(&a, &b, 0.5 / cond2(&a)?, true, &NormKind::BASIC)?;
            let (_, mut rep) = psi_and_capacitance(&f, &a)?;
            rep.extend(determinant_bounds(&f, &a)?);
            Ok(rep)
        })();
        out.absorb(&label, res);
    }
    out
}
