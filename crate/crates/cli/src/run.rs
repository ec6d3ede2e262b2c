//! Expands a config into runs, executes them, and collects one record each.

use std::collections::BTreeMap;
use std::time::Instant;

use blocklu::beam::{beam_factor_with, BeamFactorization, BeamOptions, Threshold};
use blocklu::block_lu::{factor_block_lu, BlockLuFactors, DiagFactorizer, GrowthTrace};
use blocklu::dense::{norm2_vec, sigma_max, Blocking, Matrix};
use blocklu::diagnostics::{
    check_beam_growth, check_factor_bounds, check_growth_bounds, check_interlacing,
    determinant_bounds, dominance, growth_trace_norms, modification_free_bound,
    psi_and_capacitance, BoundCheck, CheckReport, Skipped,
};
use blocklu::gallery::{generate, read_matrix_market};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::config::{CheckGroup, ConfigError, ExperimentConfig, MatrixSource, Method};

pub const SCHEMA_VERSION: u32 = 1;

/// One concrete matrix; random families appear once per configured seed.
pub struct Instance {
    pub matrix: usize,
    pub draw: usize,
    pub label: String,
    pub family: String,
    pub seed: Option<u64>,
    pub a: Matrix,
    pub blockings: Vec<Blocking>,
}

/// Builds every instance and checks every blocking against it, so that bad
/// input is reported before any run starts.
pub fn instantiate(cfg: &ExperimentConfig) -> Result<Vec<Instance>, ConfigError> {
    let mut out = Vec::new();
    for (i, src) in cfg.matrices.iter().enumerate() {
        let draws: Vec<(String, String, Option<u64>, Matrix)> = match src {
            MatrixSource::File { path } => {
                let a = read_matrix_market(path).map_err(|e| ConfigError(format!("matrices[{i}]: {e}")))?;
                if !a.is_square() {
                    return Err(ConfigError(format!(
                        "matrices[{i}]: {} is {}x{}, not square",
                        path.display(),
                        a.rows(),
                        a.cols()
                    )));
                }
                vec![(format!("file:{}", path.display()), "file".into(), None, a)]
            }
            MatrixSource::Generated(spec) => {
                let specs = match spec.seed() {
                    Some(_) if !cfg.seeds.is_empty() => {
                        cfg.seeds.iter().map(|&s| spec.reseeded(s)).collect()
                    }
                    _ => vec![spec.clone()],
                };
                specs
                    .into_iter()
                    .map(|s| {
                        let a = generate(&s).map_err(|e| ConfigError(format!("matrices[{i}]: {e}")))?;
                        Ok((s.to_string(), s.family().to_string(), s.seed(), a))
                    })
                    .collect::<Result<_, ConfigError>>()?
            }
        };
        for (draw, (label, family, seed, a)) in draws.into_iter().enumerate() {
            let blockings = cfg
                .blockings
                .iter()
                .enumerate()
                .map(|(j, layout)| {
                    layout
                        .to_blocking(a.rows())
                        .map_err(|e| ConfigError(format!("blockings[{j}] for matrices[{i}] ({label}): {e}")))
                })
                .collect::<Result<_, _>>()?;
            out.push(Instance {
                matrix: i,
                draw,
                label,
                family,
                seed,
                a,
                blockings,
            });
        }
    }
    Ok(out)
}

/// Position of a run in the expansion order; records are sorted by it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RunKey {
    pub matrix: usize,
    pub draw: usize,
    pub blocking: usize,
    pub method: Method,
    pub threshold: Option<usize>,
}

/// A float that may be infinite or NaN, written as a string in that case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Value(pub f64);

impl Value {
    pub fn text(self) -> String {
        let v = self.0;
        if v.is_nan() {
            "nan".into()
        } else if v.is_infinite() {
            if v > 0.0 { "inf" } else { "-inf" }.into()
        } else {
            format!("{v:?}")
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.text())
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Growth {
    pub linear: Value,
    pub log10: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    /// `‖b − Ax‖₂ / (‖A‖₂‖x‖₂)` after the first solve.
    pub residual: Value,
    /// The same after refinement; equal to `residual` without it.
    pub final_residual: Value,
    pub iterations: usize,
    pub woodbury_used: bool,
    pub diverged: bool,
    /// `‖x − x_true‖₂ / ‖x_true‖₂`.
    pub forward_error: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub key: RunKey,
    pub matrix: String,
    pub family: String,
    pub seed: Option<u64>,
    pub n: usize,
    pub blocking: String,
    pub num_blocks: usize,
    pub method: Method,
    pub tau_hat: Option<f64>,
    /// The absolute threshold actually applied.
    pub tau: Option<f64>,
    /// Keyed by norm name.
    pub growth: BTreeMap<String, Growth>,
    pub modifications: usize,
    pub solve: Option<SolveSummary>,
    pub checks: Vec<BoundCheck>,
    pub skipped: Vec<Skipped>,
    pub checks_failed: usize,
    pub error: Option<String>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.checks_failed == 0
    }
}

struct Job<'a> {
    key: RunKey,
    inst: &'a Instance,
    blocking: &'a Blocking,
    threshold: Option<Threshold>,
}

/// Runs every `(matrix, blocking, method, threshold)` tuple on `jobs` threads
/// and returns the records in key order.
pub fn run_all(cfg: &ExperimentConfig, instances: &[Instance], jobs: usize) -> Vec<RunRecord> {
    let mut work = Vec::new();
    for inst in instances {
        for (bi, blocking) in inst.blockings.iter().enumerate() {
            for &method in &cfg.methods {
                let key = |t| RunKey {
                    matrix: inst.matrix,
                    draw: inst.draw,
                    blocking: bi,
                    method,
                    threshold: t,
                };
                if method == Method::Beam {
                    for (ti, &t) in cfg.thresholds.iter().enumerate() {
                        work.push(Job { key: key(Some(ti)), inst, blocking, threshold: Some(t) });
                    }
                } else {
                    work.push(Job { key: key(None), inst, blocking, threshold: None });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build();
    let exec = || work.par_iter().map(|j| execute(cfg, j)).collect::<Vec<_>>();
    let mut records = match pool {
        Ok(p) => p.install(exec),
        Err(_) => exec(),
    };
    records.sort_by_key(|r| r.key);
    records
}

/// What a factorization contributes to its record.
struct Outcome {
    growth: BTreeMap<String, Growth>,
    modifications: usize,
    tau: Option<f64>,
    tau_hat: Option<f64>,
    solve: Option<SolveSummary>,
    report: CheckReport,
    errors: Vec<String>,
}

fn execute(cfg: &ExperimentConfig, job: &Job) -> RunRecord {
    let start = Instant::now();
    let a = &job.inst.a;
    let method = job.key.method;
    let seed = job.inst.seed.unwrap_or(0);
    let result = match (method, job.threshold) {
        (Method::Beam, Some(t)) => run_beam(cfg, a, job.blocking, t, seed),
        (Method::BlockLuIdentity, _) => run_block_lu(cfg, a, job.blocking, DiagFactorizer::Identity, seed),
        _ => run_block_lu(cfg, a, job.blocking, DiagFactorizer::PointwiseLu, seed),
    };
    let mut rec = RunRecord {
        schema_version: SCHEMA_VERSION,
        key: job.key,
        matrix: job.inst.label.clone(),
        family: job.inst.family.clone(),
        seed: job.inst.seed,
        n: a.rows(),
        blocking: job.blocking.label(),
        num_blocks: job.blocking.num_blocks(),
        method,
        tau_hat: None,
        tau: None,
        growth: BTreeMap::new(),
        modifications: 0,
        solve: None,
        checks: Vec::new(),
        skipped: Vec::new(),
        checks_failed: 0,
        error: None,
        wall_time_s: 0.0,
    };
    if let Threshold::Relative(t) = job.threshold.unwrap_or(Threshold::Absolute(0.0)) {
        rec.tau_hat = Some(t);
    }
    match result {
        Ok(o) => {
            rec.growth = o.growth;
            rec.modifications = o.modifications;
            rec.tau = o.tau;
            rec.tau_hat = o.tau_hat.or(rec.tau_hat);
            rec.solve = o.solve;
            rec.checks_failed = o.report.failures().count();
            rec.checks = o.report.checks;
            rec.skipped = o.report.skipped;
            if !o.errors.is_empty() {
                rec.error = Some(o.errors.join("; "));
            }
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec.wall_time_s = start.elapsed().as_secs_f64();
    rec
}

fn growth_map(trace: &GrowthTrace) -> BTreeMap<String, Growth> {
    trace
        .kinds
        .iter()
        .map(|kind| {
            let a = trace.initial_norm(kind).unwrap_or(f64::NAN);
            let m = trace.max_norm(kind).unwrap_or(f64::NAN);
            let linear = m / a;
            let log10 = if linear.is_finite() { linear.log10() } else { m.log10() - a.log10() };
            (kind.to_string(), Growth { linear: Value(linear), log10: Value(log10) })
        })
        .collect()
}

/// Right-hand side `A·x_true` with `x_true` drawn from the instance seed.
fn rhs(a: &Matrix, seed: u64) -> blocklu::Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..a.rows()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let b = a.matvec(&x)?;
    Ok((x, b))
}

fn forward_error(x: &[f64], x_true: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(x_true).map(|(a, b)| a - b).collect();
    norm2_vec(&d) / norm2_vec(x_true)
}

fn collect(report: &mut CheckReport, errors: &mut Vec<String>, what: &str, r: blocklu::Result<CheckReport>) {
    match r {
        Ok(r) => report.extend(r),
        Err(e) => errors.push(format!("{what}: {e}")),
    }
}

fn run_block_lu(
    cfg: &ExperimentConfig,
    a: &Matrix,
    blocking: &Blocking,
    diag: DiagFactorizer,
    seed: u64,
) -> blocklu::Result<Outcome> {
    let f: BlockLuFactors = factor_block_lu(a, blocking, diag, &growth_trace_norms(blocking))?;
    let mut report = CheckReport::default();
    let mut errors = Vec::new();
    for g in &cfg.checks {
        match g {
            CheckGroup::Growth => collect(&mut report, &mut errors, "growth", check_growth_bounds(a, blocking, f.trace())),
            CheckGroup::Factor => collect(&mut report, &mut errors, "factor", check_factor_bounds(&f, a)),
            CheckGroup::Interlacing => collect(&mut report, &mut errors, "interlacing", check_interlacing(&f, a)),
            _ => {}
        }
    }

    let solve = (|| -> blocklu::Result<SolveSummary> {
        let (x_true, b) = rhs(a, seed)?;
        let x = f.solve(&b)?;
        let ax = a.matvec(&x)?;
        let r: Vec<f64> = b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect();
        let rel = norm2_vec(&r) / (sigma_max(a)? * norm2_vec(&x));
        Ok(SolveSummary {
            residual: Value(rel),
            final_residual: Value(rel),
            iterations: 0,
            woodbury_used: false,
            diverged: false,
            forward_error: Value(forward_error(&x, &x_true)),
        })
    })();
    let solve = solve.map_err(|e| errors.push(format!("solve: {e}"))).ok();

    Ok(Outcome {
        growth: growth_map(f.trace()),
        modifications: 0,
        tau: None,
        tau_hat: None,
        solve,
        report,
        errors,
    })
}

fn run_beam(
    cfg: &ExperimentConfig,
    a: &Matrix,
    blocking: &Blocking,
    t: Threshold,
    seed: u64,
) -> blocklu::Result<Outcome> {
    let opts = BeamOptions {
        threshold: t,
        woodbury: cfg.woodbury,
        trace_norms: growth_trace_norms(blocking),
    };
    let f: BeamFactorization = beam_factor_with(a, blocking, &opts)?;
    let mut report = CheckReport::default();
    let mut errors = Vec::new();
    for g in &cfg.checks {
        match g {
            CheckGroup::Growth => collect(&mut report, &mut errors, "growth", check_beam_growth(&f, a)),
            CheckGroup::Factor => collect(&mut report, &mut errors, "factor", check_factor_bounds(&f, a)),
            CheckGroup::Interlacing => collect(&mut report, &mut errors, "interlacing", check_interlacing(&f, a)),
            CheckGroup::Modfree => collect(&mut report, &mut errors, "modfree", modfree_check(&f, a, blocking)),
            CheckGroup::Psi => collect(&mut report, &mut errors, "psi", psi_and_capacitance(&f, a).map(|(_, r)| r)),
            CheckGroup::Determinant => collect(&mut report, &mut errors, "determinant", determinant_bounds(&f, a)),
        }
    }

    let solve = (|| -> blocklu::Result<SolveSummary> {
        let (x_true, b) = rhs(a, seed)?;
        let s = f.solve(a, &b, cfg.refinement)?;
        Ok(SolveSummary {
            residual: Value(s.residuals[0]),
            final_residual: Value(s.final_residual()),
            iterations: s.iterations,
            woodbury_used: s.woodbury_used,
            diverged: s.diverged,
            forward_error: Value(forward_error(&s.x, &x_true)),
        })
    })();
    let solve = solve.map_err(|e| errors.push(format!("solve: {e}"))).ok();

    Ok(Outcome {
        growth: growth_map(f.factors().trace()),
        modifications: f.mods().count(),
        tau: Some(f.tau()),
        tau_hat: Some(f.tau_hat()),
        solve,
        report,
        errors,
    })
}

/// A threshold at or below the best dominance bound must leave `A` unmodified.
fn modfree_check(f: &BeamFactorization, a: &Matrix, blocking: &Blocking) -> blocklu::Result<CheckReport> {
    let mut r = CheckReport::default();
    let bound = modification_free_bound(&dominance(a, blocking, None)?, a)?.best();
    match bound {
        Some(b) if f.tau() <= b => r.push(BoundCheck::close("modfree_count", f.mods().count() as f64, 0.0, 0.0)),
        Some(_) => r.skip("modfree_count", "tau exceeds the dominance threshold"),
        None => r.skip("modfree_count", "no dominance property detected"),
    }
    Ok(r)
}
