//! JSON and CSV report files.
//!
//! The CSV summary has one row per run and this fixed header:
//!
//! ```text
//! schema_version,matrix,family,seed,n,blocking,num_blocks,method,tau_hat,tau,
//! growth_max,growth_1,growth_inf,growth_fro,growth_2,
//! log10_growth_max,log10_growth_1,log10_growth_inf,log10_growth_fro,log10_growth_2,
//! modifications,residual,final_residual,refine_iters,forward_error,
//! checks,checks_failed,skipped,error,wall_time_s
//! ```
//!
//! Empty cells mean "not applicable". Non-finite growth values are written as
//! `inf` or `nan` in both files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::run::{RunRecord, Value, SCHEMA_VERSION};

pub const JSON_FILE: &str = "report.json";
pub const CSV_FILE: &str = "summary.csv";

const GROWTH_NORMS: [&str; 5] = ["max", "1", "inf", "fro", "2"];

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "schema_version",
        "matrix",
        "family",
        "seed",
        "n",
        "blocking",
        "num_blocks",
        "method",
        "tau_hat",
        "tau",
    ]
    .map(String::from)
    .to_vec();
    h.extend(GROWTH_NORMS.iter().map(|k| format!("growth_{k}")));
    h.extend(GROWTH_NORMS.iter().map(|k| format!("log10_growth_{k}")));
    h.extend(
        [
            "modifications",
            "residual",
            "final_residual",
            "refine_iters",
            "forward_error",
            "checks",
            "checks_failed",
            "skipped",
            "error",
            "wall_time_s",
        ]
        .map(String::from),
    );
    h
}

#[derive(Serialize)]
pub struct Summary {
    pub runs: usize,
    pub checks: usize,
    pub checks_failed: usize,
    pub runs_with_errors: usize,
}

impl Summary {
    pub fn of(records: &[RunRecord]) -> Self {
        Self {
            runs: records.len(),
            checks: records.iter().map(|r| r.checks.len()).sum(),
            checks_failed: records.iter().map(|r| r.checks_failed).sum(),
            runs_with_errors: records.iter().filter(|r| r.error.is_some()).count(),
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    summary: Summary,
    runs: &'a [RunRecord],
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn float(v: Option<f64>) -> String {
    v.map(|v| Value(v).text()).unwrap_or_default()
}

fn csv_row(r: &RunRecord) -> Vec<String> {
    let mut row = vec![
        r.schema_version.to_string(),
        r.matrix.clone(),
        r.family.clone(),
        opt(r.seed),
        r.n.to_string(),
        r.blocking.clone(),
        r.num_blocks.to_string(),
        r.method.label().to_string(),
        float(r.tau_hat),
        float(r.tau),
    ];
    row.extend(GROWTH_NORMS.iter().map(|k| r.growth.get(*k).map(|g| g.linear.text()).unwrap_or_default()));
    row.extend(GROWTH_NORMS.iter().map(|k| r.growth.get(*k).map(|g| g.log10.text()).unwrap_or_default()));
    let s = r.solve.as_ref();
    row.extend([
        r.modifications.to_string(),
        s.map(|s| s.residual.text()).unwrap_or_default(),
        s.map(|s| s.final_residual.text()).unwrap_or_default(),
        opt(s.map(|s| s.iterations)),
        s.map(|s| s.forward_error.text()).unwrap_or_default(),
        r.checks.len().to_string(),
        r.checks_failed.to_string(),
        r.skipped.len().to_string(),
        r.error.clone().unwrap_or_default(),
        format!("{:?}", r.wall_time_s),
    ]);
    row
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> io::Error {
    io::Error::other(format!("{}: {e}", path.display()))
}

pub fn write_json(path: &Path, cfg: &ExperimentConfig, records: &[RunRecord]) -> io::Result<()> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        config: cfg,
        summary: Summary::of(records),
        runs: records,
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_csv(path: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(csv_header()).map_err(|e| io_err(path, e))?;
    for r in records {
        w.write_record(csv_row(r)).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes the selected files into `dir`, creating it, and returns their paths.
pub fn write_all(
    dir: &Path,
    json: bool,
    csv: bool,
    cfg: &ExperimentConfig,
    records: &[RunRecord],
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    if json {
        let p = dir.join(JSON_FILE);
        write_json(&p, cfg, records)?;
        written.push(p);
    }
    if csv {
        let p = dir.join(CSV_FILE);
        write_csv(&p, records)?;
        written.push(p);
    }
    Ok(written)
}
