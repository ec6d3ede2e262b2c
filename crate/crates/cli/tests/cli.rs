use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;
use tempfile::TempDir;

fn blocklu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blocklu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("experiment.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run(dir: &TempDir, config: &str, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = write_config(dir.path(), config);
    let out = dir.path().join("out");
    let mut args = vec!["run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (blocklu(&args), out)
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|r| r.unwrap()).collect()
}

fn col(header: &csv::StringRecord, name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zielke_run_reports_exact_growth() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(
        &dir,
        r#"
        methods = ["beam"]
        taus = [0.25]
        blockings = [2]
        [[matrices]]
        family = "zielke"
        n = 8
        "#,
        &["--quiet"],
    );
    assert!(o.status.success(), "{}", stderr(&o));

    let csv_path = out.join("summary.csv");
    let header = csv::Reader::from_path(&csv_path).unwrap().headers().unwrap().clone();
    let rows = csv_rows(&csv_path);
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    let growth: f64 = row[col(&header, "growth_max")].parse().unwrap();
    assert!((growth - 64.0).abs() <= 64.0 * 1e-12, "{growth}");
    // one modification in each of the first three blocks, none in the last
    assert_eq!(&row[col(&header, "modifications")], "3");
    assert_eq!(&row[col(&header, "tau")], "0.25");
    let log10: f64 = row[col(&header, "log10_growth_max")].parse().unwrap();
    assert!((log10 - 64f64.log10()).abs() < 1e-12);
    assert_eq!(&row[col(&header, "checks_failed")], "0");
}

#[test]
fn identity_matrix_has_no_growth() {
    let dir = TempDir::new().unwrap();
    let mut mtx = String::from("%%MatrixMarket matrix coordinate real general\n6 6 6\n");
    for i in 1..=6 {
        mtx.push_str(&format!("{i} {i} 1.0\n"));
    }
    fs::write(dir.path().join("eye.mtx"), mtx).unwrap();
    let (o, out) = run(
        &dir,
        r#"
        methods = ["block_lu_identity", "block_lu_pointwise", "beam"]
        tau_hats = [0.5]
        blockings = [1, 2, [1, 4, 7]]
        [[matrices]]
        path = "eye.mtx"
        "#,
        &["--format", "json", "--quiet"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!out.join("summary.csv").exists());

    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 9);
    for r in runs {
        assert_eq!(r["modifications"], 0);
        for (norm, g) in r["growth"].as_object().unwrap() {
            assert_eq!(g["linear"].as_f64(), Some(1.0), "{norm}");
        }
    }
}

#[test]
fn missing_matrix_file_names_the_path() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run(
        &dir,
        r#"
        methods = ["block_lu_identity"]
        blockings = [2]
        [[matrices]]
        path = "no_such_matrix.mtx"
        "#,
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no_such_matrix.mtx"), "{}", stderr(&o));
}

#[test]
fn config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run(
        &dir,
        r#"
        methods = ["beam"]
        blockings = [2]
        [[matrices]]
        family = "zielke"
        n = 8
        "#,
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tau_hats"), "{}", stderr(&o));

    let (o, _) = run(
        &dir,
        r#"
        methods = ["block_lu_identity"]
        blockings = [3]
        [[matrices]]
        family = "zielke"
        n = 8
        [[matrices]]
        family = "turing_t"
        n = 1
        "#,
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("matrices[1]"), "{}", stderr(&o));

    let o = blocklu(&["run", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.toml"));
}

#[test]
fn numerical_failure_is_recorded_and_the_run_continues() {
    let dir = TempDir::new().unwrap();
    // the leading 1x1 block of the swap matrix is zero
    let (o, out) = run(
        &dir,
        r#"
        methods = ["block_lu_pointwise", "beam"]
        tau_hats = [0.1]
        blockings = [1]
        checks = ["growth"]
        [[matrices]]
        family = "leading_swap"
        n = 4
        "#,
        &["--quiet"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs[0]["error"].is_string());
    assert!(runs[1]["error"].is_null());
    // the raised pivot makes the next one large, so only the first block changes
    assert_eq!(runs[1]["modifications"], 1);
}

fn strip_wall_time(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("wall_time_s");
            m.values_mut().for_each(strip_wall_time);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_wall_time),
        _ => {}
    }
}

const RANDOM: &str = r#"
methods = ["block_lu_identity", "beam"]
tau_hats = [1e-3, 0.2]
blockings = [3, [1, 2, 6, 10, 13]]
seeds = [4, 5]
[refinement]
max_iters = 5
target = 1e-14
[[matrices]]
family = "random_cond"
n = 12
cond = 1e4
[[matrices]]
family = "block_diag_dom_cols"
n = 12
blocking = 3
delta = 0.3
"#;

#[test]
fn reports_are_deterministic_across_thread_counts() {
    let reports: Vec<Value> = ["1", "4"]
        .iter()
        .map(|jobs| {
            let dir = TempDir::new().unwrap();
            let (o, out) = run(&dir, RANDOM, &["--jobs", jobs, "--quiet"]);
            assert!(o.status.code().is_some_and(|c| c != 1), "{}", stderr(&o));
            let mut v: Value =
                serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
            strip_wall_time(&mut v);
            v
        })
        .collect();
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0]["runs"].as_array().unwrap().len(), 2 * 2 * 2 * 3);
}

#[test]
fn csv_agrees_with_json() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, RANDOM, &["--quiet"]);
    assert!(o.status.code().is_some_and(|c| c != 1), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let runs = report["runs"].as_array().unwrap();
    let csv_path = out.join("summary.csv");
    let header = csv::Reader::from_path(&csv_path).unwrap().headers().unwrap().clone();
    let rows = csv_rows(&csv_path);
    assert_eq!(rows.len(), runs.len());
    let num = |s: &str| s.parse::<f64>().ok();
    for (row, r) in rows.iter().zip(runs) {
        assert_eq!(&row[col(&header, "matrix")], r["matrix"].as_str().unwrap());
        assert_eq!(&row[col(&header, "blocking")], r["blocking"].as_str().unwrap());
        assert_eq!(num(&row[col(&header, "tau")]), r["tau"].as_f64());
        assert_eq!(num(&row[col(&header, "tau_hat")]), r["tau_hat"].as_f64());
        assert_eq!(row[col(&header, "modifications")].parse::<u64>().ok(), r["modifications"].as_u64());
        for k in ["max", "1", "inf", "fro", "2"] {
            assert_eq!(num(&row[col(&header, &format!("growth_{k}"))]), r["growth"][k]["linear"].as_f64());
        }
        assert_eq!(num(&row[col(&header, "residual")]), r["solve"]["residual"].as_f64());
        assert_eq!(
            row[col(&header, "checks")].parse::<usize>().ok(),
            r["checks"].as_array().map(|c| c.len())
        );
    }
}

#[test]
fn verify_zielke_passes_quickly() {
    let t = Instant::now();
    let o = blocklu(&["verify", "zielke"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(t.elapsed().as_secs_f64() < 5.0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS zielke"));
}

#[test]
fn verify_norms_passes() {
    let o = blocklu(&["verify", "norms", "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn unknown_suite_lists_the_available_ones() {
    let o = blocklu(&["verify", "nosuch"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    for s in ["norms", "growth", "beam", "zielke", "modfree", "psi"] {
        assert!(e.contains(s), "{e}");
    }
}

#[test]
fn bad_usage_exits_one() {
    assert_eq!(blocklu(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(blocklu(&["run"]).status.code(), Some(1));
    assert_eq!(blocklu(&["--help"]).status.code(), Some(0));
}
