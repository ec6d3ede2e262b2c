//! `blocklu`: run block LU / BEAM experiments from a config file, or run one
//! of the built-in verification suites.
//!
//! Exit status: 0 when every check passes, 2 when a check fails or a run hits
//! a numerical failure, 1 on usage, config or I/O errors.

mod config;
mod report;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::Format;

#[derive(Parser, Debug)]
#[command(name = "blocklu", version, about = "Block LU and BEAM stability experiments")]
struct Cli {
    /// Report directory; overrides `output.dir` in the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Report files to write; overrides `output.format` in the config.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for `run`; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Print only errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute every run described by a config file.
    Run { config: PathBuf },
    /// Run a named verification suite.
    Verify { suite: String },
}

const USAGE: u8 = 1;
const CHECK_FAILED: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match &cli.command {
        Command::Run { config } => run_config(&cli, config),
        Command::Verify { suite } => run_verify(&cli, suite),
    }
}

fn run_config(cli: &Cli, path: &std::path::Path) -> ExitCode {
    let start = Instant::now();
    let cfg = match config::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE);
        }
    };
    let instances = match run::instantiate(&cfg) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(USAGE);
        }
    };
    let records = run::run_all(&cfg, &instances, cli.jobs);

    let dir = cli
        .output
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("blocklu-report"));
    let format = cli.format.or(cfg.output.format).unwrap_or_default();
    let written = match report::write_all(&dir, format.json(), format.csv(), &cfg, &records) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE);
        }
    };

    let summary = report::Summary::of(&records);
    for r in records.iter().filter(|r| !r.ok()) {
        let first = r.checks.iter().find(|c| !c.satisfied);
        eprintln!(
            "FAIL {} {} {}{}: {}",
            r.matrix,
            r.blocking,
            r.method.label(),
            r.tau_hat.map(|t| format!(" tau_hat={t:e}")).unwrap_or_default(),
            match (&r.error, first) {
                (Some(e), _) => e.clone(),
                (None, Some(c)) => format!("{} measured {:e} bound {:e}", c.name, c.measured, c.bound),
                (None, None) => String::new(),
            }
        );
    }
    if !cli.quiet {
        println!(
            "{} runs, {} checks, {} failed, {} runs with errors in {:.2} s",
            summary.runs,
            summary.checks,
            summary.checks_failed,
            summary.runs_with_errors,
            start.elapsed().as_secs_f64()
        );
        for p in written {
            println!("wrote {}", p.display());
        }
    }
    if summary.checks_failed == 0 && summary.runs_with_errors == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(CHECK_FAILED)
    }
}

fn run_verify(cli: &Cli, suite: &str) -> ExitCode {
    if !verify::SUITES.contains(&suite) {
        eprintln!(
            "error: unknown suite `{suite}`; available suites: {}",
            verify::SUITES.join(", ")
        );
        return ExitCode::from(USAGE);
    }
    let start = Instant::now();
    let result = verify::run_suite(suite).expect("suite listed in SUITES");
    let secs = start.elapsed().as_secs_f64();
    let pass = result.passed();
    if !cli.quiet || !pass {
        print!("{}", result.table(suite));
    }
    let status = if pass { "PASS" } else { "FAIL" };
    println!("{status} {suite}: {} checks, {} errors, {secs:.2} s", result.checks(), result.errors.len());
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(CHECK_FAILED)
    }
}
