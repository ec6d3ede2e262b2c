//! Experiment configuration, read from a TOML file.
//!
//! ```toml
//! methods = ["block_lu_identity", "beam"]
//! tau_hats = [1e-3, 1e-1]     # relative thresholds, tau = tau_hat * ||A||_2
//! taus = [0.25]               # absolute thresholds
//! woodbury = true
//! checks = ["growth", "factor", "interlacing", "modfree", "psi", "determinant"]
//! seeds = [1, 2, 3]           # re-draws every random family once per seed
//! blockings = [2, [1, 3, 6]]  # uniform size, or 1-based block starts ending at n+1
//!
//! [[matrices]]
//! family = "zielke"
//! n = 8
//!
//! [[matrices]]
//! path = "data/west0067.mtx"  # relative to the config file
//!
//! [refinement]
//! max_iters = 10
//! target = 1e-13
//!
//! [output]
//! dir = "report"
//! format = "both"             # json | csv | both
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use blocklu::beam::{Refinement, Threshold};
use blocklu::gallery::{BlockLayout, MatrixSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BlockLuIdentity,
    BlockLuPointwise,
    Beam,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::BlockLuIdentity => "block_lu_identity",
            Method::BlockLuPointwise => "block_lu_pointwise",
            Method::Beam => "beam",
        }
    }
}

/// Groups of bound checks evaluated on every run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckGroup {
    Growth,
    Factor,
    Interlacing,
    /// BEAM only: no modifications below the dominance threshold.
    Modfree,
    /// BEAM only: `ψ` and capacitance conditioning.
    Psi,
    /// BEAM only: log-scale inverse and condition bounds.
    Determinant,
}

impl CheckGroup {
    pub const ALL: [CheckGroup; 6] = [
        CheckGroup::Growth,
        CheckGroup::Factor,
        CheckGroup::Interlacing,
        CheckGroup::Modfree,
        CheckGroup::Psi,
        CheckGroup::Determinant,
    ];
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Generated(MatrixSpec),
    File { path: PathBuf },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RefinementConfig {
    max_iters: usize,
    target: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    matrices: Vec<toml::Table>,
    blockings: Vec<BlockLayout>,
    methods: Vec<Method>,
    #[serde(default)]
    tau_hats: Vec<f64>,
    #[serde(default)]
    taus: Vec<f64>,
    #[serde(default = "default_true")]
    woodbury: bool,
    refinement: Option<RefinementConfig>,
    checks: Option<Vec<CheckGroup>>,
    #[serde(default)]
    seeds: Vec<u64>,
    #[serde(default)]
    output: OutputConfig,
}

fn default_true() -> bool {
    true
}

/// A validated experiment description.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub matrices: Vec<MatrixSource>,
    pub blockings: Vec<BlockLayout>,
    pub methods: Vec<Method>,
    /// Relative thresholds first, then absolute ones.
    pub thresholds: Vec<Threshold>,
    pub woodbury: bool,
    pub refinement: Option<Refinement>,
    pub checks: Vec<CheckGroup>,
    pub seeds: Vec<u64>,
    pub output: OutputConfig,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// Parses and validates a config; relative matrix paths resolve against `base`.
pub fn parse(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;

    if raw.matrices.is_empty() {
        return err("matrices: at least one entry is required");
    }
    let matrices = raw
        .matrices
        .into_iter()
        .enumerate()
        .map(|(i, t)| matrix_source(i, t, base))
        .collect::<Result<Vec<_>, _>>()?;

    if raw.blockings.is_empty() {
        return err("blockings: at least one entry is required");
    }
    for (i, b) in raw.blockings.iter().enumerate() {
        match b {
            BlockLayout::Size(0) => return err(format!("blockings[{i}]: block size must be positive")),
            BlockLayout::Starts(s) if s.len() < 2 => {
                return err(format!("blockings[{i}]: starts need at least two entries"))
            }
            _ => {}
        }
    }

    if raw.methods.is_empty() {
        return err("methods: at least one method is required");
    }
    let mut methods = raw.methods;
    methods.sort();
    methods.dedup();

    let beam = methods.contains(&Method::Beam);
    if beam && raw.tau_hats.is_empty() && raw.taus.is_empty() {
        return err("tau_hats: required when methods includes beam (or give absolute taus)");
    }
    if !beam && !(raw.tau_hats.is_empty() && raw.taus.is_empty()) {
        let field = if raw.tau_hats.is_empty() { "taus" } else { "tau_hats" };
        return err(format!("{field}: only used by the beam method, which is not selected"));
    }
    let mut thresholds = Vec::new();
    for (i, &t) in raw.tau_hats.iter().enumerate() {
        if !(t > 0.0 && t < 1.0) {
            return err(format!("tau_hats[{i}]: must lie in (0, 1), got {t}"));
        }
        thresholds.push(Threshold::Relative(t));
    }
    for (i, &t) in raw.taus.iter().enumerate() {
        if !(t > 0.0 && t.is_finite()) {
            return err(format!("taus[{i}]: must be positive and finite, got {t}"));
        }
        thresholds.push(Threshold::Absolute(t));
    }

    let refinement = match raw.refinement {
        Some(r) => {
            if !(r.target > 0.0 && r.target.is_finite()) {
                return err(format!("refinement.target: must be positive, got {}", r.target));
            }
            Some(Refinement {
                max_iters: r.max_iters,
                target: r.target,
            })
        }
        None => None,
    };

    let mut checks = raw.checks.unwrap_or_else(|| CheckGroup::ALL.to_vec());
    checks.sort();
    checks.dedup();

    let mut seeds = raw.seeds;
    seeds.dedup();

    Ok(ExperimentConfig {
        matrices,
        blockings: raw.blockings,
        methods,
        thresholds,
        woodbury: raw.woodbury,
        refinement,
        checks,
        seeds,
        output: raw.output,
    })
}

fn matrix_source(i: usize, mut t: toml::Table, base: &Path) -> Result<MatrixSource, ConfigError> {
    if let Some(p) = t.get("path") {
        if t.len() > 1 {
            return err(format!("matrices[{i}]: a file entry takes only `path`"));
        }
        let Some(p) = p.as_str() else {
            return err(format!("matrices[{i}].path: expected a string"));
        };
        return Ok(MatrixSource::File { path: base.join(p) });
    }
    if !t.contains_key("family") {
        return err(format!("matrices[{i}]: needs either `family` or `path`"));
    }
    if !t.contains_key("seed") {
        t.insert("seed".into(), toml::Value::Integer(0));
    }
    MatrixSpec::deserialize(toml::Value::Table(t))
        .map(MatrixSource::Generated)
        .map_err(|e| ConfigError(format!("matrices[{i}]: {}", e.message())))
}
