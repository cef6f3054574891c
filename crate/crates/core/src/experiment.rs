//! Declarative experiments: a TOML config names instance files, strategies,
//! parameter grids, prediction-error grids and seeds. Running one writes
//! `ratios.csv`, `boxstats.csv`, `sweep.csv` and `manifest.json`.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::bound::AGGREGATE_RECOMPUTE_INTERVAL;
use crate::engine::LOAD_RECOMPUTE_INTERVAL;
use crate::ingest::{multiset_digest, read_instance_file, IngestError};
use crate::predictor::{ErrorKind, RNG_NAME};
use crate::reporting::{
    error_sweep, write_boxstats_csv, write_ratios_csv, write_sweep_csv, SweepError, SweepResult, QUARTILE_METHOD,
    WHISKER_IQR,
};
use crate::strategy::spec::{SpecError, StrategySpec};
use crate::types::{Instance, CAPACITY_EPS};

/// Tie rules baked into the engine and strategies, echoed in every manifest.
pub const TIE_RULES: &[&str] = &[
    "events at equal times: departures before arrivals; within a kind, ascending item id",
    "first-fit family: earliest-opened bin wins",
    "best-fit: smallest residual norm, ties to the earliest-opened bin",
    "nrt: smallest distance, then earlier closing time, then earliest-opened bin",
    "greedy: latest closing time, ties to the earliest-opened bin",
    "indicated closing time: max(latest hinted departure, now)",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// Interval widths for bare `classify-departure`, e.g. `"0.25d"`.
    pub rho: Vec<String>,
    /// Range bases for bare `classify-duration`.
    pub beta: Vec<f64>,
    /// Norms for bare `best-fit`.
    pub norms: Vec<String>,
}

/// Log-normal σ values used when a config leaves `lognormal` out.
pub const DEFAULT_SIGMA_GRID: &[f64] = &[0.0, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0];
/// Uniform ε values used when a config leaves `uniform` out.
pub const DEFAULT_EPSILON_GRID: &[f64] = &[
    1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1e3, 1e4, 1e5, 1e6,
];

/// A missing list falls back to its default grid; an explicit `[]` turns
/// that error family off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorGrid {
    pub lognormal: Vec<f64>,
    pub uniform: Vec<f64>,
}

impl Default for ErrorGrid {
    fn default() -> Self {
        ErrorGrid {
            lognormal: DEFAULT_SIGMA_GRID.to_vec(),
            uniform: DEFAULT_EPSILON_GRID.to_vec(),
        }
    }
}

impl ErrorGrid {
    pub fn settings(&self) -> Result<Vec<ErrorKind>, String> {
        let mut out = Vec::new();
        for &sigma in &self.lognormal {
            out.push(format!("lognormal:{sigma}").parse()?);
        }
        for &epsilon in &self.uniform {
            out.push(format!("uniform:{epsilon}").parse()?);
        }
        Ok(out)
    }
}

/// Prediction seeds: a count (`seed_base, seed_base + 1, …`) or an explicit
/// list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Instance files, or directories whose `*.csv` files are all read.
    /// Relative paths resolve against the config file's directory.
    pub instances: Vec<PathBuf>,
    pub strategies: Vec<String>,
    pub grids: Grids,
    pub errors: ErrorGrid,
    pub seeds: Seeds,
    pub seed_base: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instances: Vec::new(),
            strategies: vec!["first-fit".into()],
            grids: Grids::default(),
            errors: ErrorGrid::default(),
            seeds: Seeds::Count(5),
            seed_base: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Strategy(#[from] SpecError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl ExperimentConfig {
    /// Reads a TOML config, or the config echoed inside a `manifest.json`.
    pub fn load(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let config_err = |message: String| ExperimentError::Config {
            path: path.display().to_string(),
            message,
        };
        let mut config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            let manifest: Manifest = serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?;
            manifest.config
        } else {
            toml::from_str(&text).map_err(|e| config_err(e.to_string()))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in &mut config.instances {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if let Ok(abs) = p.canonicalize() {
                *p = abs;
            }
        }
        Ok(config)
    }

    /// Strategy list with bare parameterized names expanded over the grids.
    pub fn expand_strategies(&self) -> Result<Vec<StrategySpec>, SpecError> {
        let mut out: Vec<StrategySpec> = Vec::new();
        for name in &self.strategies {
            let name = name.trim();
            let values: Option<Vec<String>> = match name {
                "classify-departure" if !self.grids.rho.is_empty() => Some(self.grids.rho.clone()),
                "classify-duration" if !self.grids.beta.is_empty() => {
                    Some(self.grids.beta.iter().map(|b| b.to_string()).collect())
                }
                "best-fit" if !self.grids.norms.is_empty() => Some(self.grids.norms.clone()),
                _ => None,
            };
            match values {
                Some(values) => {
                    for v in values {
                        out.push(format!("{name}:{v}").parse()?);
                    }
                }
                None => out.push(name.parse()?),
            }
        }
        let mut seen = std::collections::HashSet::new();
        out.retain(|s| seen.insert(s.to_string()));
        Ok(out)
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Seeds::Count(n) => (0..*n).map(|k| self.seed_base + k).collect(),
            Seeds::List(list) => list.clone(),
        }
    }

    /// Instance files in a stable order.
    pub fn instance_files(&self) -> Result<Vec<PathBuf>, ExperimentError> {
        let mut files = Vec::new();
        for p in &self.instances {
            if p.is_dir() {
                let mut inner: Vec<PathBuf> = fs::read_dir(p)
                    .map_err(io_err(p))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|f| f.extension().is_some_and(|e| e == "csv"))
                    .collect();
                inner.sort();
                files.extend(inner);
            } else if p.is_file() {
                files.push(p.clone());
            } else {
                return Err(ExperimentError::Config {
                    path: p.display().to_string(),
                    message: "instance file not found".into(),
                });
            }
        }
        if files.is_empty() {
            return Err(ExperimentError::Config {
                path: "instances".into(),
                message: "no instance files given".into(),
            });
        }
        Ok(files)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub name: String,
    pub file: String,
    pub items: usize,
    pub d: usize,
    pub lower_bound_us: i64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub capacity_eps: f64,
    pub load_recompute_interval: u32,
    pub aggregate_recompute_interval: usize,
    pub whisker_iqr: f64,
    pub quartile_method: String,
    pub rng: String,
    pub tie_rules: Vec<String>,
    pub ratio_digits: u32,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            capacity_eps: CAPACITY_EPS,
            load_recompute_interval: LOAD_RECOMPUTE_INTERVAL,
            aggregate_recompute_interval: AGGREGATE_RECOMPUTE_INTERVAL,
            whisker_iqr: WHISKER_IQR,
            quartile_method: QUARTILE_METHOD.into(),
            rng: RNG_NAME.into(),
            tie_rules: TIE_RULES.iter().map(|s| s.to_string()).collect(),
            ratio_digits: 6,
        }
    }
}

/// Everything needed to rerun an experiment. Carries no timestamps, so
/// identical inputs give a byte-identical manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub strategies: Vec<String>,
    pub error_settings: Vec<String>,
    pub seeds: Vec<u64>,
    pub instances: Vec<InstanceRecord>,
    pub constants: Constants,
    pub anyfit_violations: u64,
}

/// Outcome of [`run_experiment`].
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub manifest: Manifest,
    pub result: SweepResult,
}

impl ExperimentOutcome {
    /// True when every run finished and every Any-Fit audit came back clean.
    pub fn audits_passed(&self) -> bool {
        self.manifest.anyfit_violations == 0
    }
}

pub fn load_instances(files: &[PathBuf]) -> Result<Vec<(PathBuf, Instance)>, ExperimentError> {
    use rayon::prelude::*;
    files
        .par_iter()
        .map(|f| Ok((f.clone(), read_instance_file(f)?)))
        .collect()
}

/// Runs the full matrix and writes the CSVs and manifest into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome, ExperimentError> {
    let strategies = config.expand_strategies()?;
    let grid = config.errors.settings().map_err(|message| ExperimentError::Config {
        path: "errors".into(),
        message,
    })?;
    let seeds = config.seed_list();
    let loaded = load_instances(&config.instance_files()?)?;
    let records = loaded
        .iter()
        .map(|(f, inst)| InstanceRecord {
            name: inst.name().to_string(),
            file: f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            items: inst.len(),
            d: inst.d(),
            lower_bound_us: inst.lower_bound(),
            sha256: multiset_digest(inst),
        })
        .collect();
    let instances: Vec<Instance> = loaded.into_iter().map(|(_, i)| i).collect();
    let result = error_sweep(&instances, &strategies, &grid, &seeds)?;
    let violations = result.anyfit_failures().iter().map(|r| r.anyfit_violations).sum();

    let manifest = Manifest {
        tool: "dvbp".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        strategies: strategies.iter().map(|s| s.to_string()).collect(),
        error_settings: grid.iter().map(|k| k.to_string()).collect(),
        seeds,
        instances: records,
        constants: Constants::default(),
        anyfit_violations: violations,
    };
    write_outputs(out_dir, &manifest, &result)?;
    Ok(ExperimentOutcome { manifest, result })
}

fn write_outputs(out_dir: &Path, manifest: &Manifest, result: &SweepResult) -> Result<(), ExperimentError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let out_err = |path: &Path, message: String| ExperimentError::Output {
        path: path.display().to_string(),
        message,
    };
    let create = |name: &str| {
        let path = out_dir.join(name);
        File::create(&path).map(|f| (path.clone(), f)).map_err(io_err(&out_dir.join(name)))
    };
    let (p, f) = create("ratios.csv")?;
    write_ratios_csv(f, &result.rows).map_err(|e| out_err(&p, e.to_string()))?;
    let (p, f) = create("boxstats.csv")?;
    write_boxstats_csv(f, &result.boxes).map_err(|e| out_err(&p, e.to_string()))?;
    let (p, f) = create("sweep.csv")?;
    write_sweep_csv(f, &result.cells).map_err(|e| out_err(&p, e.to_string()))?;
    let path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| out_err(&path, e.to_string()))?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(())
}
