//! Config-driven experiment runner.
//!
//! A run reads one [`ExperimentConfig`], executes the named experiment and
//! writes one CSV per table (`<table>.csv`, first column the config hash,
//! rows sorted by key) plus `manifest.json`. Per-task seeds come from the
//! root seed through [`crate::seeds`], so output is independent of thread
//! count. Timestamps appear only in the manifest.

mod config;
mod experiments;
mod fit;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub use config::{Experiment, ExperimentConfig, TimeConfig, Tolerances};
pub use experiments::{
    duality_pair, family_tree, identity_max_ratio, lp_pair, random_gaussian_field, run_experiment, target_delta, ExperimentOutput,
    RowFailure, Table, DEFAULT_DELTAS, DEFAULT_EPS,
};
pub use fit::{fit_constant, FitResult};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Failure of a run, with the process exit code it maps to.
#[derive(Debug)]
pub struct RunError {
    pub exit_code: i32,
    pub message: String,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn config(message: impl Into<String>) -> Self {
        RunError {
            exit_code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        RunError {
            exit_code: EXIT_NUMERIC,
            message: message.into(),
        }
    }

    fn from_failure(f: &RowFailure) -> Self {
        match &f.error {
            Error::Config(m) => RunError::config(m.clone()),
            e => RunError::numeric(format!("{}: {e}", f.row)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub row: String,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub seed_scheme: String,
    pub version: String,
    pub started_unix: u64,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub headline: BTreeMap<String, f64>,
    pub fits: BTreeMap<String, FitResult>,
    pub failure: Option<Failure>,
}

/// What a successful run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub outputs: Vec<PathBuf>,
}

fn io_err(path: &Path, e: std::io::Error) -> RunError {
    RunError::numeric(format!("writing {}: {e}", path.display()))
}

/// Validates the configuration and runs the experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RowFailure> {
    cfg.validate().map_err(|error| RowFailure {
        row: "config".into(),
        error,
    })?;
    run_experiment(cfg)
}

/// Runs `cfg` and writes its artifacts into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary, RunError> {
    cfg.validate().map_err(|e| RunError::config(e.to_string()))?;
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let hash = cfg.hash();
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let result = run_experiment(cfg);
    let mut manifest = Manifest {
        experiment: cfg.experiment.name().into(),
        config_hash: hash.clone(),
        config: cfg.clone(),
        seed: cfg.seed,
        seed_scheme: "task seed = derive_seed2(root, stream, index); derive_seed(r, k) = splitmix64^2(r xor k*0x9E3779B97F4A7C15)"
            .into(),
        version: env!("CARGO_PKG_VERSION").into(),
        started_unix,
        wall_time_seconds: 0.0,
        outputs: Vec::new(),
        headline: BTreeMap::new(),
        fits: BTreeMap::new(),
        failure: None,
    };
    let manifest_path = out_dir.join("manifest.json");
    let write_manifest = |m: &Manifest| -> Result<(), RunError> {
        let text = serde_json::to_string_pretty(m).expect("manifest serializes");
        fs::write(&manifest_path, text).map_err(|e| io_err(&manifest_path, e))
    };
    let output = match result {
        Ok(o) => o,
        Err(f) => {
            manifest.failure = Some(Failure {
                row: f.row.clone(),
                error: f.error.to_string(),
            });
            manifest.wall_time_seconds = started.elapsed().as_secs_f64();
            write_manifest(&manifest)?;
            return Err(RunError::from_failure(&f));
        }
    };
    let mut outputs = Vec::new();
    for table in &output.tables {
        let path = out_dir.join(format!("{}.csv", table.name));
        fs::write(&path, table.to_csv(&hash)).map_err(|e| io_err(&path, e))?;
        manifest.outputs.push(format!("{}.csv", table.name));
        outputs.push(path);
    }
    manifest.headline = output.headline;
    manifest.fits = output.fits;
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    write_manifest(&manifest)?;
    outputs.push(manifest_path.clone());
    Ok(RunSummary { manifest, outputs })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub base: BTreeMap<String, f64>,
    pub refined: BTreeMap<String, f64>,
    /// Relative drift `|refined - base| / max(|base|, 1e-300)` per headline key
    /// present in both runs.
    pub drift: BTreeMap<String, f64>,
    pub max_drift: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Reruns `cfg` at doubled resolution (see [`ExperimentConfig::refined`])
/// and compares every headline quantity.
pub fn stability_check(cfg: &ExperimentConfig) -> Result<StabilityReport, RunError> {
    if cfg.experiment == Experiment::Duality {
        return Err(RunError::config("the duality experiment has fixed cases and no refinement"));
    }
    let base = execute(cfg).map_err(|f| RunError::from_failure(&f))?.headline;
    let refined = execute(&cfg.refined()).map_err(|f| RunError::from_failure(&f))?.headline;
    let mut drift = BTreeMap::new();
    for (k, v) in &base {
        if let Some(r) = refined.get(k) {
            let d = if r == v { 0.0 } else { (r - v).abs() / v.abs().max(1e-300) };
            drift.insert(k.clone(), d);
        }
    }
    let max_drift = drift.values().copied().fold(0.0, f64::max);
    Ok(StabilityReport {
        passed: max_drift < cfg.tolerances.drift,
        tolerance: cfg.tolerances.drift,
        base,
        refined,
        drift,
        max_drift,
    })
}
