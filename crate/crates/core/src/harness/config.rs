use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::heat_ext::TimeGrid;
use crate::weight_field::{Family, MAX_FIBER_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    A2h,
    RieszNorm,
    Lp,
    Duality,
    Martingale,
    BellmanSweep,
    FullSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::A2h,
        Experiment::RieszNorm,
        Experiment::Lp,
        Experiment::Duality,
        Experiment::Martingale,
        Experiment::BellmanSweep,
        Experiment::FullSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::A2h => "a2h",
            Experiment::RieszNorm => "riesz_norm",
            Experiment::Lp => "lp",
            Experiment::Duality => "duality",
            Experiment::Martingale => "martingale",
            Experiment::BellmanSweep => "bellman_sweep",
            Experiment::FullSweep => "full_sweep",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

/// Time quadrature; missing bounds default to `h²/4` and `L²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub t_min: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
}

fn default_nodes() -> usize {
    96
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            nodes: default_nodes(),
            t_min: None,
            t_max: None,
        }
    }
}

impl TimeConfig {
    pub fn build(&self, grid: &GridSpec) -> Result<TimeGrid> {
        let h = grid.spacing();
        let t_min = self.t_min.unwrap_or(h * h / 4.0);
        let t_max = self.t_max.unwrap_or(grid.length * grid.length);
        TimeGrid::log_spaced(t_min, t_max, self.nodes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest relative drift accepted by the stability check.
    #[serde(default = "default_drift")]
    pub drift: f64,
    #[serde(default = "default_power_tol")]
    pub power_tol: f64,
    #[serde(default = "default_power_iters")]
    pub power_iters: usize,
    #[serde(default = "default_duality")]
    pub duality: f64,
    /// Relative accuracy of the `δ`-targeting bisection.
    #[serde(default = "default_target")]
    pub delta_target: f64,
}

fn default_drift() -> f64 {
    0.01
}
fn default_power_tol() -> f64 {
    1e-8
}
fn default_power_iters() -> usize {
    20000
}
fn default_duality() -> f64 {
    1e-3
}
fn default_target() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            drift: default_drift(),
            power_tol: default_power_tol(),
            power_iters: default_power_iters(),
            duality: default_duality(),
            delta_target: default_target(),
        }
    }
}

fn default_grid() -> GridSpec {
    GridSpec {
        m: 1,
        n: 64,
        length: 1.0,
    }
}
fn default_d() -> usize {
    1
}
fn default_samples() -> usize {
    20
}
fn default_depth() -> usize {
    4
}
fn default_budget() -> usize {
    256
}
fn default_refine() -> usize {
    3
}

/// A single JSON document describing one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_d")]
    pub d: usize,
    /// Weight family; identity when absent.
    #[serde(default)]
    pub family: Option<Family>,
    /// Weight interchange file; overrides `family`, `grid` and `d`.
    #[serde(default)]
    pub weight_file: Option<PathBuf>,
    #[serde(default)]
    pub time: TimeConfig,
    /// Strengths at which the family is sampled.
    #[serde(default)]
    pub eps_grid: Vec<f64>,
    /// Target excess characteristics `δ`.
    #[serde(default)]
    pub delta_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Random samples per weight (`lp`, `bellman_sweep`) or test pairs (`duality`).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Dyadic depth for `martingale` and `bellman_sweep`.
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Random sign patterns before the greedy ascent.
    #[serde(default = "default_budget")]
    pub sign_budget: usize,
    /// Local refinement rounds of the heat characteristic.
    #[serde(default = "default_refine")]
    pub refine_rounds: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            grid: default_grid(),
            d: default_d(),
            family: None,
            weight_file: None,
            time: TimeConfig::default(),
            eps_grid: Vec::new(),
            delta_grid: Vec::new(),
            seed: 0,
            samples: default_samples(),
            depth: default_depth(),
            sign_budget: default_budget(),
            refine_rounds: default_refine(),
            out_dir: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn family(&self) -> Family {
        self.family.clone().unwrap_or(Family::Identity)
    }

    /// Hex SHA-256 of the canonical (key-sorted, compact) JSON form, with
    /// the output directory left out.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = None;
        let value = serde_json::to_value(&canonical).expect("config serializes");
        let text = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(path) = &self.weight_file {
            if !path.exists() {
                return bad(format!("weight file {} does not exist", path.display()));
            }
        } else {
            self.grid.validate().map_err(|e| Error::Config(e.to_string()))?;
            if self.d == 0 || self.d > MAX_FIBER_DIM {
                return bad(format!("d = {} not in 1..={MAX_FIBER_DIM}", self.d));
            }
        }
        if self.time.nodes < 2 {
            return bad("time grid needs at least 2 nodes".into());
        }
        if let (Some(a), Some(b)) = (self.time.t_min, self.time.t_max) {
            if !(a > 0.0 && a < b) {
                return bad(format!("time range [{a}, {b}] is empty"));
            }
        }
        if self.eps_grid.iter().any(|e| !e.is_finite()) {
            return bad("eps grid has non-finite entries".into());
        }
        if let Family::ScalarOscillation { eps } = self.family() {
            if self.eps_grid.iter().chain([&eps]).any(|e| e.abs() >= 1.0) {
                return bad("scalar_oscillation needs |eps| < 1".into());
            }
        }
        if self.delta_grid.iter().any(|&v| !(v > 0.0 && v <= 0.5)) {
            return bad("delta grid must lie in (0, 0.5]".into());
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.sign_budget == 0 {
            return bad("sign_budget must be at least 1".into());
        }
        if matches!(
            self.experiment,
            Experiment::Martingale | Experiment::BellmanSweep | Experiment::FullSweep
        ) && !(1..=crate::dyadic_mart::MAX_DENSE_DEPTH).contains(&self.depth)
        {
            return bad(format!("depth {} not in 1..={}", self.depth, crate::dyadic_mart::MAX_DENSE_DEPTH));
        }
        if matches!(self.experiment, Experiment::Martingale) && self.d > crate::dyadic_mart::MAX_DENSE_FIBER {
            return bad(format!("martingale needs d <= {}", crate::dyadic_mart::MAX_DENSE_FIBER));
        }
        let t = &self.tolerances;
        if !(t.drift > 0.0 && t.power_tol > 0.0 && t.duality > 0.0 && t.delta_target > 0.0 && t.power_iters > 0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    /// The configuration at twice the spatial and temporal resolution; the
    /// dyadic experiments go one level deeper instead.
    pub fn refined(&self) -> Self {
        let mut out = self.clone();
        out.grid = self.grid.doubled();
        out.time.nodes = 2 * self.time.nodes;
        if self.time.t_min.is_none() {
            // keep the range of the coarse run
            let h = self.grid.spacing();
            out.time.t_min = Some(h * h / 4.0);
        }
        if matches!(self.experiment, Experiment::Martingale | Experiment::BellmanSweep) {
            out.depth = (self.depth + 1).min(crate::dyadic_mart::MAX_DENSE_DEPTH);
        }
        out
    }
}
