//! Experiment configuration: a TOML file with one section per subsystem,
//! every field optional with documented defaults, plus a content hash that
//! is embedded in all outputs for provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::pipeline::PipelineParams;
use crate::policy::PolicyMode;
use crate::sim::{SceneRanges, SensorModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum TaskKind {
    OpenDoor,
    OpenDrawer,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::OpenDoor => "open_door",
            TaskKind::OpenDrawer => "open_drawer",
        }
    }
}

/// Default task targets: door-opening angles in degrees, drawer extensions
/// in meters.
pub fn default_targets(task: TaskKind) -> Vec<f64> {
    match task {
        TaskKind::OpenDoor => vec![8.6, 10.0, 20.0, 30.0, 40.0, 45.0, 50.0, 55.0, 60.0, 65.0, 70.0],
        TaskKind::OpenDrawer => vec![0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45],
    }
}

/// Step accounting shared by every mode of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepBudget {
    /// Commanded grip displacement per step, meters (arc length for doors).
    pub step_size: f64,
    /// Blind initial pulls before any estimate is used.
    pub init_steps: usize,
    /// Total per-trial step budget, identical across modes.
    pub max_steps: usize,
}

impl Default for StepBudget {
    fn default() -> Self {
        StepBudget { step_size: 0.05, init_steps: 2, max_steps: 26 }
    }
}

fn default_trials() -> usize {
    100
}

fn default_modes() -> Vec<PolicyMode> {
    vec![PolicyMode::ClosedLoop, PolicyMode::OpenLoop]
}

fn default_slip_tolerance() -> f64 {
    0.02
}

fn default_sensor() -> SensorModel {
    SensorModel {
        surface_density: 600.0,
        noise_sigma: 0.005,
        ..SensorModel::default()
    }
}

/// A full benchmark configuration. Missing fields and sections fall back to
/// the defaults below; an empty `targets` list resolves to the task's
/// standard target sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    /// Degrees for doors, meters for drawers; strictly increasing.
    #[serde(default)]
    pub targets: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials_per_target: usize,
    #[serde(default = "default_modes")]
    pub modes: Vec<PolicyMode>,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_sensor")]
    pub sensor: SensorModel,
    #[serde(default)]
    pub pipeline: PipelineParams,
    #[serde(default)]
    pub budget: StepBudget,
    #[serde(default = "default_slip_tolerance")]
    pub slip_tolerance: f64,
    #[serde(default)]
    pub scene: SceneRanges,
}

impl ExperimentConfig {
    /// All defaults for a task.
    pub fn for_task(task: TaskKind) -> Self {
        let mut cfg = ExperimentConfig {
            task,
            targets: Vec::new(),
            trials_per_target: default_trials(),
            modes: default_modes(),
            seed_base: 0,
            sensor: default_sensor(),
            pipeline: PipelineParams::default(),
            budget: StepBudget::default(),
            slip_tolerance: default_slip_tolerance(),
            scene: SceneRanges::default(),
        };
        cfg.resolve();
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    fn resolve(&mut self) {
        if self.targets.is_empty() {
            self.targets = default_targets(self.task);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.targets.is_empty() {
            return fail("targets must be nonempty");
        }
        if !self.targets.windows(2).all(|w| w[0] < w[1]) {
            return fail("targets must be strictly increasing");
        }
        if self.targets.iter().any(|t| *t <= 0.0 || !t.is_finite()) {
            return fail("targets must be positive and finite");
        }
        if self.trials_per_target < 1 {
            return fail("trials_per_target must be at least 1");
        }
        if self.modes.is_empty() {
            return fail("at least one policy mode is required");
        }
        if !self.pipeline.filter.is_valid() || !self.pipeline.extraction.refilter.is_valid() {
            return fail("filter radius must be positive and min_neighbors at least 1");
        }
        if self.pipeline.extraction.margin < 0.0 {
            return fail("extraction margin must be non-negative");
        }
        if self.budget.step_size <= 0.0 {
            return fail("step_size must be positive");
        }
        if self.budget.max_steps < self.budget.init_steps + 1 {
            return fail("max_steps must be at least init_steps + 1");
        }
        if self.slip_tolerance <= 0.0 {
            return fail("slip_tolerance must be positive");
        }
        if self.sensor.surface_density <= 0.0 {
            return fail("surface_density must be positive");
        }
        if !(0.0..1.0).contains(&self.sensor.outlier_fraction) {
            return fail("outlier_fraction must be in [0, 1)");
        }
        Ok(())
    }

    /// Target converted to internal joint units (radians for doors).
    pub fn target_to_joint_units(&self, target: f64) -> f64 {
        match self.task {
            TaskKind::OpenDoor => target.to_radians(),
            TaskKind::OpenDrawer => target,
        }
    }

    /// Short content hash of the resolved configuration, embedded in output
    /// files for provenance.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}
