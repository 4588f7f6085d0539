//! Experiment configuration: one TOML file with typed sections, plus
//! CLI-style overrides that rewrite individual keys before validation.
//!
//! The parsed [`ScenarioConfig`] is deliberately plain data; nothing is
//! resolved until [`ScenarioConfig::resolve`] builds the force field,
//! boundary law, and grid and checks every invariant. The config that a
//! report echoes is the post-override, pre-resolution struct, so a
//! report always contains enough to reproduce its run.

use super::{scenario_names, HarnessError};
use crate::engine::{BoundaryLaw, SimGrid};
use crate::model::{ForceField, StableParams};
use serde::{Deserialize, Serialize};

/// Largest admissible path count; stream ids above `2^32` are reserved
/// for auxiliary draws, so path indices must stay below it.
pub const MAX_PATHS: u64 = 1 << 32;

fn default_stride() -> usize {
    1
}

fn default_ladder() -> Vec<f64> {
    vec![0.1, 0.01]
}

/// Force-field selection, currently `builtin:<beta>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSection {
    pub force: String,
}

/// Restart-law selection, e.g. `dirac:1.0` or `half_gaussian:1.0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundarySection {
    pub law: String,
}

/// Simulation grid keys; `horizon` is the macroscopic time, which the
/// rescaling experiments stretch by `1/epsilon` internally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

/// One experiment run, as read from the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Registered scenario name, e.g. `exp-free-limit`.
    pub scenario: String,
    pub master_seed: u64,
    pub n_paths: u64,
    /// Artifact directory; no files are written when absent.
    #[serde(default)]
    pub out_dir: Option<String>,
    /// Observation scales for the rescaling experiments, strictly
    /// decreasing. Scenarios that do not rescale ignore it.
    #[serde(default = "default_ladder")]
    pub epsilon_ladder: Vec<f64>,
    pub model: ModelSection,
    pub boundary: BoundarySection,
    pub grid: GridSection,
}

/// Optional per-key rewrites applied on top of a parsed config. Field
/// names mirror the CLI flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub beta: Option<f64>,
    pub mu: Option<String>,
    pub out_dir: Option<String>,
}

/// Fully validated run inputs: the echoed config plus the resolved
/// model objects and stable-limit constants.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cfg: ScenarioConfig,
    pub ff: ForceField,
    pub mu: BoundaryLaw,
    pub grid: SimGrid,
    pub stable: StableParams,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(format!("config parse: {e}")))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = &o.scenario {
            self.scenario = s.clone();
        }
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(p) = o.paths {
            self.n_paths = p;
        }
        if let Some(dt) = o.dt {
            self.grid.dt = dt;
        }
        if let Some(h) = o.horizon {
            self.grid.horizon = h;
        }
        if let Some(b) = o.beta {
            self.model.force = format!("builtin:{b}");
        }
        if let Some(m) = &o.mu {
            self.boundary.law = m.clone();
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = Some(d.clone());
        }
    }

    /// Build the model objects and check every config invariant.
    pub fn resolve(&self) -> Result<Resolved, HarnessError> {
        if !scenario_names().contains(&self.scenario.as_str()) {
            return Err(HarnessError::Config(format!(
                "unknown scenario {:?}; see list-scenarios",
                self.scenario
            )));
        }
        if self.n_paths == 0 {
            return Err(HarnessError::Config("n_paths must be at least 1".into()));
        }
        if self.n_paths >= MAX_PATHS {
            return Err(HarnessError::Config(format!(
                "n_paths = {} exceeds the stream-id budget {}",
                self.n_paths, MAX_PATHS
            )));
        }
        if self.epsilon_ladder.is_empty() {
            return Err(HarnessError::Config("epsilon_ladder must not be empty".into()));
        }
        for w in self.epsilon_ladder.windows(2) {
            if !(w[1] < w[0]) {
                return Err(HarnessError::Config(format!(
                    "epsilon_ladder must be strictly decreasing, got {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        if self.epsilon_ladder.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(HarnessError::Config(format!(
                "epsilon_ladder entries must be positive and finite, got {:?}",
                self.epsilon_ladder
            )));
        }
        let ff = parse_force(&self.model.force)?;
        let mu = BoundaryLaw::parse_selector(&self.boundary.law)?;
        let grid = SimGrid::with_stride(self.grid.dt, self.grid.horizon, self.grid.record_stride);
        grid.validate_for(&ff)?;
        let stable = ff.stable_params()?;
        Ok(Resolved {
            cfg: self.clone(),
            ff,
            mu,
            grid,
            stable,
        })
    }
}

fn parse_force(selector: &str) -> Result<ForceField, HarnessError> {
    match selector.split_once(':') {
        Some(("builtin", beta)) => {
            let beta: f64 = beta.parse().map_err(|_| {
                HarnessError::Config(format!("cannot parse beta in force selector {selector:?}"))
            })?;
            Ok(ForceField::builtin(beta)?)
        }
        _ => Err(HarnessError::Config(format!(
            "unknown force selector {selector:?}; supported: builtin:<beta>"
        ))),
    }
}
