//! Experiment configuration, read from and written to TOML.
//!
//! ```toml
//! seeds = [0, 1, 2]
//! eval_samples = 100000
//! output_dir = "out/ex1"
//! oracle = "gap"
//!
//! [instance]
//! preset = "paper-ex1"
//!
//! [solver]
//! a = 0.9167
//! b = 0.5
//! c = 0.75
//! regime = "constant"
//! horizon = 10000
//! gamma = 0.0            # or "zero_violation"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cscgd_core::{LogPolicy, Regime, StepSchedule, UpdateMode};

use crate::error::{io_err, HarnessError, Result};
use crate::problems::InstanceSpec;

/// Margin `γ`: a number, or the rule that makes the constraint-violation
/// bound vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Value(f64),
    Rule(GammaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    ZeroViolation,
}

impl Default for GammaSetting {
    fn default() -> Self {
        Self::Value(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub regime: Regime,
    pub horizon: usize,
    #[serde(default)]
    pub gamma: GammaSetting,
    /// Overrides the automatic penalty saturation level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_ell: Option<f64>,
    #[serde(default)]
    pub mode: UpdateMode,
    /// `{ kind = "every" }` keeps the raw trajectory.
    #[serde(default)]
    pub log: LogPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_point: Option<Vec<f64>>,
}

impl SolverSection {
    pub fn schedule(&self) -> Result<StepSchedule> {
        Ok(StepSchedule::new(self.a, self.b, self.c, self.regime, self.horizon)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// No baseline; gap columns are left empty.
    Off,
    /// Report the optimality gap against the cached oracle baseline.
    #[default]
    Gap,
}

fn default_eval_samples() -> usize {
    100_000
}

fn default_plot_points() -> usize {
    200
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_oracle_cache() -> PathBuf {
    PathBuf::from("oracle_cache.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    /// Monte-Carlo batch for evaluating `F(x̂)` and `Q(x̂)`.
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub oracle: OracleMode,
    #[serde(default = "default_oracle_cache")]
    pub oracle_cache: PathBuf,
    /// Number of log-spaced points in the plot series.
    #[serde(default = "default_plot_points")]
    pub plot_points: usize,
    pub instance: InstanceSpec,
    pub solver: SolverSection,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSpec, solver: SolverSection, seeds: Vec<u64>) -> Self {
        Self {
            seeds,
            eval_samples: default_eval_samples(),
            output_dir: default_output_dir(),
            oracle: OracleMode::Gap,
            oracle_cache: default_oracle_cache(),
            plot_points: default_plot_points(),
            instance,
            solver,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(HarnessError::Config("seeds must be distinct".into()));
        }
        // TOML integers are signed.
        if let Some(s) = self.seeds.iter().find(|s| **s > i64::MAX as u64) {
            return Err(HarnessError::Config(format!("seed {s} exceeds {}", i64::MAX)));
        }
        if self.eval_samples < 2 {
            return Err(HarnessError::Config("eval_samples must be at least 2".into()));
        }
        if self.plot_points < 2 {
            return Err(HarnessError::Config("plot_points must be at least 2".into()));
        }
        if let GammaSetting::Value(g) = self.solver.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return Err(HarnessError::Config(format!("gamma must be a nonnegative number, got {g}")));
            }
        }
        self.solver.schedule()?;
        Ok(())
    }

    /// Canonical TOML text. Parsing it back yields an equal configuration.
    pub fn canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    /// SHA-256 of the canonical form with the output locations blanked,
    /// so the same experiment hashes equally wherever it is written.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.oracle_cache = PathBuf::new();
        let digest = Sha256::digest(c.canonical()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
