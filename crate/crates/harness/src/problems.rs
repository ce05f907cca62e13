//! Instance resolution: named presets, inline instance tables, and two
//! deterministic toy problems used for rate checks.

use serde::{Deserialize, Serialize};

use cscgd_core::{
    CompositionalProblem, Dims, FeasibleSet, Matrix, ProductDistribution, Result as CoreResult, RngStream, Sample,
};
use cscgd_queuing::{ConstantReport, InstanceConfig, QueuingProblem, ReportsConstants, PRESET_NAMES};

use crate::error::{HarnessError, Result};

pub const TOY_NAMES: [&str; 2] = ["toy-quadratic", "toy-constrained"];

/// `min ½||x||²` over `[-1, 1]^n` with `g(x) = x`. Optimum 0 at the origin.
pub struct ToyQuadratic {
    dim: usize,
    set: FeasibleSet,
    sampler: ProductDistribution,
}

impl ToyQuadratic {
    pub fn new(dim: usize) -> CoreResult<Self> {
        Ok(Self {
            dim,
            set: FeasibleSet::boxed(vec![-1.0; dim], vec![1.0; dim])?,
            sampler: ProductDistribution::constant(&[0.0]),
        })
    }
}

impl CompositionalProblem for ToyQuadratic {
    fn dims(&self) -> Dims {
        Dims {
            n: self.dim,
            m: self.dim,
            d: 0,
            j: 0,
        }
    }
    fn sample(&self, rng: &mut RngStream) -> Sample {
        self.sampler.draw(rng)
    }
    fn inner_g(&self, x: &[f64], _: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn inner_g_jacobian(&self, _: &[f64], _: &[f64]) -> Matrix {
        Matrix::identity(self.dim)
    }
    fn inner_h(&self, _: &[f64], _: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    fn inner_h_jacobian(&self, _: &[f64], _: &[f64]) -> Matrix {
        Matrix::zeros(self.dim, 0)
    }
    fn outer_f(&self, y: &[f64]) -> f64 {
        0.5 * y.iter().map(|v| v * v).sum::<f64>()
    }
    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
    fn outer_q(&self, _: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    fn outer_q_jacobian(&self, _: &[f64]) -> Matrix {
        Matrix::zeros(0, 0)
    }
    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }
    fn name(&self) -> String {
        "toy-quadratic".into()
    }
    fn exact_expectations(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((x.to_vec(), Vec::new()))
    }
}

impl ReportsConstants for ToyQuadratic {
    fn constant_report(&self) -> CoreResult<ConstantReport> {
        let n = self.dim as f64;
        Ok(ConstantReport {
            c_f: n,
            l_f: 1.0,
            c_g: n,
            v_g: 0.0,
            c_h: 0.0,
            v_h: 0.0,
            c_q: 0.0,
            l_q: 0.0,
            d_x: self.set.squared_diameter(),
            outer_numeric: false,
        })
    }
}

/// `min ½(x - 1)²` over `[0, 1]` subject to `x - ½ <= 0`, with
/// `g = h = x`. Optimum `F* = 1/8` at `x = ½`, constraint active.
pub struct ToyConstrained {
    set: FeasibleSet,
    sampler: ProductDistribution,
}

impl ToyConstrained {
    pub const F_STAR: f64 = 0.125;

    pub fn new() -> CoreResult<Self> {
        Ok(Self {
            set: FeasibleSet::boxed(vec![0.0], vec![1.0])?,
            sampler: ProductDistribution::constant(&[0.0]),
        })
    }
}

impl CompositionalProblem for ToyConstrained {
    fn dims(&self) -> Dims {
        Dims { n: 1, m: 1, d: 1, j: 1 }
    }
    fn sample(&self, rng: &mut RngStream) -> Sample {
        self.sampler.draw(rng)
    }
    fn inner_g(&self, x: &[f64], _: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn inner_g_jacobian(&self, _: &[f64], _: &[f64]) -> Matrix {
        Matrix::identity(1)
    }
    fn inner_h(&self, x: &[f64], _: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn inner_h_jacobian(&self, _: &[f64], _: &[f64]) -> Matrix {
        Matrix::identity(1)
    }
    fn outer_f(&self, y: &[f64]) -> f64 {
        0.5 * (y[0] - 1.0).powi(2)
    }
    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64> {
        vec![y[0] - 1.0]
    }
    fn outer_q(&self, z: &[f64]) -> Vec<f64> {
        vec![z[0] - 0.5]
    }
    fn outer_q_jacobian(&self, _: &[f64]) -> Matrix {
        Matrix::identity(1)
    }
    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }
    fn name(&self) -> String {
        "toy-constrained".into()
    }
    fn exact_expectations(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((x.to_vec(), x.to_vec()))
    }
}

impl ReportsConstants for ToyConstrained {
    fn constant_report(&self) -> CoreResult<ConstantReport> {
        Ok(ConstantReport {
            c_f: 1.0,
            l_f: 1.0,
            c_g: 1.0,
            v_g: 0.0,
            c_h: 1.0,
            v_h: 0.0,
            c_q: 1.0,
            l_q: 0.0,
            d_x: self.set.squared_diameter(),
            outer_numeric: false,
        })
    }
}

/// A preset name or a full inline instance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSpec {
    Preset { preset: String },
    Inline(InstanceConfig),
}

impl InstanceSpec {
    pub fn preset(name: &str) -> Self {
        Self::Preset { preset: name.into() }
    }

    /// Name used for oracle caching and file labels.
    pub fn label(&self) -> String {
        match self {
            Self::Preset { preset } => preset.clone(),
            Self::Inline(cfg) => format!("inline-{}", example_tag(cfg)),
        }
    }

    /// The instance parameters when this is (or names) a queuing instance.
    pub fn queuing_config(&self) -> Result<Option<InstanceConfig>> {
        match self {
            Self::Preset { preset } if TOY_NAMES.contains(&preset.as_str()) => Ok(None),
            Self::Preset { preset } if PRESET_NAMES.contains(&preset.as_str()) => {
                Ok(Some(InstanceConfig::preset(preset)?))
            }
            Self::Preset { preset } => Err(HarnessError::UnknownPreset(preset.clone())),
            Self::Inline(cfg) => Ok(Some(cfg.clone())),
        }
    }
}

fn example_tag(cfg: &InstanceConfig) -> &'static str {
    match cfg {
        InstanceConfig::Wired(_) => "wired",
        InstanceConfig::Ergodic(_) => "ergodic",
        InstanceConfig::Outage(_) => "outage",
        InstanceConfig::EffectiveCapacity(_) => "effective_capacity",
        InstanceConfig::Cloud(_) => "cloud",
        InstanceConfig::Mm1 { .. } => "mm1",
    }
}

pub struct Resolved {
    pub problem: Box<dyn QueuingProblem>,
    pub label: String,
    /// Starting point used when the configuration does not set one.
    pub default_start: Option<Vec<f64>>,
}

pub fn resolve(spec: &InstanceSpec) -> Result<Resolved> {
    let label = spec.label();
    if let InstanceSpec::Preset { preset } = spec {
        // The box midpoint is optimal for both toys, so they start at a corner.
        match preset.as_str() {
            "toy-quadratic" => {
                return Ok(Resolved {
                    problem: Box::new(ToyQuadratic::new(2)?),
                    label,
                    default_start: Some(vec![1.0; 2]),
                })
            }
            "toy-constrained" => {
                return Ok(Resolved {
                    problem: Box::new(ToyConstrained::new()?),
                    label,
                    default_start: Some(vec![1.0]),
                })
            }
            _ => {}
        }
    }
    let cfg = spec.queuing_config()?.expect("toys handled above");
    Ok(Resolved {
        problem: cfg.build()?,
        label,
        default_start: None,
    })
}

pub fn known_presets() -> Vec<&'static str> {
    PRESET_NAMES.iter().chain(TOY_NAMES.iter()).copied().collect()
}
