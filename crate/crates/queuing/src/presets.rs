//! Named parameter packs and a tagged instance description that the
//! harness reads from configuration files.

use serde::{Deserialize, Serialize};

use cscgd_core::{Distribution, Error, Result};

use crate::cloud::CloudInstance;
use crate::constants::QueuingProblem;
use crate::effective::EffectiveCapacityInstance;
use crate::ergodic::Mg1ErgodicInstance;
use crate::mm1::Mm1Problem;
use crate::outage::OutageInstance;
use crate::safeguard::DEFAULT_DEN_EPS;
use crate::utility::UtilityWeights;
use crate::wired::Mg1WiredInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "example", rename_all = "snake_case")]
pub enum InstanceConfig {
    Wired(Mg1WiredInstance),
    Ergodic(Mg1ErgodicInstance),
    Outage(OutageInstance),
    EffectiveCapacity(EffectiveCapacityInstance),
    Cloud(CloudInstance),
    Mm1 { lambda: f64, r: f64, h: f64 },
}

pub const PRESET_NAMES: [&str; 7] = [
    "paper-ex1",
    "paper-ex2-k5",
    "paper-ex2-k10",
    "paper-ex3",
    "paper-ex4",
    "ex5-placeholder",
    "mm1",
];

impl InstanceConfig {
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "paper-ex1" => Self::Wired(paper_ex1()),
            "paper-ex2-k5" => Self::Ergodic(paper_ex2(5)),
            "paper-ex2-k10" => Self::Ergodic(paper_ex2(10)),
            "paper-ex3" => Self::Outage(paper_ex3()),
            "paper-ex4" => Self::EffectiveCapacity(paper_ex4()),
            "ex5-placeholder" => Self::Cloud(ex5_placeholder()),
            "mm1" => Self::Mm1 {
                lambda: 1.0,
                r: 1.0,
                h: 1.0,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown preset `{other}`; known presets: {}",
                    PRESET_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn build(&self) -> Result<Box<dyn QueuingProblem>> {
        Ok(match self {
            Self::Wired(i) => Box::new(i.build()?),
            Self::Ergodic(i) => Box::new(i.build()?),
            Self::Outage(i) => Box::new(i.build()?),
            Self::EffectiveCapacity(i) => Box::new(i.build()?),
            Self::Cloud(i) => Box::new(i.build()?),
            Self::Mm1 { lambda, r, h } => Box::new(Mm1Problem::new(*lambda, *r, *h)?),
        })
    }
}

/// Wired M/G/1 queues. `λ^max` is kept at the listed values even though
/// they exceed `εC/L^max` for every `ε < 1`; the peak-load check is off.
pub fn paper_ex1() -> Mg1WiredInstance {
    Mg1WiredInstance {
        capacities: vec![100.0, 200.0, 500.0],
        lambda_min: 0.1,
        lambda_max: vec![5.0, 7.0, 9.0],
        lambda_lim: 15.0,
        d_max: 0.05,
        mean_lengths: vec![15.0, 20.0, 35.0],
        max_lengths: vec![20.0, 30.0, 60.0],
        weights: UtilityWeights::default(),
        load_margin: 0.95,
        enforce_peak_load: false,
        den_eps: DEFAULT_DEN_EPS,
    }
}

/// Ergodic-capacity queues with `K` receive antennas.
pub fn paper_ex2(antennas: u32) -> Mg1ErgodicInstance {
    Mg1ErgodicInstance {
        bandwidths: vec![10.0; 3],
        lambda_min: 0.1,
        lambda_max: 15.0,
        lambda_lim: 37.0,
        p_min: 14.0,
        p_max: 100.0,
        r_min: 35.0,
        antennas,
        channel_lower: 0.25,
        knee_eps: 0.95,
        weights: UtilityWeights::default(),
        den_eps: DEFAULT_DEN_EPS,
    }
}

pub fn paper_ex3() -> OutageInstance {
    OutageInstance {
        bandwidths: vec![100.0; 3],
        rates: vec![30.0, 35.0, 40.0],
        lambda_min: 0.1,
        lambda_max: 25.0,
        lambda_lim: 45.0,
        p_min: 10.0,
        p_max: 100.0,
        channel_mean: 1.0,
        channel_lower: 0.25,
        sharpness: 1.0,
        weights: UtilityWeights::default(),
        den_eps: DEFAULT_DEN_EPS,
    }
}

/// Effective-capacity queues. The arrival statistics are not listed with
/// the other parameters; `m^a = 10`, `(σ^a)² = 25` are placeholders.
pub fn paper_ex4() -> EffectiveCapacityInstance {
    EffectiveCapacityInstance {
        bandwidths: vec![100.0; 3],
        p_min: 0.1,
        p_max: 0.9,
        delay_target: 0.5,
        arrival_means: vec![10.0; 3],
        arrival_variances: vec![25.0; 3],
        channel_means: vec![0.8, 0.9, 1.0],
        normalizer: 1.0,
        weights: UtilityWeights::default(),
        den_eps: DEFAULT_DEN_EPS,
    }
}

/// Cloud provisioning with placeholder prices, subscriber rates, tier
/// constants, loads and bounds.
pub fn ex5_placeholder() -> CloudInstance {
    CloudInstance {
        prices: vec![1.0, 2.0, 3.0],
        subscribers: vec![10.0; 3],
        maintenance: 0.1,
        tier_low: 0.5,
        tier_high: 2.0,
        loads: vec![
            Distribution::Empirical {
                support: vec![0.0, 1.0, 2.0, 3.0, 4.0]
            };
            3
        ],
        first_resource: [1.0, 5.0],
        capacity: [5.0, 40.0],
        sharpness: Some(20.0),
        den_eps: DEFAULT_DEN_EPS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds() {
        for name in PRESET_NAMES {
            let cfg = InstanceConfig::preset(name).unwrap();
            cfg.build().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(InstanceConfig::preset("nope").is_err());
    }

    #[test]
    fn literal_ex1_bounds_violate_the_peak_load_margin() {
        let mut inst = paper_ex1();
        inst.enforce_peak_load = true;
        assert!(inst.validate().is_err());
    }
}
