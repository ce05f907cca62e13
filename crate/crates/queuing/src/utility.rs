use serde::{Deserialize, Serialize};

use cscgd_core::{Error, Result};

/// Weights of the log utility `ψ_i(x) = ψ̄_i log x` and the linear cost
/// `φ_i(x) = φ̄_i x` used by the wireless and wired instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityWeights {
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            psi: vec![1.0, 1.5, 2.0],
            phi: vec![10.0, 15.0, 20.0],
        }
    }
}

impl UtilityWeights {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.psi.len() != n || self.phi.len() != n {
            return Err(Error::Config(format!(
                "utility weights need {n} entries each, got {} and {}",
                self.psi.len(),
                self.phi.len()
            )));
        }
        if !self.psi.iter().chain(&self.phi).all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::Config("utility weights must be positive".into()));
        }
        Ok(())
    }
}
