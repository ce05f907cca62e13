//! Mean-square step-size diagnostic.
//!
//! For an iterate sequence produced with step sizes `alpha_t`, `delta_t`,
//!
//! ```text
//! E ||x_{t+1} - x_t||^2 <= 2 alpha_t^2 C_f C_g + 2 delta_t^2 J C_ell^2 C_q C_h
//! ```
//!
//! The check estimates the left side by averaging over seeds and flags
//! iterations where the estimate exceeds the bound by more than three
//! standard errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::TrajectoryRecord;

/// Second-moment constants of the gradients of the outer and inner maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentConstants {
    pub c_f: f64,
    pub c_g: f64,
    pub c_q: f64,
    pub c_h: f64,
}

pub fn step_bound(k: &MomentConstants, c_ell: f64, j: usize, alpha: f64, delta: f64) -> f64 {
    2.0 * alpha * alpha * k.c_f * k.c_g + 2.0 * delta * delta * j as f64 * c_ell * c_ell * k.c_q * k.c_h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub t: usize,
    pub mean_step_sq: f64,
    pub std_err: f64,
    pub bound: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostic {
    pub checks: Vec<StepCheck>,
    pub flagged: usize,
}

/// Compares the seed-averaged squared steps to the bound at every
/// iteration present in all trajectories. Needs at least two seeds.
pub fn step_diagnostic(
    trajectories: &[Vec<TrajectoryRecord>],
    constants: &MomentConstants,
    c_ell: f64,
    j: usize,
) -> Result<StepDiagnostic> {
    if trajectories.len() < 2 {
        return Err(Error::Config("step diagnostic needs at least two seeds".into()));
    }
    let len = trajectories.iter().map(Vec::len).min().unwrap_or(0);
    let seeds = trajectories.len() as f64;
    let mut checks = Vec::with_capacity(len);
    for k in 0..len {
        let first = &trajectories[0][k];
        if trajectories.iter().any(|tr| tr[k].t != first.t) {
            return Err(Error::Config("trajectories are logged at different iterations".into()));
        }
        let mean = trajectories.iter().map(|tr| tr[k].step_sq_norm).sum::<f64>() / seeds;
        let var = trajectories
            .iter()
            .map(|tr| (tr[k].step_sq_norm - mean).powi(2))
            .sum::<f64>()
            / (seeds - 1.0);
        let std_err = (var / seeds).sqrt();
        let bound = step_bound(constants, c_ell, j, first.alpha, first.delta);
        checks.push(StepCheck {
            t: first.t,
            mean_step_sq: mean,
            std_err,
            bound,
            flagged: mean - 3.0 * std_err > bound,
        });
    }
    let flagged = checks.iter().filter(|c| c.flagged).count();
    Ok(StepDiagnostic { checks, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: usize, step: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            t,
            alpha: 1.0,
            beta: 1.0,
            delta: 0.0,
            x: vec![],
            objective_estimate: 0.0,
            constraint_estimates: vec![],
            step_sq_norm: step,
        }
    }

    #[test]
    fn flags_only_clear_excess() {
        let k = MomentConstants {
            c_f: 1.0,
            c_g: 1.0,
            c_q: 0.0,
            c_h: 0.0,
        };
        let a = vec![rec(1, 1.0), rec(2, 5.0)];
        let b = vec![rec(1, 1.2), rec(2, 5.1)];
        let d = step_diagnostic(&[a, b], &k, 1.0, 0).unwrap();
        assert!(!d.checks[0].flagged);
        assert!(d.checks[1].flagged);
        assert_eq!(d.flagged, 1);
    }
}
