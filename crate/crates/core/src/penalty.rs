//! Huber-style penalty on shifted constraint values: zero below the
//! margin, quadratic up to the saturation level, linear afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    /// Constraint-tightening margin (>= 0).
    pub gamma: f64,
    /// Saturation level where the penalty turns linear (> gamma).
    pub c_ell: f64,
}

impl PenaltyParams {
    pub fn new(gamma: f64, c_ell: f64) -> Result<Self> {
        let p = Self { gamma, c_ell };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.c_ell.is_finite()) {
            return Err(Error::Config("penalty parameters must be finite".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::Config(format!("gamma = {} < 0", self.gamma)));
        }
        if self.c_ell <= 0.0 || self.gamma >= self.c_ell {
            return Err(Error::Config(format!(
                "need 0 <= gamma < c_ell, got gamma = {}, c_ell = {}",
                self.gamma, self.c_ell
            )));
        }
        Ok(())
    }

    /// Scalar piece evaluated at an already shifted argument.
    #[inline]
    pub fn scalar_value(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else if s <= self.c_ell {
            0.5 * s * s
        } else {
            self.c_ell * s - 0.5 * self.c_ell * self.c_ell
        }
    }

    /// Derivative of [`Self::scalar_value`]: `min(s, c_ell)` on `s > 0`.
    #[inline]
    pub fn scalar_derivative(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            s.min(self.c_ell)
        }
    }
}

fn check_finite(w: &[f64]) -> Result<()> {
    if w.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinitePenalty)
    }
}

/// `sum_j ell(w_j + gamma)`.
pub fn penalty_value(w: &[f64], params: &PenaltyParams) -> Result<f64> {
    check_finite(w)?;
    Ok(w
        .iter()
        .map(|wj| params.scalar_value(wj + params.gamma))
        .sum())
}

/// Componentwise derivative of [`penalty_value`].
pub fn penalty_gradient(w: &[f64], params: &PenaltyParams) -> Result<Vec<f64>> {
    check_finite(w)?;
    Ok(w
        .iter()
        .map(|wj| params.scalar_derivative(wj + params.gamma))
        .collect())
}

/// Distance of the shifted argument to the nearest kink (`0` or `c_ell`).
pub fn kink_distance(w: &[f64], params: &PenaltyParams) -> f64 {
    w.iter()
        .map(|wj| {
            let s = wj + params.gamma;
            s.abs().min((s - params.c_ell).abs())
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_margin_is_zero() {
        let p = PenaltyParams::new(0.3, 1.0).unwrap();
        assert_eq!(penalty_value(&[-0.3 - 1.0], &p).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_branch_at_saturation_level() {
        // 0.5 * 2^2
        let p = PenaltyParams::new(0.0, 2.0).unwrap();
        assert_eq!(penalty_value(&[2.0], &p).unwrap(), 2.0);
    }

    #[test]
    fn small_margin_value() {
        let p = PenaltyParams::new(0.1, 1.0).unwrap();
        let v = penalty_value(&[0.0], &p).unwrap();
        assert!((v - 0.005).abs() < 1e-15);
    }

    #[test]
    fn gradient_cases() {
        let p = PenaltyParams::new(0.0, 1.0).unwrap();
        assert_eq!(penalty_gradient(&[-0.5], &p).unwrap(), vec![0.0]);
        let fd = |w: f64| {
            let h = 1e-6;
            (penalty_value(&[w + h], &p).unwrap() - penalty_value(&[w - h], &p).unwrap())
                / (2.0 * h)
        };
        let g = penalty_gradient(&[0.3, 5.0], &p).unwrap();
        assert!((g[0] - 0.3).abs() < 1e-12 && (fd(0.3) - 0.3).abs() < 1e-6);
        assert!((g[1] - 1.0).abs() < 1e-12 && (fd(5.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_finite() {
        let p = PenaltyParams::new(0.0, 1.0).unwrap();
        let err = penalty_value(&[f64::NAN], &p).unwrap_err();
        assert_eq!(err.to_string(), "non-finite penalty argument");
        assert!(penalty_gradient(&[f64::INFINITY], &p).is_err());
    }

    #[test]
    fn invalid_params() {
        assert!(PenaltyParams::new(1.0, 1.0).is_err());
        assert!(PenaltyParams::new(-0.1, 1.0).is_err());
        assert!(PenaltyParams::new(0.0, 0.0).is_err());
    }
}
