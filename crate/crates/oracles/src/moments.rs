//! Raw moments of scalar distributions by adaptive Gauss–Kronrod
//! quadrature of `x^k` against the density.

use std::collections::BTreeMap;

use serde::Serialize;

use cscgd_core::quadrature::{integrate_adaptive, integrate_semi_infinite, QuadResult};
use cscgd_core::Distribution;

use crate::error::{OracleError, Result};

/// Required relative accuracy of every reported moment.
pub const MOMENT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureMoments {
    pub distribution: Distribution,
    pub orders: Vec<u32>,
    pub values: BTreeMap<u32, f64>,
    /// Largest absolute error estimate over the requested orders.
    pub abs_error: f64,
}

fn tail_scale(dist: &Distribution) -> f64 {
    match dist {
        Distribution::Exponential { mean } | Distribution::TruncatedExponential { mean, .. } => *mean,
        Distribution::TruncatedChiSquared { dof, .. } => *dof as f64,
        _ => 1.0,
    }
}

impl QuadratureMoments {
    pub fn compute(dist: &Distribution, orders: &[u32]) -> Result<Self> {
        dist.validate()?;
        let mut values = BTreeMap::new();
        let mut abs_error: f64 = 0.0;
        for &k in orders {
            let (value, err) = match dist {
                Distribution::Constant { value } => (value.powi(k as i32), 0.0),
                Distribution::Empirical { support } => (
                    support.iter().map(|v| v.powi(k as i32)).sum::<f64>() / support.len() as f64,
                    0.0,
                ),
                _ => {
                    let r = moment_integral(dist, k)?;
                    (r.value, r.error_estimate)
                }
            };
            if err > MOMENT_REL_TOL * value.abs() {
                return Err(OracleError::Quadrature {
                    order: k,
                    relative: err / value.abs(),
                });
            }
            values.insert(k, value);
            abs_error = abs_error.max(err);
        }
        Ok(Self {
            distribution: dist.clone(),
            orders: orders.to_vec(),
            values,
            abs_error,
        })
    }

    pub fn get(&self, order: u32) -> Option<f64> {
        self.values.get(&order).copied()
    }
}

fn moment_integral(dist: &Distribution, k: u32) -> Result<QuadResult> {
    let (lo, hi) = dist.support();
    let f = |x: f64| x.powi(k as i32) * dist.pdf(x).unwrap_or(0.0);
    let rel = 1e-3 * MOMENT_REL_TOL;
    if hi.is_finite() {
        return Ok(integrate_adaptive(f, lo, hi, 0.0, rel, 5000)?);
    }
    // Most of the mass of x^k p(x) sits below the mode of the integrand,
    // roughly (k + 1) scales past the lower end.
    let cut = lo + (k as f64 + 30.0) * tail_scale(dist);
    let head = integrate_adaptive(f, lo, cut, 0.0, rel, 5000)?;
    let tail = integrate_semi_infinite(f, cut, 0.0, rel, 5000)?;
    Ok(QuadResult {
        value: head.value + tail.value,
        error_estimate: head.error_estimate + tail.error_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_moments_are_factorials() {
        let m = QuadratureMoments::compute(&Distribution::Exponential { mean: 3.0 }, &[1, 2, 3, 4]).unwrap();
        for (k, fact) in [(1, 1.0), (2, 2.0), (3, 6.0), (4, 24.0)] {
            let want = fact * 3f64.powi(k as i32);
            assert!((m.get(k).unwrap() - want).abs() <= 1e-10 * want);
        }
    }

    #[test]
    fn atoms_are_exact() {
        let d = Distribution::Empirical {
            support: vec![0.0, 1.0, 2.0],
        };
        let m = QuadratureMoments::compute(&d, &[1, 2]).unwrap();
        assert_eq!(m.get(1), Some(1.0));
        assert_eq!(m.get(2), Some(5.0 / 3.0));
        assert_eq!(m.abs_error, 0.0);
    }
}
