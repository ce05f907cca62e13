//! Single M/M/1 server: choose the service rate `μ` to balance
//! throughput against delay,
//!
//! ```text
//! U(μ) = r λ/μ - h λ / (μ (μ - λ)).
//! ```

use cscgd_core::{
    CompositionalProblem, Dims, Error, FeasibleSet, Matrix, ProductDistribution, Result, RngStream, Sample,
};

use crate::constants::{ConstantReport, ReportsConstants};

fn check(mu: Option<f64>, lambda: f64, r: f64, h: f64) -> Result<()> {
    if !(lambda > 0.0 && r > 0.0 && h > 0.0) {
        return Err(Error::Domain(format!(
            "need lambda, r, h > 0, got {lambda}, {r}, {h}"
        )));
    }
    if let Some(mu) = mu {
        if !(mu > lambda) {
            return Err(Error::Domain(format!("unstable queue: mu = {mu} <= lambda = {lambda}")));
        }
    }
    Ok(())
}

pub fn mm1_utility(mu: f64, lambda: f64, r: f64, h: f64) -> Result<f64> {
    check(Some(mu), lambda, r, h)?;
    Ok(r * lambda / mu - h * lambda / (mu * (mu - lambda)))
}

/// `dU/dμ`.
pub fn mm1_utility_derivative(mu: f64, lambda: f64, r: f64, h: f64) -> Result<f64> {
    check(Some(mu), lambda, r, h)?;
    let d = mu * (mu - lambda);
    Ok(-r * lambda / (mu * mu) + h * lambda * (2.0 * mu - lambda) / (d * d))
}

/// `μ* = λ + u + sqrt(u (u + λ))` with `u = h/r`.
pub fn mm1_optimal_mu(lambda: f64, r: f64, h: f64) -> Result<f64> {
    check(None, lambda, r, h)?;
    let u = h / r;
    Ok(lambda + u + (u * (u + lambda)).sqrt())
}

/// `min_μ -U(μ)` as a (deterministic) compositional problem with `g = μ`
/// and `f = -U`, on the interval `[λ + 0.1u, 2λ + 4u]`, which contains
/// `μ*` and keeps the queue stable.
pub struct Mm1Problem {
    pub lambda: f64,
    pub r: f64,
    pub h: f64,
    set: FeasibleSet,
    sampler: ProductDistribution,
}

impl Mm1Problem {
    pub fn new(lambda: f64, r: f64, h: f64) -> Result<Self> {
        check(None, lambda, r, h)?;
        let u = h / r;
        let set = FeasibleSet::boxed(vec![lambda + 0.1 * u], vec![2.0 * lambda + 4.0 * u])?;
        Ok(Self {
            lambda,
            r,
            h,
            set,
            sampler: ProductDistribution::constant(&[0.0]),
        })
    }

    pub fn optimum(&self) -> f64 {
        mm1_optimal_mu(self.lambda, self.r, self.h).expect("validated at construction")
    }
}

impl CompositionalProblem for Mm1Problem {
    fn dims(&self) -> Dims {
        Dims { n: 1, m: 1, d: 0, j: 0 }
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

    fn inner_h(&self, _: &[f64], _: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    fn inner_h_jacobian(&self, _: &[f64], _: &[f64]) -> Matrix {
        Matrix::zeros(1, 0)
    }

    fn outer_f(&self, y: &[f64]) -> f64 {
        mm1_utility(y[0], self.lambda, self.r, self.h).map_or(f64::NAN, |u| -u)
    }

    fn outer_f_gradient(&self, y: &[f64]) -> Vec<f64> {
        vec![mm1_utility_derivative(y[0], self.lambda, self.r, self.h).map_or(f64::NAN, |d| -d)]
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
        "mm1".into()
    }

    fn exact_expectations(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((x.to_vec(), Vec::new()))
    }
}

impl ReportsConstants for Mm1Problem {
    fn constant_report(&self) -> Result<ConstantReport> {
        let (lo, hi) = self.set.bounds();
        let grid: Vec<Vec<f64>> = (0..=200)
            .map(|k| vec![lo[0] + (hi[0] - lo[0]) * k as f64 / 200.0])
            .collect();
        let (c_f, l_f) = crate::constants::numeric_outer_constants(self, &grid);
        Ok(ConstantReport {
            c_f,
            l_f,
            c_g: 1.0,
            v_g: 0.0,
            c_h: 0.0,
            v_h: 0.0,
            c_q: 0.0,
            l_q: 0.0,
            d_x: self.set.squared_diameter(),
            outer_numeric: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_unit_case() {
        let mu = mm1_optimal_mu(1.0, 1.0, 1.0).unwrap();
        assert!((mu - (2.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!(mm1_utility_derivative(mu, 1.0, 1.0, 1.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn optimum_beats_neighbours() {
        let mu = mm1_optimal_mu(2.0, 3.0, 0.5).unwrap();
        let u = mm1_utility(mu, 2.0, 3.0, 0.5).unwrap();
        assert!(u >= mm1_utility(mu + 0.1, 2.0, 3.0, 0.5).unwrap());
        assert!(u >= mm1_utility(mu - 0.1, 2.0, 3.0, 0.5).unwrap());
    }

    #[test]
    fn unstable_queue_is_rejected() {
        assert!(mm1_utility(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(mm1_utility(0.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn box_contains_optimum() {
        let p = Mm1Problem::new(3.0, 2.0, 5.0).unwrap();
        assert!(p.feasible_set().contains(&[p.optimum()], 0.0));
    }
}
