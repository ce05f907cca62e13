//! Randomized invariant checks behind `cscgd check`: penalty convexity
//! and derivative, projection idempotence and nonexpansiveness.

use serde::Serialize;

use cscgd_core::linalg::dist_sq;
use cscgd_core::penalty::{kink_distance, penalty_gradient, penalty_value};
use cscgd_core::{FeasibleSet, PenaltyParams, RngStream};

use crate::error::Result;

pub const PROJECTION_TOL: f64 = 1e-10;
pub const CONVEXITY_TOL: f64 = 1e-12;
pub const DERIVATIVE_STEP: f64 = 1e-6;
pub const DERIVATIVE_REL_TOL: f64 = 1e-4;
/// Points closer than this to a kink are not differentiated.
pub const KINK_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub worst: f64,
}

impl PropertyReport {
    fn new(property: &'static str) -> Self {
        Self {
            property,
            trials: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    /// Records a trial whose excess over its tolerance is `excess`.
    fn record(&mut self, excess: f64) {
        self.trials += 1;
        self.worst = self.worst.max(excess);
        if excess > 0.0 {
            self.failures += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }
}

fn uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

fn random_vec(rng: &mut RngStream, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}

fn random_penalty(rng: &mut RngStream) -> Result<PenaltyParams> {
    let gamma = if rng.uniform() < 0.3 { 0.0 } else { uniform(rng, 0.0, 1.0) };
    Ok(PenaltyParams::new(gamma, gamma + uniform(rng, 0.05, 4.0))?)
}

/// Midpoint convexity, nonnegativity and the zero set, over `trials`
/// random segments.
pub fn penalty_convexity(trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut rng = RngStream::new(seed, 0);
    let mut rep = PropertyReport::new("penalty convexity");
    for _ in 0..trials {
        let params = random_penalty(&mut rng)?;
        let j = 1 + rng.index(4);
        let u = random_vec(&mut rng, j, -6.0, 6.0);
        let v = random_vec(&mut rng, j, -6.0, 6.0);
        let mid: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
        let (pu, pv, pm) = (
            penalty_value(&u, &params)?,
            penalty_value(&v, &params)?,
            penalty_value(&mid, &params)?,
        );
        let scale = 1.0 + pu.abs().max(pv.abs());
        let mut excess = pm - 0.5 * (pu + pv) - CONVEXITY_TOL * scale;
        excess = excess.max(-pu).max(-pv);
        // Zero exactly when every shifted argument is nonpositive.
        let below = |w: &[f64]| w.iter().all(|x| x + params.gamma <= 0.0);
        if below(&u) != (pu == 0.0) || below(&v) != (pv == 0.0) {
            excess = excess.max(f64::INFINITY);
        }
        rep.record(excess);
    }
    Ok(rep)
}

/// Gradient against centered differences away from the kinks.
pub fn penalty_derivative(trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut rng = RngStream::new(seed, 1);
    let mut rep = PropertyReport::new("penalty derivative");
    while rep.trials < trials {
        let params = random_penalty(&mut rng)?;
        let j = 1 + rng.index(4);
        let w = random_vec(&mut rng, j, -6.0, 6.0);
        if kink_distance(&w, &params) < KINK_MARGIN {
            continue;
        }
        let grad = penalty_gradient(&w, &params)?;
        let mut excess = f64::NEG_INFINITY;
        for k in 0..j {
            let mut hi = w.clone();
            let mut lo = w.clone();
            hi[k] += DERIVATIVE_STEP;
            lo[k] -= DERIVATIVE_STEP;
            let fd = (penalty_value(&hi, &params)? - penalty_value(&lo, &params)?) / (2.0 * DERIVATIVE_STEP);
            let err = (fd - grad[k]).abs() / grad[k].abs().max(1.0);
            excess = excess.max(err - DERIVATIVE_REL_TOL);
        }
        rep.record(excess);
    }
    Ok(rep)
}

/// The set variants exercised by the projection checks.
pub fn projection_sets() -> Result<Vec<(&'static str, FeasibleSet)>> {
    Ok(vec![
        ("box", FeasibleSet::boxed(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 7.0])?),
        (
            "capped box",
            FeasibleSet::box_with_sum_cap(vec![0.5, 0.5, 0.5], vec![5.0, 7.0, 9.0], 15.0)?,
        ),
        (
            "product",
            FeasibleSet::product(vec![
                FeasibleSet::box_with_sum_cap(vec![0.1; 3], vec![15.0; 3], 20.0)?,
                FeasibleSet::box_with_sum_cap(vec![14.0; 3], vec![100.0; 3], 150.0)?,
            ])?,
        ),
    ])
}

/// Idempotence and nonexpansiveness on random pairs drawn around the
/// bounding box of each set, `trials` pairs per set.
pub fn projection_properties(trials: usize, seed: u64) -> Result<Vec<PropertyReport>> {
    let mut idem = PropertyReport::new("projection idempotence");
    let mut nonexp = PropertyReport::new("projection nonexpansiveness");
    for (k, (_, set)) in projection_sets()?.into_iter().enumerate() {
        let mut rng = RngStream::new(seed, 10 + k as u64);
        let (lo, hi) = set.bounds();
        let draw = |rng: &mut RngStream| -> Vec<f64> {
            lo.iter()
                .zip(&hi)
                .map(|(l, h)| {
                    let w = h - l;
                    uniform(rng, l - w, h + w)
                })
                .collect()
        };
        for _ in 0..trials {
            let u = draw(&mut rng);
            let v = draw(&mut rng);
            let pu = set.project(&u)?;
            let pv = set.project(&v)?;
            let ppu = set.project(&pu)?;
            idem.record(dist_sq(&pu, &ppu).sqrt() - PROJECTION_TOL);
            nonexp.record(dist_sq(&pu, &pv).sqrt() - dist_sq(&u, &v).sqrt() - PROJECTION_TOL);
        }
    }
    Ok(vec![idem, nonexp])
}
