//! Regularity constants of an instance: second moments and Lipschitz
//! bounds of the inner and outer maps and the squared diameter of the
//! feasible set.

use serde::{Deserialize, Serialize};

use cscgd_core::diagnostics::MomentConstants;
use cscgd_core::{CompositionalProblem, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    /// Bound on `||∇f||²`.
    pub c_f: f64,
    /// Lipschitz constant of `∇f`.
    pub l_f: f64,
    /// Bound on `E||∇g||²`.
    pub c_g: f64,
    /// Bound on `E||g - E g||²`.
    pub v_g: f64,
    pub c_h: f64,
    pub v_h: f64,
    pub c_q: f64,
    pub l_q: f64,
    /// Squared diameter of the feasible set.
    pub d_x: f64,
    /// True when `c_f` and `l_f` are numerical estimates rather than
    /// closed-form bounds.
    pub outer_numeric: bool,
}

impl ConstantReport {
    pub fn moments(&self) -> MomentConstants {
        MomentConstants {
            c_f: self.c_f,
            c_g: self.c_g,
            c_q: self.c_q,
            c_h: self.c_h,
        }
    }
}

/// A problem that can report its regularity constants.
pub trait ReportsConstants {
    fn constant_report(&self) -> Result<ConstantReport>;
}

/// An instance usable both by the solver and by the diagnostics.
pub trait QueuingProblem: CompositionalProblem + ReportsConstants {}

impl<T: CompositionalProblem + ReportsConstants> QueuingProblem for T {}

/// Largest `||∇f(y)||²` and a central-difference estimate of the largest
/// local Lipschitz constant of `∇f` (Frobenius norm of the Hessian) over
/// the given points.
pub fn numeric_outer_constants<P: CompositionalProblem + ?Sized>(problem: &P, ys: &[Vec<f64>]) -> (f64, f64) {
    let mut c_f: f64 = 0.0;
    let mut l_f: f64 = 0.0;
    for y in ys {
        let g = problem.outer_f_gradient(y);
        c_f = c_f.max(g.iter().map(|v| v * v).sum());
        let mut frob = 0.0;
        for k in 0..y.len() {
            let h = 1e-5 * y[k].abs().max(1.0);
            let mut up = y.clone();
            let mut dn = y.clone();
            up[k] += h;
            dn[k] -= h;
            let gu = problem.outer_f_gradient(&up);
            let gd = problem.outer_f_gradient(&dn);
            frob += gu
                .iter()
                .zip(&gd)
                .map(|(a, b)| ((a - b) / (2.0 * h)).powi(2))
                .sum::<f64>();
        }
        l_f = l_f.max(frob.sqrt());
    }
    (c_f, l_f)
}

/// Deterministic spread of feasible designs: the box corners projected
/// onto the set, the box midpoint, and `count` uniformly drawn box points
/// projected onto the set.
pub fn sample_designs(set: &cscgd_core::FeasibleSet, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = cscgd_core::RngStream::new(seed, 0);
    let (lo, hi) = set.bounds();
    let mut out = Vec::new();
    if lo.len() <= 8 {
        for c in set.box_corners() {
            out.push(set.project(&c)?);
        }
    }
    out.push(set.project(&set.box_midpoint())?);
    for _ in 0..count {
        let v: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.uniform()).collect();
        out.push(set.project(&v)?);
    }
    Ok(out)
}

/// Numerical `(C_f, L_f)` at the exact inner expectations of sampled
/// feasible designs.
pub fn numeric_outer_constants_over_designs<P: CompositionalProblem + ?Sized>(problem: &P) -> Result<(f64, f64)> {
    let designs = sample_designs(problem.feasible_set(), 256, 0x5eed)?;
    let ys: Vec<Vec<f64>> = designs
        .iter()
        .filter_map(|x| problem.exact_expectations(x).map(|(y, _)| y))
        .collect();
    if ys.is_empty() {
        return Err(cscgd_core::Error::Config(
            "numerical outer constants need closed-form inner expectations".into(),
        ));
    }
    Ok(numeric_outer_constants(problem, &ys))
}
