//! Centered finite differences against analytic Jacobians.

use std::fmt;

use serde::Serialize;

use cscgd_core::{CompositionalProblem, Matrix, RngStream};

use crate::error::Result;
use crate::projection::project;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorNorm {
    /// Each output's errors are divided by the largest entry of its own
    /// gradient (floored at `1e-4 · max(1, |F_j|)`, below which differencing
    /// cannot resolve relative error).
    PerOutput,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FdOutcome {
    Checked { max_error: f64 },
    Skipped { reason: String },
}

impl FdOutcome {
    pub fn error(&self) -> Option<f64> {
        match self {
            FdOutcome::Checked { max_error } => Some(*max_error),
            FdOutcome::Skipped { .. } => None,
        }
    }
}

impl fmt::Display for FdOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FdOutcome::Checked { max_error } => write!(f, "max error {max_error:.3e}"),
            FdOutcome::Skipped { reason } => write!(f, "skipped: {reason}"),
        }
    }
}

/// Compares `jac` (`[J]_{kj} = ∂F_j/∂v_k`) with centered differences of
/// `map` at `point`, with step `h · max(1, |v_k|)`. Points within
/// `10 h` (scaled) of a kink or safeguard switch are skipped.
pub fn finite_difference_check(
    map: &dyn Fn(&[f64]) -> Vec<f64>,
    jac: &Matrix,
    point: &[f64],
    h: f64,
    norm: ErrorNorm,
    kink_distance: f64,
) -> FdOutcome {
    let scale = point.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    if !(kink_distance > 10.0 * h * scale) {
        return FdOutcome::Skipped {
            reason: "kink proximity".into(),
        };
    }
    let base = map(point);
    let outputs = base.len();
    let mut fd = Matrix::zeros(point.len(), outputs);
    for k in 0..point.len() {
        let hk = h * point[k].abs().max(1.0);
        let mut up = point.to_vec();
        let mut dn = point.to_vec();
        up[k] += hk;
        dn[k] -= hk;
        let (fu, fdn) = (map(&up), map(&dn));
        for j in 0..outputs {
            fd.set(k, j, (fu[j] - fdn[j]) / (2.0 * hk));
        }
    }
    let mut worst: f64 = 0.0;
    for j in 0..outputs {
        let denom = match norm {
            ErrorNorm::Absolute => 1.0,
            ErrorNorm::PerOutput => (0..point.len())
                .map(|k| jac.get(k, j).abs().max(fd.get(k, j).abs()))
                .fold(1e-4 * base[j].abs().max(1.0), f64::max),
        };
        for k in 0..point.len() {
            let e = (jac.get(k, j) - fd.get(k, j)).abs() / denom;
            worst = worst.max(if e.is_nan() { f64::INFINITY } else { e });
        }
    }
    FdOutcome::Checked { max_error: worst }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapReport {
    pub map: &'static str,
    pub checked: usize,
    pub skipped: usize,
    pub max_error: f64,
    pub worst_point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemFdReport {
    pub problem: String,
    pub maps: Vec<MapReport>,
}

impl ProblemFdReport {
    pub fn max_error(&self) -> f64 {
        self.maps.iter().map(|m| m.max_error).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64, min_checked: usize) -> bool {
        self.maps.iter().all(|m| m.max_error <= tol && m.checked >= min_checked)
    }
}

/// Uniform point in the bounding box, projected onto the set and pulled
/// 5% toward the box midpoint so every probe stays in the domain.
pub fn random_interior_point(problem: &dyn CompositionalProblem, rng: &mut RngStream) -> Result<Vec<f64>> {
    let set = problem.feasible_set();
    let (lo, hi) = set.bounds();
    let raw: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + rng.uniform() * (h - l)).collect();
    let p = project(set, &raw)?;
    let mid = set.box_midpoint();
    Ok(p.iter().zip(&mid).map(|(a, m)| m + 0.95 * (a - m)).collect())
}

/// Checks `g`, `h`, `f` and `q` of a problem at `points` random interior
/// designs, each with its own sample; `f` and `q` are probed at the exact
/// inner expectations when available, otherwise at the sampled values.
pub fn check_problem(problem: &dyn CompositionalProblem, points: usize, h: f64, seed: u64) -> Result<ProblemFdReport> {
    let dims = problem.dims();
    let mut rng = RngStream::new(seed, 0);
    let names = ["g", "h", "f", "q"];
    let mut reports: Vec<MapReport> = names
        .iter()
        .map(|m| MapReport {
            map: m,
            checked: 0,
            skipped: 0,
            max_error: 0.0,
            worst_point: Vec::new(),
        })
        .collect();
    let mut record = |slot: usize, outcome: FdOutcome, at: &[f64]| {
        let r = &mut reports[slot];
        match outcome.error() {
            Some(e) => {
                r.checked += 1;
                if e > r.max_error || r.worst_point.is_empty() {
                    r.max_error = r.max_error.max(e);
                    r.worst_point = at.to_vec();
                }
            }
            None => r.skipped += 1,
        }
    };
    for _ in 0..points {
        let x = random_interior_point(problem, &mut rng)?;
        let zeta = problem.sample(&mut rng);
        let kink = problem.inner_kink_distance(&x, &zeta);
        let out = finite_difference_check(
            &|v: &[f64]| problem.inner_g(v, &zeta),
            &problem.inner_g_jacobian(&x, &zeta),
            &x,
            h,
            ErrorNorm::PerOutput,
            kink,
        );
        record(0, out, &x);
        if dims.j > 0 {
            let out = finite_difference_check(
                &|v: &[f64]| problem.inner_h(v, &zeta),
                &problem.inner_h_jacobian(&x, &zeta),
                &x,
                h,
                ErrorNorm::PerOutput,
                kink,
            );
            record(1, out, &x);
        }
        let (y, z) = problem
            .exact_expectations(&x)
            .unwrap_or_else(|| (problem.inner_g(&x, &zeta), problem.inner_h(&x, &zeta)));
        let grad = problem.outer_f_gradient(&y);
        let col = Matrix::from_flat(grad.len(), 1, grad);
        let out = finite_difference_check(
            &|v: &[f64]| vec![problem.outer_f(v)],
            &col,
            &y,
            h,
            ErrorNorm::PerOutput,
            problem.outer_f_kink_distance(&y),
        );
        record(2, out, &y);
        if dims.j > 0 {
            let out = finite_difference_check(
                &|v: &[f64]| problem.outer_q(v),
                &problem.outer_q_jacobian(&z),
                &z,
                h,
                ErrorNorm::PerOutput,
                problem.outer_q_kink_distance(&z),
            );
            record(3, out, &z);
        }
    }
    if dims.j == 0 {
        reports.retain(|r| r.map != "h" && r.map != "q");
    }
    Ok(ProblemFdReport {
        problem: problem.name(),
        maps: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_map_is_exact() {
        let a = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![4.0, 0.0]]);
        let map = |v: &[f64]| {
            (0..2)
                .map(|j| (0..3).map(|k| a.get(k, j) * v[k]).sum())
                .collect::<Vec<f64>>()
        };
        let out = finite_difference_check(&map, &a, &[0.3, -1.0, 2.0], 1e-6, ErrorNorm::PerOutput, f64::INFINITY);
        assert!(out.error().unwrap() < 1e-9);
    }

    #[test]
    fn near_kink_is_skipped() {
        let map = |v: &[f64]| vec![v[0].abs()];
        let j = Matrix::from_rows(&[vec![1.0]]);
        let out = finite_difference_check(&map, &j, &[1e-7], 1e-6, ErrorNorm::Absolute, 1e-7);
        assert_eq!(out.to_string(), "skipped: kink proximity");
    }
}
