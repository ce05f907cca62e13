//! Local minimum of a sample-average approximation: one fixed batch of
//! draws turns `f(E g(x, ζ))` into a smooth deterministic function, which
//! projected gradient descent then minimizes. For nonconvex instances this
//! is a reference value, not a certificate.

use serde::Serialize;

use cscgd_core::{CompositionalProblem, Matrix, RngStream};

use crate::error::{OracleError, Result};
use crate::projection::{gradient_map_norm, project};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 0x0bad_5eed,
            tol: 1e-8,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_map_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Saa<'a> {
    problem: &'a dyn CompositionalProblem,
    draws: Vec<Vec<f64>>,
}

impl Saa<'_> {
    fn inner(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.problem.dims().m];
        for s in &self.draws {
            for (a, g) in y.iter_mut().zip(self.problem.inner_g(x, s)) {
                *a += g;
            }
        }
        let n = self.draws.len() as f64;
        y.iter_mut().for_each(|v| *v /= n);
        y
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.problem.outer_f(&self.inner(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.problem.dims();
        let mut jac = Matrix::zeros(d.n, d.m);
        for s in &self.draws {
            let j = self.problem.inner_g_jacobian(x, s);
            for r in 0..d.n {
                for c in 0..d.m {
                    jac.add_to(r, c, j.get(r, c));
                }
            }
        }
        let gf = self.problem.outer_f_gradient(&self.inner(x));
        let n = self.draws.len() as f64;
        jac.mul_vec(&gf).into_iter().map(|v| v / n).collect()
    }
}

/// Projected gradient descent with backtracking from `start`. Stops at
/// gradient-map norm `tol`; reaching `max_iter` is reported, not an error.
pub fn saa_local_minimum(problem: &dyn CompositionalProblem, start: &[f64], opts: &LocalOptions) -> Result<LocalMinimum> {
    if opts.samples == 0 {
        return Err(OracleError::Invalid("need at least one sample".into()));
    }
    let mut rng = RngStream::new(opts.seed, 0);
    let saa = Saa {
        problem,
        draws: (0..opts.samples).map(|_| problem.sample(&mut rng)).collect(),
    };
    let set = problem.feasible_set();
    let mut x = project(set, start)?;
    let mut step: f64 = 1.0;
    let mut res = f64::INFINITY;
    for it in 0..opts.max_iter {
        let g = saa.gradient(&x);
        res = gradient_map_norm(set, &x, &g)?;
        if res < opts.tol {
            return Ok(LocalMinimum {
                value: saa.value(&x),
                x,
                gradient_map_norm: res,
                iterations: it,
                converged: true,
            });
        }
        let fx = saa.value(&x);
        step *= 2.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let cand = project(set, &trial)?;
            let lin: f64 = cand.iter().zip(&x).zip(&g).map(|((c, a), gi)| gi * (c - a)).sum();
            let sq: f64 = cand.iter().zip(&x).map(|(c, a)| (c - a).powi(2)).sum();
            if saa.value(&cand) <= fx + lin + sq / (2.0 * step) + 4.0 * f64::EPSILON * fx.abs() {
                x = cand;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Err(OracleError::NoConvergence {
                    method: "sample-average descent (step underflow)",
                    iterations: it,
                    residual: res,
                });
            }
        }
    }
    Ok(LocalMinimum {
        value: saa.value(&x),
        x,
        gradient_map_norm: res,
        iterations: opts.max_iter,
        converged: false,
    })
}
