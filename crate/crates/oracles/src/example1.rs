//! Optimal value of the wired M/G/1 instance. Expectations enter only
//! through `E L` and `E L²`, so the problem is a deterministic convex
//! program in `λ`. Each delay is increasing in its own `λ_i`, which turns
//! the delay constraint into tighter upper bounds.

use serde::Serialize;

use cscgd_core::FeasibleSet;
use cscgd_queuing::Mg1WiredInstance;

use crate::error::{OracleError, Result};
use crate::grid::{separable_min, AxisSpec, GridSearchResult};
use crate::moments::QuadratureMoments;
use crate::projection::{gradient_map_norm, project};

pub const STATIONARITY_TOL: f64 = 1e-10;
const MAX_ITER: usize = 100_000;
const GRID_POINTS: usize = 400;

/// Deterministic reformulation with quadrature moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example1Program {
    pub capacities: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub d_max: f64,
    pub lower: f64,
    /// Box upper bounds tightened by the delay constraint.
    pub upper: Vec<f64>,
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example1Optimum {
    pub f_star: f64,
    pub x_star: Vec<f64>,
    /// `max_i delay_i(λ*) - D^max`.
    pub constraint: f64,
    pub gradient_map_norm: f64,
    pub iterations: usize,
    pub grid: GridSearchResult,
}

impl Example1Program {
    pub fn new(inst: &Mg1WiredInstance) -> Result<Self> {
        inst.validate()?;
        let n = inst.queues();
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for i in 0..n {
            let m = QuadratureMoments::compute(&inst.length_distribution(i), &[1, 2])?;
            first.push(m.get(1).unwrap_or(f64::NAN));
            second.push(m.get(2).unwrap_or(f64::NAN));
        }
        let upper: Vec<f64> = (0..n)
            .map(|i| {
                let c = inst.capacities[i];
                let bound = 2.0 * c * c * inst.d_max / (second[i] + 2.0 * c * inst.d_max * first[i]);
                inst.lambda_max[i].min(bound)
            })
            .collect();
        if let Some(i) = (0..n).find(|&i| upper[i] < inst.lambda_min) {
            return Err(OracleError::Infeasible(format!(
                "queue {i}: the delay bound allows at most λ = {} < λ^min = {}",
                upper[i], inst.lambda_min
            )));
        }
        if inst.lambda_min * n as f64 > inst.lambda_lim {
            return Err(OracleError::Infeasible("N λ^min exceeds λ^lim".into()));
        }
        Ok(Self {
            capacities: inst.capacities.clone(),
            first,
            second,
            psi: inst.weights.psi.clone(),
            phi: inst.weights.phi.clone(),
            d_max: inst.d_max,
            lower: inst.lambda_min,
            upper,
            cap: inst.lambda_lim,
        })
    }

    pub fn queues(&self) -> usize {
        self.capacities.len()
    }

    pub fn set(&self) -> Result<FeasibleSet> {
        Ok(FeasibleSet::box_with_sum_cap(
            vec![self.lower; self.queues()],
            self.upper.clone(),
            self.cap,
        )?)
    }

    pub fn delay(&self, i: usize, lam: f64) -> f64 {
        let c = self.capacities[i];
        lam * self.second[i] / (2.0 * c * (c - lam * self.first[i]))
    }

    /// One summand of the objective; infinite where the queue is unstable.
    pub fn term(&self, i: usize, lam: f64) -> f64 {
        let c = self.capacities[i];
        if lam <= 0.0 || lam * self.first[i] >= c {
            return f64::INFINITY;
        }
        self.phi[i] * self.delay(i, lam) - self.psi[i] * (lam * self.first[i]).ln()
    }

    fn term_derivative(&self, i: usize, lam: f64) -> f64 {
        let c = self.capacities[i];
        let s = c - lam * self.first[i];
        self.phi[i] * self.second[i] / (2.0 * s * s) - self.psi[i] / lam
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        (0..self.queues()).map(|i| self.term(i, x[i])).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.queues()).map(|i| self.term_derivative(i, x[i])).collect()
    }

    /// `F(b) - F(a)` without cancellation between the two large values.
    pub fn objective_difference(&self, a: &[f64], b: &[f64]) -> f64 {
        (0..self.queues())
            .map(|i| {
                let c = self.capacities[i];
                let (sa, sb) = (c - a[i] * self.first[i], c - b[i] * self.first[i]);
                if !(sb > 0.0 && b[i] > 0.0) {
                    return f64::INFINITY;
                }
                let delay = self.phi[i] * self.second[i] / (2.0 * c) * c * (b[i] - a[i]) / (sa * sb);
                delay - self.psi[i] * ((b[i] - a[i]) / a[i]).ln_1p()
            })
            .sum()
    }

    pub fn constraint(&self, x: &[f64]) -> f64 {
        (0..self.queues())
            .map(|i| self.delay(i, x[i]))
            .fold(f64::NEG_INFINITY, f64::max)
            - self.d_max
    }

    /// Projected gradient descent with backtracking on the quadratic
    /// upper bound, from the box midpoint, until the unit-step gradient map
    /// vanishes.
    pub fn solve(&self) -> Result<(Vec<f64>, f64, usize)> {
        let set = self.set()?;
        let mid: Vec<f64> = self.upper.iter().map(|u| 0.5 * (self.lower + u)).collect();
        let mut x = project(&set, &mid)?;
        let mut step: f64 = 1.0;
        for it in 0..MAX_ITER {
            let g = self.gradient(&x);
            let res = gradient_map_norm(&set, &x, &g)?;
            if res < STATIONARITY_TOL {
                return Ok((x, res, it));
            }
            step = (2.0 * step).min(1e6);
            x = loop {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
                let cand = project(&set, &trial)?;
                let lin: f64 = cand.iter().zip(&x).zip(&g).map(|((c, a), gi)| gi * (c - a)).sum();
                let sq: f64 = cand.iter().zip(&x).map(|(c, a)| (c - a).powi(2)).sum();
                if self.objective_difference(&x, &cand) <= lin + sq / (2.0 * step) {
                    break cand;
                }
                step *= 0.5;
                if step < 1e-12 {
                    return Err(OracleError::NoConvergence {
                        method: "projected gradient (step underflow)",
                        iterations: it,
                        residual: res,
                    });
                }
            };
        }
        let res = gradient_map_norm(&set, &x, &self.gradient(&x))?;
        Err(OracleError::NoConvergence {
            method: "projected gradient",
            iterations: MAX_ITER,
            residual: res,
        })
    }

    /// Exact minimum over a product grid with `points` per axis.
    pub fn grid(&self, points: usize) -> Result<GridSearchResult> {
        let n = self.queues();
        let axes: Vec<AxisSpec> = (0..n)
            .map(|i| AxisSpec::new(self.lower, self.upper[i], points))
            .collect::<Result<_>>()?;
        let coords: Vec<Vec<f64>> = axes.iter().map(AxisSpec::values).collect();
        let tables: Vec<Vec<f64>> = (0..n)
            .map(|i| coords[i].iter().map(|&l| self.term(i, l)).collect())
            .collect();
        let evaluated = points.pow(n as u32);
        let (idx, value, feasible) =
            separable_min(&tables, &coords, Some(self.cap)).ok_or(OracleError::EmptyGrid { evaluated })?;
        let best: Vec<f64> = idx.iter().enumerate().map(|(i, &k)| coords[i][k]).collect();
        Ok(GridSearchResult {
            best_constraint: Some(self.constraint(&best)),
            best_point: best,
            best_value: value,
            best_value_std_err: None,
            best_constraint_std_err: None,
            axes,
            evaluated,
            feasible,
        })
    }
}

/// `F*` and `λ*` for a wired instance, cross-checked against a dense grid.
pub fn example1_fstar(inst: &Mg1WiredInstance) -> Result<Example1Optimum> {
    let prog = Example1Program::new(inst)?;
    let (x, res, iterations) = prog.solve()?;
    let f_star = prog.objective(&x);
    let grid = prog.grid(GRID_POINTS)?;
    // The grid is a subset of the feasible set, so it can only be worse; it
    // must also be close, or the descent stalled somewhere else.
    let tol = 1e-9 * f_star.abs().max(1.0);
    if grid.best_value < f_star - tol || grid.best_value - f_star > 1e-2 * f_star.abs().max(1.0) {
        return Err(OracleError::Invalid(format!(
            "descent value {f_star} disagrees with grid value {}",
            grid.best_value
        )));
    }
    Ok(Example1Optimum {
        f_star,
        constraint: prog.constraint(&x),
        x_star: x,
        gradient_map_norm: res,
        iterations,
        grid,
    })
}
