//! Brute-force optimum of the ergodic-capacity instance. Every grid point
//! shares one set of channel draws, so differences between points carry
//! no independent sampling noise. The objective separates over queues once
//! the powers are fixed, which keeps the search exhaustive but cheap.

use serde::Serialize;

use cscgd_core::{Distribution, RngStream};
use cscgd_queuing::Mg1ErgodicInstance;

use crate::error::{OracleError, Result};
use crate::grid::{separable_min, AxisSpec, GridSearchResult};

pub const MIN_MC_SAMPLES: usize = 100_000;

/// Per-queue grids, shared by every queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example2GridSpec {
    pub lambda: AxisSpec,
    pub power: AxisSpec,
}

impl Example2GridSpec {
    /// Covers `[λ^min, λ^max]` and the powers compatible with the budget,
    /// `[P^min, P^max - (N - 1) P^min]`.
    pub fn covering(inst: &Mg1ErgodicInstance, lambda_points: usize, power_points: usize) -> Result<Self> {
        let n = inst.queues() as f64;
        let p_hi = inst.p_max.min(inst.p_max - (n - 1.0) * inst.p_min);
        Ok(Self {
            lambda: AxisSpec::new(inst.lambda_min, inst.lambda_max, lambda_points)?,
            power: AxisSpec::new(inst.p_min, p_hi.max(inst.p_min), power_points)?,
        })
    }
}

fn knee_inverse(s: f64, eps: f64) -> f64 {
    if s > eps {
        1.0 / s
    } else {
        (2.0 * eps - s) / (eps * eps)
    }
}

fn knee_inverse_derivative(s: f64, eps: f64) -> f64 {
    if s > eps {
        -1.0 / (s * s)
    } else {
        -1.0 / (eps * eps)
    }
}

struct Tables {
    /// `rates[i][j][k] = B_i log(1 + ζ_{k,i} p_j)`.
    rates: Vec<Vec<Vec<f64>>>,
    /// Sample means of `1/b` and `1/b²` per queue and power.
    inv1: Vec<Vec<f64>>,
    inv2: Vec<Vec<f64>>,
}

fn build_tables(inst: &Mg1ErgodicInstance, powers: &[f64], samples: usize, seed: u64) -> Tables {
    let n = inst.queues();
    let dist = Distribution::TruncatedChiSquared {
        dof: 2 * inst.antennas,
        lower: inst.channel_lower,
    };
    let mut rng = RngStream::new(seed, 0);
    let mut zeta = vec![Vec::with_capacity(samples); n];
    for _ in 0..samples {
        for z in zeta.iter_mut() {
            z.push(dist.draw(&mut rng));
        }
    }
    let mut rates = Vec::with_capacity(n);
    let (mut inv1, mut inv2) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let bw = inst.bandwidths[i];
        let per_power: Vec<Vec<f64>> = powers
            .iter()
            .map(|p| zeta[i].iter().map(|z| bw * (z * p).ln_1p()).collect())
            .collect();
        inv1.push(per_power.iter().map(|b| b.iter().map(|v| 1.0 / v).sum::<f64>() / samples as f64).collect());
        inv2.push(per_power.iter().map(|b| b.iter().map(|v| v.powi(-2)).sum::<f64>() / samples as f64).collect());
        rates.push(per_power);
    }
    Tables { rates, inv1, inv2 }
}

fn queue_term(inst: &Mg1ErgodicInstance, i: usize, lam: f64, m1: f64, m2: f64) -> f64 {
    let w = &inst.weights;
    w.phi[i] * 0.5 * lam * m2 * knee_inverse(1.0 - lam * m1, inst.knee_eps) - w.psi[i] * lam.ln()
}

/// Calls `f` on every index vector of the product `0..dims[0] × ...`.
fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; dims.len()];
    loop {
        f(&idx);
        let mut axis = 0;
        loop {
            if axis == dims.len() {
                return;
            }
            idx[axis] += 1;
            if idx[axis] < dims[axis] {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Best grid point of the sample-average problem, with delta-method
/// standard errors of the objective and of the min-rate constraint there.
pub fn example2_fstar(
    inst: &Mg1ErgodicInstance,
    mc_samples: usize,
    grid: &Example2GridSpec,
    seed: u64,
) -> Result<GridSearchResult> {
    inst.validate()?;
    if mc_samples < MIN_MC_SAMPLES {
        return Err(OracleError::Invalid(format!(
            "at least {MIN_MC_SAMPLES} Monte-Carlo samples are required, got {mc_samples}"
        )));
    }
    let n = inst.queues();
    let lambdas = grid.lambda.values();
    let powers = grid.power.values();
    let t = build_tables(inst, &powers, mc_samples, seed);
    let lambda_coords = vec![lambdas.clone(); n];
    let evaluated = (lambdas.len() * powers.len()).pow(n as u32);

    let mut best: Option<(Vec<usize>, Vec<usize>, f64, f64)> = None;
    let mut feasible = 0usize;
    let mut mins = vec![0.0; mc_samples];
    for_each_index(&vec![powers.len(); n], |pj| {
        let budget: f64 = pj.iter().map(|&j| powers[j]).sum();
        if budget > inst.p_max * (1.0 + 1e-12) {
            return;
        }
        for (k, m) in mins.iter_mut().enumerate() {
            *m = (0..n).map(|i| t.rates[i][pj[i]][k]).fold(f64::INFINITY, f64::min);
        }
        let mean_min = mins.iter().sum::<f64>() / mc_samples as f64;
        let q = inst.r_min - mean_min;
        if q > 0.0 {
            return;
        }
        let tables: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let (m1, m2) = (t.inv1[i][pj[i]], t.inv2[i][pj[i]]);
                lambdas.iter().map(|&l| queue_term(inst, i, l, m1, m2)).collect()
            })
            .collect();
        if let Some((li, v, count)) = separable_min(&tables, &lambda_coords, Some(inst.lambda_lim)) {
            feasible += count;
            if best.as_ref().is_none_or(|b| v < b.2) {
                best = Some((li, pj.to_vec(), v, q));
            }
        }
    });
    let (li, pj, value, q) = best.ok_or(OracleError::EmptyGrid { evaluated })?;

    // Delta method: F depends on the sample means of 1/b_i and 1/b_i².
    let lam: Vec<f64> = li.iter().map(|&k| lambdas[k]).collect();
    let (mut d1, mut d2) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let (m1, m2) = (t.inv1[i][pj[i]], t.inv2[i][pj[i]]);
        let s = 1.0 - lam[i] * m1;
        let c = inst.weights.phi[i] * 0.5 * lam[i];
        d1[i] = -c * m2 * knee_inverse_derivative(s, inst.knee_eps) * lam[i];
        d2[i] = c * knee_inverse(s, inst.knee_eps);
    }
    let (mut f_sum, mut f_sq, mut q_sum, mut q_sq) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..mc_samples {
        let lin: f64 = (0..n)
            .map(|i| {
                let b = t.rates[i][pj[i]][k];
                d1[i] / b + d2[i] / (b * b)
            })
            .sum();
        let m = (0..n).map(|i| t.rates[i][pj[i]][k]).fold(f64::INFINITY, f64::min);
        f_sum += lin;
        f_sq += lin * lin;
        q_sum += m;
        q_sq += m * m;
    }
    let nn = mc_samples as f64;
    let se = |s: f64, sq: f64| ((sq - s * s / nn) / (nn - 1.0) / nn).max(0.0).sqrt();
    let mut point = lam;
    point.extend(pj.iter().map(|&j| powers[j]));
    Ok(GridSearchResult {
        axes: vec![grid.lambda; n].into_iter().chain(vec![grid.power; n]).collect(),
        best_point: point,
        best_value: value,
        best_value_std_err: Some(se(f_sum, f_sq)),
        best_constraint: Some(q),
        best_constraint_std_err: Some(se(q_sum, q_sq)),
        evaluated,
        feasible,
    })
}
