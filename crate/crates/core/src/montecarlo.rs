//! Monte-Carlo expectations of the inner maps and evaluation of the true
//! objective and constraints at a fixed design.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, Matrix};
use crate::penalty::PenaltyParams;
use crate::problem::CompositionalProblem;
use crate::rng::RngStream;

/// Streaming mean and covariance (Welford).
#[derive(Debug, Clone)]
pub struct Welford {
    n: usize,
    mean: Vec<f64>,
    comoment: Vec<f64>,
}

impl Welford {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn push(&mut self, v: &[f64]) {
        let dim = self.mean.len();
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        let before: Vec<f64> = v.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&before) {
            *m += d * inv;
        }
        for i in 0..dim {
            let after_i = v[i] - self.mean[i];
            for j in 0..dim {
                self.comoment[i * dim + j] += before[j] * after_i;
            }
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn finish(self) -> MeanEstimate {
        let dim = self.mean.len();
        let denom = (self.n.max(2) - 1) as f64;
        let covariance = Matrix::from_flat(dim, dim, self.comoment.iter().map(|c| c / denom).collect());
        let std_err = (0..dim)
            .map(|i| (covariance.get(i, i) / self.n as f64).sqrt())
            .collect();
        MeanEstimate {
            mean: self.mean,
            std_err,
            covariance,
            samples: self.n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeanEstimate {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Sample covariance of one draw (not of the mean).
    pub covariance: Matrix,
    pub samples: usize,
}

impl MeanEstimate {
    /// Delta-method standard error of `φ(mean)` for a map with gradient
    /// `grad` at the mean.
    pub fn delta_std_err(&self, grad: &[f64]) -> f64 {
        let cv = self.covariance.mul_vec(grad);
        let var: f64 = grad.iter().zip(&cv).map(|(a, b)| a * b).sum();
        (var.max(0.0) / self.samples as f64).sqrt()
    }
}

/// Sample mean of `map(ζ)` over `n >= 2` draws from `sampler`.
pub fn monte_carlo_mean<S, F>(mut sampler: S, mut map: F, n: usize, rng: &mut RngStream) -> Result<MeanEstimate>
where
    S: FnMut(&mut RngStream) -> Vec<f64>,
    F: FnMut(&[f64]) -> Vec<f64>,
{
    if n < 2 {
        return Err(Error::Config(format!("Monte-Carlo batch needs n >= 2, got {n}")));
    }
    let mut acc: Option<Welford> = None;
    for index in 0..n {
        let sample = sampler(rng);
        let v = map(&sample);
        if !all_finite(&v) {
            return Err(Error::NonFiniteSample { index, sample });
        }
        acc.get_or_insert_with(|| Welford::new(v.len())).push(&v);
    }
    Ok(acc.expect("n >= 2").finish())
}

/// Joint Monte-Carlo estimate of `(E g(x, ζ), E h(x, ζ))` on one batch.
pub fn inner_expectations<P: CompositionalProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    n: usize,
    rng: &mut RngStream,
) -> Result<(MeanEstimate, MeanEstimate)> {
    if n < 2 {
        return Err(Error::Config(format!("Monte-Carlo batch needs n >= 2, got {n}")));
    }
    let dims = problem.dims();
    let mut wg = Welford::new(dims.m);
    let mut wh = Welford::new(dims.d);
    for index in 0..n {
        let sample = problem.sample(rng);
        let g = problem.inner_g(x, &sample);
        let h = problem.inner_h(x, &sample);
        if !all_finite(&g) || !all_finite(&h) {
            return Err(Error::NonFiniteSample { index, sample });
        }
        wg.push(&g);
        wh.push(&h);
    }
    Ok((wg.finish(), wh.finish()))
}

/// True objective `F(x)` and constraints `Q(x)` at one design.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub objective_std_err: f64,
    pub constraints: Vec<f64>,
    pub constraints_std_err: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Whether closed-form expectations were used (standard errors zero).
    pub exact: bool,
}

impl Evaluation {
    pub fn max_violation(&self) -> Option<f64> {
        self.constraints.iter().cloned().reduce(f64::max)
    }
}

/// Evaluates `F` and `Q` at `x`, exactly when the problem provides closed
/// form expectations and otherwise on an `n`-sample batch with
/// delta-method standard errors.
pub fn evaluate_at<P: CompositionalProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    n: usize,
    rng: &mut RngStream,
) -> Result<Evaluation> {
    if let Some((y, z)) = problem.exact_expectations(x) {
        let objective = problem.outer_f(&y);
        let constraints = if problem.dims().j > 0 {
            problem.outer_q(&z)
        } else {
            Vec::new()
        };
        return Ok(Evaluation {
            objective,
            objective_std_err: 0.0,
            constraints_std_err: vec![0.0; constraints.len()],
            constraints,
            y,
            z,
            exact: true,
        });
    }
    let (gy, hz) = inner_expectations(problem, x, n, rng)?;
    let objective = problem.outer_f(&gy.mean);
    let objective_std_err = gy.delta_std_err(&problem.outer_f_gradient(&gy.mean));
    let (constraints, constraints_std_err) = if problem.dims().j > 0 {
        let q = problem.outer_q(&hz.mean);
        let jq = problem.outer_q_jacobian(&hz.mean);
        let se = (0..q.len())
            .map(|j| {
                let col: Vec<f64> = (0..jq.rows()).map(|i| jq.get(i, j)).collect();
                hz.delta_std_err(&col)
            })
            .collect();
        (q, se)
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(Evaluation {
        objective,
        objective_std_err,
        constraints,
        constraints_std_err,
        y: gy.mean,
        z: hz.mean,
        exact: false,
    })
}

/// Largest constraint value `max_j Q_j` over the corners of the bounding
/// box of the feasible set.
pub fn max_constraint_over_corners<P: CompositionalProblem + ?Sized>(
    problem: &P,
    n: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for corner in problem.feasible_set().box_corners() {
        let eval = evaluate_at(problem, &corner, n, rng)?;
        if let Some(v) = eval.max_violation() {
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// Default penalty saturation level for a given margin: twice the largest
/// constraint value over the box corners, raised so that
/// `max Q <= C_ell - gamma` holds. Falls back to `gamma + 1` when every
/// corner is feasible or the problem has no constraints.
pub fn default_penalty<P: CompositionalProblem + ?Sized>(
    problem: &P,
    gamma: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<PenaltyParams> {
    let max_q = if problem.dims().j > 0 {
        max_constraint_over_corners(problem, n, rng)?
    } else {
        f64::NEG_INFINITY
    };
    let c_ell = if max_q > 0.0 {
        (2.0 * max_q).max(max_q + gamma)
    } else {
        gamma + 1.0
    };
    PenaltyParams::new(gamma, c_ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Distribution, ProductDistribution};

    #[test]
    fn welford_matches_two_pass() {
        let data = [[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [4.0, 2.5]];
        let mut w = Welford::new(2);
        data.iter().for_each(|r| w.push(r));
        let est = w.finish();
        let n = data.len() as f64;
        let m0 = data.iter().map(|r| r[0]).sum::<f64>() / n;
        let m1 = data.iter().map(|r| r[1]).sum::<f64>() / n;
        let c01 = data.iter().map(|r| (r[0] - m0) * (r[1] - m1)).sum::<f64>() / (n - 1.0);
        assert!((est.mean[0] - m0).abs() < 1e-15);
        assert!((est.covariance.get(0, 1) - c01).abs() < 1e-14);
        assert!((est.covariance.get(1, 0) - c01).abs() < 1e-14);
    }

    #[test]
    fn exponential_mean_within_three_sigma() {
        let dist = ProductDistribution::new(vec![Distribution::Exponential { mean: 2.0 }]).unwrap();
        let mut rng = RngStream::new(3, 0);
        let est = monte_carlo_mean(|r| dist.draw(r), |s| s.to_vec(), 100_000, &mut rng).unwrap();
        assert!((est.mean[0] - 2.0).abs() < 3.0 * est.std_err[0]);
    }

    #[test]
    fn batch_of_one_is_rejected() {
        let mut rng = RngStream::new(0, 0);
        assert!(monte_carlo_mean(|_| vec![0.0], |s| s.to_vec(), 1, &mut rng).is_err());
    }

    #[test]
    fn non_finite_draw_is_reported_with_sample() {
        let mut rng = RngStream::new(0, 0);
        let err = monte_carlo_mean(|_| vec![0.0], |_| vec![f64::NAN], 10, &mut rng).unwrap_err();
        assert_eq!(
            err,
            Error::NonFiniteSample {
                index: 0,
                sample: vec![0.0]
            }
        );
    }
}
