//! Constrained stochastic compositional gradient descent.
//!
//! Each iteration draws one sample, refreshes the tracking estimates of
//! `E g` and `E h`, and takes a projected step along the quasi-gradient of
//! the objective plus the penalized constraint. The returned design is the
//! average of the iterates over the second half of the horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dist_sq, Matrix};
use crate::penalty::{penalty_gradient, PenaltyParams};
use crate::problem::{CompositionalProblem, Dims};
use crate::rng::RngStream;
use crate::schedule::{StepSchedule, StepSizes};

/// Which parts of the update are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    #[default]
    Full,
    /// `delta_t = 0`: plain SCGD on the objective.
    Unconstrained,
    /// `alpha_t = delta_t = 0`: `x` frozen, only `y`, `z` move.
    TrackingOnly,
}

/// Which iterations end up in the returned trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "points")]
pub enum LogPolicy {
    /// Every iteration up to `T = 10^4`, otherwise 1000 log-spaced points.
    #[default]
    Auto,
    Every,
    LogSpaced(usize),
}

pub const AUTO_LOG_EVERY_MAX: usize = 10_000;
pub const AUTO_LOG_POINTS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub schedule: StepSchedule,
    pub penalty: PenaltyParams,
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
    #[serde(default)]
    pub mode: UpdateMode,
    /// Projected onto the feasible set; defaults to the box midpoint.
    #[serde(default)]
    pub initial_point: Option<Vec<f64>>,
    #[serde(default)]
    pub log: LogPolicy,
}

impl SolverConfig {
    pub fn new(schedule: StepSchedule, penalty: PenaltyParams, seed: u64) -> Self {
        Self {
            schedule,
            penalty,
            seed,
            stream_id: 0,
            mode: UpdateMode::Full,
            initial_point: None,
            log: LogPolicy::Auto,
        }
    }

    pub fn with_mode(mut self, mode: UpdateMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_initial_point(mut self, x: Vec<f64>) -> Self {
        self.initial_point = Some(x);
        self
    }

    pub fn with_log(mut self, log: LogPolicy) -> Self {
        self.log = log;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Step sizes actually applied at iteration `t` under the update mode.
    pub fn applied_steps(&self, t: usize) -> Result<StepSizes> {
        let mut s = self.schedule.step_sizes(t)?;
        match self.mode {
            UpdateMode::Full => {}
            UpdateMode::Unconstrained => s.delta = 0.0,
            UpdateMode::TrackingOnly => {
                s.alpha = 0.0;
                s.delta = 0.0;
            }
        }
        Ok(s)
    }

    /// First iteration index included in the tail average, `ceil(T/2)`.
    pub fn tail_start(&self) -> usize {
        self.schedule.horizon().div_ceil(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Index of the next iteration (1-based).
    pub t: usize,
    pub tail_sum: Vec<f64>,
    pub tail_count: usize,
}

impl SolverState {
    pub fn tail_average(&self) -> Option<Vec<f64>> {
        (self.tail_count > 0).then(|| {
            self.tail_sum
                .iter()
                .map(|s| s / self.tail_count as f64)
                .collect()
        })
    }
}

/// Per-iteration metrics. `x` is the iterate after the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub x: Vec<f64>,
    /// `f(y_{t+1})`.
    pub objective_estimate: f64,
    /// `q(z_{t+1})`.
    pub constraint_estimates: Vec<f64>,
    /// `||x_{t+1} - x_t||^2`.
    pub step_sq_norm: f64,
}

impl TrajectoryRecord {
    pub fn max_violation(&self) -> Option<f64> {
        self.constraint_estimates
            .iter()
            .cloned()
            .reduce(f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub x_hat: Vec<f64>,
    pub initial_point: Vec<f64>,
    pub trajectory: Vec<TrajectoryRecord>,
    pub final_state: SolverState,
}

fn finite_or(v: &[f64], map: &'static str, t: usize) -> Result<()> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(Error::NonFinite { map, t })
    }
}

fn finite_matrix_or(m: &Matrix, map: &'static str, t: usize) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { map, t })
    }
}

/// Builds `x_1`, `y_1`, `z_1`. The tracking variables start at the inner
/// maps evaluated on one extra sample drawn before the first iteration.
pub fn initialize<P: CompositionalProblem + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    rng: &mut RngStream,
) -> Result<SolverState> {
    let Dims { n, .. } = problem.dims();
    let set = problem.feasible_set();
    let start = match &config.initial_point {
        Some(x) => x.clone(),
        None => set.box_midpoint(),
    };
    if start.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: start.len(),
            context: "initial point",
        });
    }
    let x = set.project(&start)?;
    let sample = problem.sample(rng);
    let y = problem.inner_g(&x, &sample);
    finite_or(&y, "inner_g", 0)?;
    let z = problem.inner_h(&x, &sample);
    finite_or(&z, "inner_h", 0)?;
    Ok(SolverState {
        x,
        y,
        z,
        t: 1,
        tail_sum: vec![0.0; n],
        tail_count: 0,
    })
}

/// One iteration with explicit step sizes.
///
/// When `accumulate` is set the current iterate `x_t` is added to the tail
/// sum before it is updated.
pub fn step_with_sizes<P: CompositionalProblem + ?Sized>(
    problem: &P,
    state: &mut SolverState,
    steps: StepSizes,
    penalty: &PenaltyParams,
    accumulate: bool,
    rng: &mut RngStream,
) -> Result<TrajectoryRecord> {
    let t = state.t;
    let dims = problem.dims();
    if accumulate {
        for (acc, xi) in state.tail_sum.iter_mut().zip(&state.x) {
            *acc += xi;
        }
        state.tail_count += 1;
    }

    let sample = problem.sample(rng);
    let x = &state.x;

    let g = problem.inner_g(x, &sample);
    finite_or(&g, "inner_g", t)?;
    let jg = problem.inner_g_jacobian(x, &sample);
    finite_matrix_or(&jg, "inner_g_jacobian", t)?;

    let StepSizes { alpha, beta, delta } = steps;
    for (yi, gi) in state.y.iter_mut().zip(&g) {
        *yi = (1.0 - beta) * *yi + beta * gi;
    }

    let mut constraint_estimates = Vec::new();
    let mut penalty_direction: Option<Vec<f64>> = None;
    if dims.j > 0 {
        let h = problem.inner_h(x, &sample);
        finite_or(&h, "inner_h", t)?;
        for (zi, hi) in state.z.iter_mut().zip(&h) {
            *zi = (1.0 - beta) * *zi + beta * hi;
        }
        let qv = problem.outer_q(&state.z);
        finite_or(&qv, "outer_q", t)?;
        if delta != 0.0 {
            let jh = problem.inner_h_jacobian(x, &sample);
            finite_matrix_or(&jh, "inner_h_jacobian", t)?;
            let jq = problem.outer_q_jacobian(&state.z);
            finite_matrix_or(&jq, "outer_q_jacobian", t)?;
            let dl = penalty_gradient(&qv, penalty).map_err(|_| Error::NonFinite {
                map: "penalty_gradient",
                t,
            })?;
            penalty_direction = Some(jh.mul_vec(&jq.mul_vec(&dl)));
        }
        constraint_estimates = qv;
    }

    let mut v = x.clone();
    if alpha != 0.0 {
        let df = problem.outer_f_gradient(&state.y);
        finite_or(&df, "outer_f_gradient", t)?;
        let dir = jg.mul_vec(&df);
        for (vi, di) in v.iter_mut().zip(&dir) {
            *vi -= alpha * di;
        }
    }
    if let Some(pd) = penalty_direction {
        for (vi, pi) in v.iter_mut().zip(&pd) {
            *vi -= delta * pi;
        }
    }
    if !all_finite(&v) {
        return Err(Error::NonFinite {
            map: "update direction",
            t,
        });
    }
    let x_next = problem.feasible_set().project(&v)?;

    let objective_estimate = problem.outer_f(&state.y);
    let step_sq_norm = dist_sq(&x_next, &state.x);
    state.x = x_next;
    state.t += 1;

    Ok(TrajectoryRecord {
        t,
        alpha,
        beta,
        delta,
        x: state.x.clone(),
        objective_estimate,
        constraint_estimates,
        step_sq_norm,
    })
}

/// One iteration using the configured schedule and update mode.
pub fn cscgd_step<P: CompositionalProblem + ?Sized>(
    problem: &P,
    state: &mut SolverState,
    config: &SolverConfig,
    rng: &mut RngStream,
) -> Result<TrajectoryRecord> {
    let steps = config.applied_steps(state.t)?;
    let accumulate = state.t >= config.tail_start();
    step_with_sizes(problem, state, steps, &config.penalty, accumulate, rng)
}

/// Sorted, de-duplicated, roughly geometric indices in `1..=horizon`
/// that always include both endpoints.
pub fn log_spaced_indices(horizon: usize, points: usize) -> Vec<usize> {
    if horizon == 0 {
        return Vec::new();
    }
    if points >= horizon || points < 2 {
        return if points < 2 && horizon > 1 {
            vec![1, horizon]
        } else {
            (1..=horizon).collect()
        };
    }
    let top = (horizon as f64).ln();
    let mut out: Vec<usize> = (0..points)
        .map(|i| {
            let v = (top * i as f64 / (points - 1) as f64).exp().round() as usize;
            v.clamp(1, horizon)
        })
        .collect();
    out.push(1);
    out.push(horizon);
    out.sort_unstable();
    out.dedup();
    out
}

fn logged_indices(policy: LogPolicy, horizon: usize) -> Option<Vec<usize>> {
    match policy {
        LogPolicy::Every => None,
        LogPolicy::Auto if horizon <= AUTO_LOG_EVERY_MAX => None,
        LogPolicy::Auto => Some(log_spaced_indices(horizon, AUTO_LOG_POINTS)),
        LogPolicy::LogSpaced(p) => Some(log_spaced_indices(horizon, p)),
    }
}

/// Runs the full horizon, handing every record to `observer` and keeping
/// the ones selected by the log policy.
pub fn run_with_observer<P, F>(problem: &P, config: &SolverConfig, mut observer: F) -> Result<RunOutput>
where
    P: CompositionalProblem + ?Sized,
    F: FnMut(&TrajectoryRecord),
{
    config.penalty.validate()?;
    let horizon = config.schedule.horizon();
    if horizon < 2 {
        return Err(Error::Config("horizon must be at least 2".into()));
    }
    let mut rng = RngStream::new(config.seed, config.stream_id);
    let mut state = initialize(problem, config, &mut rng)?;
    let initial_point = state.x.clone();
    let keep = logged_indices(config.log, horizon);
    let mut cursor = 0usize;
    let mut trajectory = Vec::with_capacity(keep.as_ref().map_or(horizon, Vec::len));
    for t in 1..=horizon {
        let rec = cscgd_step(problem, &mut state, config, &mut rng)?;
        observer(&rec);
        let wanted = match &keep {
            None => true,
            Some(idx) => {
                if cursor < idx.len() && idx[cursor] == t {
                    cursor += 1;
                    true
                } else {
                    false
                }
            }
        };
        if wanted {
            trajectory.push(rec);
        }
    }
    let x_hat = state
        .tail_average()
        .ok_or_else(|| Error::Config("empty tail average".into()))?;
    Ok(RunOutput {
        x_hat,
        initial_point,
        trajectory,
        final_state: state,
    })
}

pub fn run<P: CompositionalProblem + ?Sized>(problem: &P, config: &SolverConfig) -> Result<RunOutput> {
    run_with_observer(problem, config, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ProductDistribution;
    use crate::feasible::FeasibleSet;
    use crate::problem::FnProblem;
    use crate::schedule::Regime;

    fn identity_quadratic() -> FnProblem {
        FnProblem::new(
            "quadratic",
            1,
            FeasibleSet::boxed(vec![-1.0], vec![1.0]).unwrap(),
            ProductDistribution::constant(&[0.0]),
            |x, _| x.to_vec(),
            |_, _| Matrix::identity(1),
            |y| 0.5 * y[0] * y[0],
            |y| y.to_vec(),
        )
    }

    #[test]
    fn log_spaced_keeps_endpoints() {
        let idx = log_spaced_indices(1_000_000, 1000);
        assert_eq!(idx[0], 1);
        assert_eq!(*idx.last().unwrap(), 1_000_000);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(idx.len() <= 1002);
        assert_eq!(log_spaced_indices(5, 10), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn horizon_two_averages_first_two_iterates() {
        let p = identity_quadratic();
        let schedule = StepSchedule::new(0.5, 0.5, 0.5, Regime::Diminishing, 2).unwrap();
        let cfg = SolverConfig::new(schedule, PenaltyParams::new(0.0, 1.0).unwrap(), 0)
            .with_initial_point(vec![1.0]);
        let out = run(&p, &cfg).unwrap();
        assert_eq!(out.trajectory.len(), 2);
        assert_eq!(out.final_state.tail_count, 2);
        // x1 = 1, y2 = 1, x2 = 1 - 1 * 1 = 0
        assert_eq!(out.trajectory[0].x, vec![0.0]);
        assert!((out.x_hat[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tail_count_matches_ceil_half() {
        let p = identity_quadratic();
        for horizon in [2usize, 3, 7, 10] {
            let schedule = StepSchedule::new(0.5, 0.5, 0.5, Regime::Constant, horizon).unwrap();
            let cfg = SolverConfig::new(schedule, PenaltyParams::new(0.0, 1.0).unwrap(), 0);
            let out = run(&p, &cfg).unwrap();
            assert_eq!(out.final_state.tail_count, horizon - horizon.div_ceil(2) + 1);
        }
    }

    #[test]
    fn tracking_only_freezes_x() {
        let p = identity_quadratic();
        let schedule = StepSchedule::new(0.5, 0.5, 0.5, Regime::Diminishing, 50).unwrap();
        let cfg = SolverConfig::new(schedule, PenaltyParams::new(0.0, 1.0).unwrap(), 0)
            .with_mode(UpdateMode::TrackingOnly)
            .with_initial_point(vec![0.7]);
        let out = run(&p, &cfg).unwrap();
        assert!(out.trajectory.iter().all(|r| r.x == vec![0.7] && r.step_sq_norm == 0.0));
        assert!((out.final_state.y[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn horizon_below_two_is_rejected() {
        let p = identity_quadratic();
        let schedule = StepSchedule::new(0.5, 0.5, 0.5, Regime::Diminishing, 1).unwrap();
        let cfg = SolverConfig::new(schedule, PenaltyParams::new(0.0, 1.0).unwrap(), 0);
        assert!(run(&p, &cfg).is_err());
    }

    #[test]
    fn non_finite_gradient_names_the_map() {
        let p = FnProblem::new(
            "bad",
            1,
            FeasibleSet::boxed(vec![-1.0], vec![1.0]).unwrap(),
            ProductDistribution::constant(&[0.0]),
            |x, _| x.to_vec(),
            |_, _| Matrix::identity(1),
            |y| y[0],
            |_| vec![f64::NAN],
        );
        let schedule = StepSchedule::new(0.5, 0.5, 0.5, Regime::Diminishing, 10).unwrap();
        let cfg = SolverConfig::new(schedule, PenaltyParams::new(0.0, 1.0).unwrap(), 0);
        match run(&p, &cfg) {
            Err(Error::NonFinite { map, t }) => {
                assert_eq!(map, "outer_f_gradient");
                assert_eq!(t, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
