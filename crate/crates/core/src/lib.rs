//! Constrained stochastic compositional gradient descent: problem
//! abstraction, feasible sets, penalty, step schedules, the solver loop and
//! Monte-Carlo evaluation.

pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod feasible;
pub mod linalg;
pub mod montecarlo;
pub mod penalty;
pub mod problem;
pub mod quadrature;
pub mod rng;
pub mod schedule;
pub mod solver;

pub use distributions::{Distribution, ProductDistribution};
pub use error::{Error, Result};
pub use feasible::FeasibleSet;
pub use linalg::Matrix;
pub use montecarlo::{evaluate_at, Evaluation};
pub use penalty::PenaltyParams;
pub use problem::{CompositionalProblem, Dims, FnProblem, Sample};
pub use rng::RngStream;
pub use schedule::{Regime, StepSchedule, StepSizes};
pub use solver::{run, LogPolicy, RunOutput, SolverConfig, SolverState, TrajectoryRecord, UpdateMode};
