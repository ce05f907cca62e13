//! Experiment harness: configuration, instance resolution, oracle
//! baselines, multi-seed runs, decay-rate fits and plot series.

pub mod baseline;
pub mod checks;
pub mod config;
pub mod error;
pub mod metrics;
pub mod plot;
pub mod problems;
pub mod run;

pub use baseline::{compute_baseline, lookup_baseline, store_baseline, Baseline, BaselineKind};
pub use config::{ExperimentConfig, GammaRule, GammaSetting, OracleMode, SolverSection};
pub use error::{HarnessError, Result};
pub use metrics::{mann_kendall, rate_fit, MannKendall, RateFit};
pub use plot::{emit_plot_data, PlotTrace};
pub use problems::{resolve, InstanceSpec, ToyConstrained, ToyQuadratic};
pub use run::{execute, run_experiment, run_ladder, write_outputs, Experiment, Quantity, RunSummary};
