//! Reference values for the queuing instances, computed without the
//! stochastic solver: deterministic reformulations, brute-force grids,
//! quadrature moments, finite-difference checks and a numerical
//! convexity scan.

pub mod error;
pub mod example1;
pub mod example2;
pub mod finite_diff;
pub mod grid;
pub mod hessian;
pub mod local;
pub mod moments;
pub mod projection;

pub use error::{OracleError, Result};
pub use example1::{example1_fstar, Example1Optimum, Example1Program};
pub use example2::{example2_fstar, Example2GridSpec};
pub use finite_diff::{check_problem, finite_difference_check, ErrorNorm, FdOutcome, ProblemFdReport};
pub use grid::{AxisSpec, GridSearchResult};
pub use hessian::{hessian_psd_scan, ErgodicSummand, Grid2d, HessianScan};
pub use local::{saa_local_minimum, LocalMinimum, LocalOptions};
pub use moments::QuadratureMoments;
