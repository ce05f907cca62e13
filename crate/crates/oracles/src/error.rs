use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Core(#[from] cscgd_core::Error),

    #[error("infeasible instance: {0}")]
    Infeasible(String),

    #[error("no feasible point among {evaluated} grid points")]
    EmptyGrid { evaluated: usize },

    #[error("invalid request: {0}")]
    Invalid(String),

    #[error("quadrature for moment {order} reached relative error {relative:e} only")]
    Quadrature { order: u32, relative: f64 },

    /// A Hessian cell could not be evaluated.
    #[error("cell (row {row}, col {col}) at ({x}, {y}): {reason}")]
    Cell {
        row: usize,
        col: usize,
        x: f64,
        y: f64,
        reason: String,
    },

    #[error("{method} stopped after {iterations} iterations with gradient-map norm {residual:e}")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, OracleError>;
