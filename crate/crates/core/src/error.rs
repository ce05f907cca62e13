use thiserror::Error;

/// Errors raised by the solver, the feasible sets and the samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("non-finite penalty argument")]
    NonFinitePenalty,

    /// A map produced NaN or an infinity during an iteration.
    #[error("non-finite value from {map} at iteration {t}")]
    NonFinite { map: &'static str, t: usize },

    #[error("non-finite Monte-Carlo sample at draw {index}: {sample:?}")]
    NonFiniteSample { index: usize, sample: Vec<f64> },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
