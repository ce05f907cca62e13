use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] cscgd_core::Error),

    #[error(transparent)]
    Oracle(#[from] cscgd_oracles::OracleError),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "no oracle baseline for `{name}` in {}; run `cscgd oracle --preset {name}` first or set `oracle = \"off\"`",
        .cache.display()
    )]
    MissingBaseline { name: String, cache: PathBuf },

    #[error("cached baseline for `{name}` was computed for a different instance; recompute it with `cscgd oracle`")]
    StaleBaseline { name: String },

    #[error("no oracle is available for `{0}`")]
    NoOracle(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("rate fit: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}
