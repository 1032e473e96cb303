//! Experiment runner for the CHIRRUP decoder and the OST baseline.
//!
//! A sweep is described by a TOML [`ExperimentSpec`]; results go to a CSV
//! file plus a JSON sidecar holding the full spec, seeds and versions.

pub mod ost;
pub mod run;
pub mod spec;

use std::path::PathBuf;

pub use run::{run, RunSummary, CSV_HEADER};
pub use spec::{Ebn0Plan, ExperimentSpec, KList, OstSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] chirrup_core::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
        None => Ok(f()),
    }
}
