//! Scenario files, built-in presets, CSV and summary export, experiment
//! runners and the acceptance checks. Everything here is `f64`.

pub mod experiment;
pub mod export;
pub mod presets;
pub mod scenario;
pub mod verify;

use std::path::PathBuf;

use thiserror::Error;

pub use experiment::{run_experiment, run_experiment_in, run_sweep, Status, Verdict};
pub use scenario::{parse_scenario, InitialCondition, RunTolerances, Scenario, SweepSpec};

/// Environment variable that overrides the default output directory.
pub const OUTPUT_DIR_ENV: &str = "CLF_OUT_DIR";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] crate::Error),
    #[error("`{0}` is neither a scenario file nor a preset name")]
    UnknownScenario(String),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("serialization: {0}")]
    Serialize(String),
    #[error("no parameter `{0}` in the scenario")]
    UnknownParam(String),
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
