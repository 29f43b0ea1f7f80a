//! Configuration-driven falsification experiments: batches of seeded trials on the built-in
//! models, summary tables, trajectory plots and batch runs of the staging soundness checks.

pub mod config;
pub mod experiment;
pub mod output;
pub mod specs;
pub mod svg;
pub mod theory_check;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Falsify(#[from] falsify_core::falsify::FalsifyError),
    #[error(transparent)]
    Check(#[from] theory_check::CheckError),
    #[error(transparent)]
    Model(#[from] falsify_core::model::ModelError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Check(theory_check::CheckError::Config(_)) => 2,
            _ => 1,
        }
    }
}
