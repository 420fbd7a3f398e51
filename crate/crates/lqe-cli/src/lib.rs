//! Dataset IO, file formats and the batch experiment front-end for the
//! link quality estimation pipeline in `lqe-core`.
//!
//! This crate owns everything that touches the filesystem: the raw trace
//! directory loader, the canonical CSV interchange format, JSON reports and
//! configs, SVG confusion heatmaps, the model store and the `lqe` binary
//! with its `synth`, `stats`, `run` and `ablate` subcommands.

pub mod ablate;
pub mod canon;
pub mod config;
pub mod dataset;
pub mod model_store;
pub mod pipeline;
pub mod report;
pub mod svg;

use std::process::ExitCode;

/// Top-level failure classes, mapped onto process exit codes:
/// 1 for configuration problems, 2 for data problems, 3 when some ablation
/// grid cells failed.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{failed} of {total} grid cells failed")]
    CellFailures { failed: usize, total: usize },
}

impl CliError {
    pub fn config(err: impl std::fmt::Display) -> Self {
        CliError::Config(err.to_string())
    }

    pub fn data(err: impl std::fmt::Display) -> Self {
        CliError::Data(err.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
            CliError::CellFailures { .. } => ExitCode::from(3),
        }
    }
}
