//! Pipeline configuration: the single JSON document that fully determines
//! a run. Reports embed the exact config that produced them, and re-running
//! an embedded config reproduces the report byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lqe_core::featurize::FeatureSpec;
use lqe_core::learn::{Hyperparams, ModelKind};
use lqe_core::preprocess::InterpolationStrategy;
use lqe_core::resample::ResampleStrategy;
use lqe_core::synth::SynthConfig;

use crate::CliError;

/// Where the traces come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Raw `dbm<level>/src<id>_dst<id>.txt` directory tree.
    RutgersRaw { path: PathBuf },
    /// Canonical CSV file.
    CanonicalCsv { path: PathBuf },
    /// Generated in memory from a synthetic config.
    Synth { config: SynthConfig },
}

fn default_packets_per_trace() -> usize {
    300
}

fn default_features() -> FeatureSpec {
    FeatureSpec::rssi_trio()
}

fn default_interp() -> InterpolationStrategy {
    InterpolationStrategy::DomainZero
}

fn default_resample() -> ResampleStrategy {
    ResampleStrategy::Ros
}

fn default_model() -> ModelKind {
    ModelKind::DecisionTree
}

fn default_window() -> usize {
    10
}

fn default_k() -> usize {
    10
}

fn default_repeats() -> usize {
    10
}

fn default_seed() -> u64 {
    42
}

/// Full parameterization of one experiment run.
///
/// Defaults mirror the study's cumulative baseline: domain-knowledge
/// zero interpolation, the (rssi, rssi_avg, rssi_std) trio, 10/10 windows,
/// random over-sampling and a pruned decision tree under 10-times
/// stratified 10-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataSource,
    /// Expected packets per trace when parsing raw directories.
    #[serde(default = "default_packets_per_trace")]
    pub packets_per_trace: usize,
    #[serde(default = "default_interp")]
    pub interp: InterpolationStrategy,
    #[serde(default = "default_features")]
    pub features: FeatureSpec,
    #[serde(default = "default_window")]
    pub w_history: usize,
    #[serde(default = "default_window")]
    pub w_prr: usize,
    #[serde(default = "default_resample")]
    pub resample: ResampleStrategy,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl PipelineConfig {
    /// The baseline configuration over the given data source.
    pub fn baseline(data: DataSource) -> Self {
        PipelineConfig {
            data,
            packets_per_trace: default_packets_per_trace(),
            interp: default_interp(),
            features: default_features(),
            w_history: default_window(),
            w_prr: default_window(),
            resample: default_resample(),
            model: default_model(),
            hyperparams: Hyperparams::default(),
            k: default_k(),
            repeats: default_repeats(),
            seed: default_seed(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
