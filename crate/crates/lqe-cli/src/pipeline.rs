//! End-to-end single-run orchestration: load, interpolate, featurize,
//! cross-validate, report.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lqe_core::evaluate::{cross_validate, metrics, EvalReport, Metrics};
use lqe_core::featurize::{build_examples, Example, LinkClass, WindowConfig};
use lqe_core::preprocess::{interpolate, InterpolationStrategy};
use lqe_core::rng::{derive_seed, stream};
use lqe_core::synth;
use lqe_core::trace::{TraceSet, TraceStats};

use crate::config::{DataSource, PipelineConfig};
use crate::report;
use crate::CliError;

/// Dataset-level counters echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_traces: usize,
    pub packets_per_trace: usize,
    pub stats: TraceStats,
    pub n_examples: usize,
    /// Positions dropped for missing history data (no-interpolation mode).
    pub dropped_examples: usize,
    /// Example counts per class in canonical order.
    pub class_counts: [usize; 3],
    /// Slots filled by the interpolation strategy.
    pub filled_slots: usize,
    /// Entirely empty traces that fell back to all-zero Gaussian fills.
    pub empty_fallbacks: usize,
}

/// The full machine-readable result of one run; serialized as
/// `report.json`. Contains no timing or timestamps, so identical configs
/// produce byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullReport {
    pub config: PipelineConfig,
    pub dataset: DatasetSummary,
    pub eval: EvalReport,
    /// Metric views of the pooled confusion matrix.
    pub pooled_metrics: Metrics,
}

/// Loads the configured data source.
pub fn load_data(config: &PipelineConfig) -> Result<TraceSet, CliError> {
    match &config.data {
        DataSource::RutgersRaw { path } => {
            crate::dataset::load_trace_set(path, config.packets_per_trace)
                .map_err(CliError::data)
        }
        DataSource::CanonicalCsv { path } => {
            crate::canon::read_canonical_csv(path).map_err(CliError::data)
        }
        DataSource::Synth { config: synth_config } => {
            synth::generate(synth_config).map_err(CliError::config)
        }
    }
}

/// Interpolates and featurizes a whole trace set. Trace `i` draws its
/// interpolation noise from a stream keyed by `(seed, i)`, so the result is
/// independent of parallel execution order.
pub fn featurize_traces(
    traces: &TraceSet,
    interp: InterpolationStrategy,
    wc: WindowConfig,
    features: &lqe_core::featurize::FeatureSpec,
    seed: u64,
) -> Result<(Vec<Example>, DatasetSummary), CliError> {
    let per_trace: Vec<_> = traces
        .traces()
        .par_iter()
        .enumerate()
        .map(|(i, trace)| {
            let trace_seed = derive_seed(seed, &[stream::TRACE_SET, i as u64]);
            let prepared = interpolate(trace, interp, trace_seed);
            let batch = build_examples(&prepared, i, wc, features)?;
            Ok((batch, prepared.filled, prepared.empty_fallback))
        })
        .collect::<Result<_, lqe_core::featurize::FeaturizeError>>()
        .map_err(CliError::config)?;

    let mut examples = Vec::new();
    let mut dropped = 0;
    let mut filled_slots = 0;
    let mut empty_fallbacks = 0;
    let mut class_counts = [0usize; 3];
    for (batch, filled, fallback) in per_trace {
        for example in &batch.examples {
            class_counts[example.label.index()] += 1;
        }
        examples.extend(batch.examples);
        dropped += batch.dropped;
        filled_slots += filled;
        empty_fallbacks += fallback as usize;
    }
    let summary = DatasetSummary {
        n_traces: traces.len(),
        packets_per_trace: traces.packets_per_trace(),
        stats: traces.stats(),
        n_examples: examples.len(),
        dropped_examples: dropped,
        class_counts,
        filled_slots,
        empty_fallbacks,
    };
    Ok((examples, summary))
}

/// Runs the full pipeline on an already-loaded trace set.
pub fn run_on_traces(
    config: &PipelineConfig,
    traces: &TraceSet,
) -> Result<FullReport, CliError> {
    let wc = WindowConfig::new(config.w_history, config.w_prr).map_err(CliError::config)?;
    let (examples, dataset) =
        featurize_traces(traces, config.interp, wc, &config.features, config.seed)?;
    if examples.is_empty() {
        return Err(CliError::Data("featurization produced no examples".into()));
    }
    let eval = cross_validate(
        &examples,
        config.model,
        &config.hyperparams,
        config.resample,
        config.k,
        config.repeats,
        config.seed,
    )
    .map_err(CliError::data)?;
    let pooled_metrics = metrics(&eval.pooled).map_err(CliError::data)?;
    Ok(FullReport { config: config.clone(), dataset, eval, pooled_metrics })
}

/// Result of [`run`]: the report plus wall time.
pub struct RunOutcome {
    pub report: FullReport,
    pub wall_time_s: f64,
}

/// Loads data, runs the pipeline and writes `report.json`,
/// `confusion.csv`, `confusion.svg`, `config.json` and `run_meta.json`
/// into `out_dir`. Optionally persists a model fitted on all examples.
pub fn run(
    config: &PipelineConfig,
    out_dir: &Path,
    save_model: bool,
) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let traces = Arc::new(load_data(config)?);
    let report = run_on_traces(config, &traces)?;

    if save_model {
        let wc =
            WindowConfig::new(config.w_history, config.w_prr).map_err(CliError::config)?;
        let (examples, _) =
            featurize_traces(&traces, config.interp, wc, &config.features, config.seed)?;
        let model = fit_final_model(config, &examples)?;
        crate::model_store::save_model(&out_dir.join("model.json"), &model)?;
    }

    let wall_time_s = started.elapsed().as_secs_f64();
    report::write_run_artifacts(out_dir, &report, wall_time_s)?;
    Ok(RunOutcome { report, wall_time_s })
}

/// Fits one model on the full example set (scaler on everything, then the
/// configured re-sampling), for persistence.
pub fn fit_final_model(
    config: &PipelineConfig,
    examples: &[Example],
) -> Result<lqe_core::learn::TrainedModel, CliError> {
    use lqe_core::learn::{fit_with_scaler, FeatureMatrix, StandardScaler};
    use lqe_core::resample::resample_indices;

    let all: Vec<usize> = (0..examples.len()).collect();
    let x = FeatureMatrix::from_examples(examples, &all).map_err(CliError::data)?;
    let scaler = StandardScaler::fit(&x).map_err(CliError::data)?;
    let labels: Vec<LinkClass> = examples.iter().map(|e| e.label).collect();
    let picked = resample_indices(config.resample, &labels, config.seed)
        .map_err(CliError::data)?;
    let x_fit = FeatureMatrix::from_examples(examples, &picked).map_err(CliError::data)?;
    let y_fit: Vec<LinkClass> = picked.iter().map(|&i| labels[i]).collect();
    fit_with_scaler(config.model, &config.hyperparams, scaler, &x_fit, &y_fit)
        .map_err(CliError::data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lqe_core::synth::SynthConfig;

    fn small_synth_config() -> PipelineConfig {
        let mut cfg = PipelineConfig::baseline(DataSource::Synth {
            config: SynthConfig::rutgers_like(12, 5),
        });
        cfg.k = 5;
        cfg.repeats = 1;
        cfg.hyperparams.tree.ccp_alpha_grid = vec![0.0];
        cfg
    }

    #[test]
    fn report_totals_match_examples_times_repeats() {
        let cfg = small_synth_config();
        let traces = load_data(&cfg).unwrap();
        let report = run_on_traces(&cfg, &traces).unwrap();
        assert_eq!(
            report.eval.pooled.total(),
            (report.dataset.n_examples * cfg.repeats) as u64
        );
        // 300-packet traces with 10/10 windows: 281 examples each
        assert_eq!(report.dataset.n_examples, traces.len() * 281);
    }

    #[test]
    fn run_is_deterministic() {
        let cfg = small_synth_config();
        let traces = load_data(&cfg).unwrap();
        let a = run_on_traces(&cfg, &traces).unwrap();
        let b = run_on_traces(&cfg, &traces).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn oversized_windows_are_a_config_error() {
        let mut cfg = small_synth_config();
        cfg.w_history = 100;
        cfg.w_prr = 100;
        if let DataSource::Synth { config } = &mut cfg.data {
            config.packets_per_trace = 150;
        }
        let traces = load_data(&cfg).unwrap();
        let err = run_on_traces(&cfg, &traces).unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "{err}");
    }
}
