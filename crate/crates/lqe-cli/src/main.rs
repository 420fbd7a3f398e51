//! `lqe` — batch experiment front-end for the link quality estimation
//! pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lqe_cli::ablate::{run_grid, AblationAxis};
use lqe_cli::canon::{read_canonical_csv, write_canonical_csv};
use lqe_cli::config::{DataSource, PipelineConfig};
use lqe_cli::dataset::load_trace_set;
use lqe_cli::pipeline::run;
use lqe_cli::report::write_json;
use lqe_cli::CliError;

use lqe_core::featurize::FeatureSpec;
use lqe_core::learn::ModelKind;
use lqe_core::preprocess::InterpolationStrategy;
use lqe_core::resample::ResampleStrategy;
use lqe_core::synth::{generate, ground_truth, SynthConfig};
use lqe_core::trace::TraceSet;

#[derive(Parser)]
#[command(
    name = "lqe",
    about = "Wireless link quality estimation: dataset tools, pipeline runs and ablation grids",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace set (canonical CSV plus ground truth).
    Synth(SynthArgs),
    /// Print reception statistics of a data source.
    Stats(DataArgs),
    /// Run one full pipeline configuration.
    Run(RunArgs),
    /// Run an ablation grid over one axis.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// JSON file holding a full synthetic config.
    #[arg(long, conflicts_with_all = ["links", "seed"])]
    config: Option<PathBuf>,
    /// Number of links for the rutgers-like preset.
    #[arg(long, default_value_t = 100)]
    links: usize,
    /// Generator seed for the rutgers-like preset.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Raw trace directory (dbm<level>/src<id>_dst<id>.txt layout).
    #[arg(long, group = "source")]
    rutgers_raw: Option<PathBuf>,
    /// Canonical CSV file.
    #[arg(long, group = "source")]
    csv: Option<PathBuf>,
    /// Generate a rutgers-like synthetic set with this many links.
    #[arg(long, group = "source")]
    synth_links: Option<usize>,
    /// Seed for the synthetic source.
    #[arg(long, default_value_t = 42)]
    synth_seed: u64,
    /// Packets per trace when parsing raw directories.
    #[arg(long, default_value_t = 300)]
    packets_per_trace: usize,
}

impl DataArgs {
    fn source(&self) -> Option<DataSource> {
        if let Some(path) = &self.rutgers_raw {
            Some(DataSource::RutgersRaw { path: path.clone() })
        } else if let Some(path) = &self.csv {
            Some(DataSource::CanonicalCsv { path: path.clone() })
        } else {
            self.synth_links.map(|links| DataSource::Synth {
                config: SynthConfig::rutgers_like(links, self.synth_seed),
            })
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline config JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Interpolation strategy: none|gaussian|zero.
    #[arg(long)]
    interp: Option<InterpolationStrategy>,
    /// Feature spec, e.g. "rssi,rssi_avg,rssi_std" or "rssi_avg^-4..4".
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    w_history: Option<usize>,
    #[arg(long)]
    w_prr: Option<usize>,
    /// Re-sampling strategy: none|ros|rus.
    #[arg(long)]
    resample: Option<ResampleStrategy>,
    /// Model kind: majority|logreg|svm|dtree|rforest|mlp.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Fold count.
    #[arg(long)]
    k: Option<usize>,
    /// Cross-validation repeats.
    #[arg(long)]
    repeats: Option<usize>,
    /// Pipeline seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl PipelineArgs {
    fn build(&self) -> Result<PipelineConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let mut config = PipelineConfig::from_json_file(path)?;
                if let Some(data) = self.data.source() {
                    config.data = data;
                }
                config
            }
            None => {
                let data = self.data.source().ok_or_else(|| {
                    CliError::Config(
                        "no data source: pass --config or one of --rutgers-raw/--csv/--synth-links"
                            .into(),
                    )
                })?;
                let mut config = PipelineConfig::baseline(data);
                config.packets_per_trace = self.data.packets_per_trace;
                config
            }
        };
        if let Some(v) = self.interp {
            config.interp = v;
        }
        if let Some(spec) = &self.features {
            config.features = FeatureSpec::parse(spec).map_err(CliError::config)?;
        }
        if let Some(v) = self.w_history {
            config.w_history = v;
        }
        if let Some(v) = self.w_prr {
            config.w_prr = v;
        }
        if let Some(v) = self.resample {
            config.resample = v;
        }
        if let Some(v) = self.model {
            config.model = v;
        }
        if let Some(v) = self.k {
            config.k = v;
        }
        if let Some(v) = self.repeats {
            config.repeats = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
            config.hyperparams.seed = v;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output directory for report artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Also fit one model on all examples and write model.json.
    #[arg(long)]
    save_model: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct AblateArgs {
    /// Axis: interpolation|features|windows|resampling|models.
    axis: String,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output directory; one subdirectory per grid cell.
    #[arg(long)]
    out: PathBuf,
    /// Restrict the windows grid to w_history = w_prr.
    #[arg(long)]
    diagonal: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn configure_pool(jobs: usize) -> Result<(), CliError> {
    if jobs == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let config: SynthConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => SynthConfig::rutgers_like(args.links, args.seed),
    };
    let traces = generate(&config).map_err(CliError::config)?;
    let truth = ground_truth(&config).map_err(CliError::config)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    write_canonical_csv(&traces, &args.out.join("traces.csv")).map_err(CliError::data)?;
    write_json(&args.out.join("synth_config.json"), &config)?;

    let mut gt = String::from("link_index,src,dst,noise_dbm,snr_db,true_prr,true_class\n");
    for record in &truth {
        gt.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{}\n",
            record.link_index,
            record.src,
            record.dst,
            record.noise_dbm,
            record.snr_db,
            record.true_prr,
            record.true_class
        ));
    }
    std::fs::write(args.out.join("ground_truth.csv"), gt)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;

    let stats = traces.stats();
    println!(
        "wrote {} traces ({} packets each) to {}",
        traces.len(),
        traces.packets_per_trace(),
        args.out.display()
    );
    println!(
        "received {}/{} packets ({:.2}%)",
        stats.packets_received,
        stats.packets_sent,
        stats.received_fraction * 100.0
    );
    Ok(())
}

fn load_for_stats(args: &DataArgs) -> Result<TraceSet, CliError> {
    let source = args.source().ok_or_else(|| {
        CliError::Config("pass one of --rutgers-raw/--csv/--synth-links".into())
    })?;
    match source {
        DataSource::RutgersRaw { path } => {
            load_trace_set(&path, args.packets_per_trace).map_err(CliError::data)
        }
        DataSource::CanonicalCsv { path } => {
            read_canonical_csv(&path).map_err(CliError::data)
        }
        DataSource::Synth { config } => generate(&config).map_err(CliError::config),
    }
}

fn cmd_stats(args: &DataArgs) -> Result<(), CliError> {
    let traces = load_for_stats(args)?;
    let stats = traces.stats();
    println!("traces:            {}", stats.n_traces);
    println!(
        "empty traces:      {} ({:.2}%)",
        stats.n_empty_traces,
        100.0 * stats.n_empty_traces as f64 / stats.n_traces.max(1) as f64
    );
    println!("packets sent:      {}", stats.packets_sent);
    println!(
        "packets received:  {} ({:.2}%)",
        stats.packets_received,
        stats.received_fraction * 100.0
    );
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    configure_pool(args.jobs)?;
    let config = args.pipeline.build()?;
    let outcome = run(&config, &args.out, args.save_model)?;
    let report = &outcome.report;
    println!(
        "{} examples, {} folds x {} repeats in {:.1}s",
        report.dataset.n_examples, config.k, config.repeats, outcome.wall_time_s
    );
    println!(
        "accuracy {:.4} +- {:.4} (pooled {:.4})",
        report.eval.accuracy_mean, report.eval.accuracy_std, report.eval.pooled_accuracy
    );
    println!(
        "recall bad/intermediate/good: {:.4} / {:.4} / {:.4}",
        report.eval.recall_mean[0], report.eval.recall_mean[1], report.eval.recall_mean[2]
    );
    println!("artifacts in {}", args.out.display());
    Ok(())
}

fn cmd_ablate(args: &AblateArgs) -> Result<(), CliError> {
    configure_pool(args.jobs)?;
    let axis: AblationAxis = args.axis.parse().map_err(CliError::Config)?;
    let base = args.pipeline.build()?;
    let summary = run_grid(axis, &base, &args.out, args.diagonal)?;
    for cell in &summary.cells {
        match (&cell.error, cell.accuracy_mean) {
            (Some(err), _) => println!("{:>24}  FAILED: {err}", cell.cell),
            (None, Some(acc)) => println!(
                "{:>24}  accuracy {:.4}  recall(int) {:.4}",
                cell.cell,
                acc,
                cell.recall_intermediate.unwrap_or(0.0)
            ),
            _ => {}
        }
    }
    println!("summary: {}", args.out.join("summary.csv").display());
    let failed = summary.n_failed();
    if failed > 0 {
        return Err(CliError::CellFailures { failed, total: summary.cells.len() });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Run(args) => cmd_run(args),
        Command::Ablate(args) => cmd_ablate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
