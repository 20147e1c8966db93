//! Benchmark harness CLI: pretrain the unsupervised layer, train single
//! models, evaluate saved models, run full noise sweeps, and merge sweep
//! reports into comparison tables.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data-format error,
//! 4 numeric failure.

use clap::{Args, Parser, Subcommand};
use mdrbm::bench::{
    self, comparison_table, ExperimentConfig, ModelKind, NoiseSweepReport, Theta0Source,
};
use mdrbm::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable overriding the dataset directory.
const DATA_DIR_ENV: &str = "MDRBM_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "mdrbm",
    version,
    about = "Noise-robustness benchmark harness for layered discriminative RBMs"
)]
struct Cli {
    /// Directory containing the dataset files (default: $MDRBM_DATA_DIR or '.').
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Configuration source plus field overrides shared by the run commands.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment configuration file (JSON). Optional when --dataset names a preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset preset: mnist, fmnist, ulc, or cifar10. Replaces the dataset
    /// section (and, without --config, supplies the benchmark defaults).
    #[arg(long)]
    dataset: Option<String>,
    /// Model kind: drbm, drbm+elm, mdrbm, or 4nn.
    #[arg(long)]
    model: Option<String>,
    /// Untrained-layer source for the stacked models: random or gbrbm.
    #[arg(long)]
    theta0: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Layer samples per datum during learning.
    #[arg(long)]
    s_train: Option<usize>,
    /// Layer samples per datum during inference.
    #[arg(long)]
    s_infer: Option<usize>,
    /// Comma-separated noise levels, e.g. 0,0.2,0.4,0.6,0.8,1.
    #[arg(long, value_delimiter = ',')]
    noise_grid: Option<Vec<f64>>,
    /// Trained repeats pooled into the report.
    #[arg(long)]
    repeats: Option<usize>,
    /// Add noise to raw inputs and re-standardize, instead of the default
    /// noise-after-standardization.
    #[arg(long)]
    noise_before_standardize: bool,
}

fn parse_model(s: &str) -> Result<ModelKind, Error> {
    match s {
        "drbm" => Ok(ModelKind::Drbm),
        "drbm+elm" => Ok(ModelKind::DrbmElm),
        "mdrbm" => Ok(ModelKind::Mdrbm),
        "4nn" => Ok(ModelKind::Nn4),
        other => Err(Error::config(format!(
            "unknown model {other:?} (expected drbm, drbm+elm, mdrbm, or 4nn)"
        ))),
    }
}

fn parse_theta0(s: &str) -> Result<Theta0Source, Error> {
    match s {
        "random" => Ok(Theta0Source::Random),
        "gbrbm" => Ok(Theta0Source::Gbrbm),
        other => Err(Error::config(format!(
            "unknown theta0 source {other:?} (expected random or gbrbm)"
        ))),
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let model = self.model.as_deref().map(parse_model).transpose()?;
        let theta0 = self.theta0.as_deref().map(parse_theta0).transpose()?;

        let mut config = match (&self.config, &self.dataset) {
            (Some(path), _) => ExperimentConfig::from_file(path)?,
            (None, Some(preset)) => {
                let kind = model.ok_or_else(|| {
                    Error::config("--model is required when running from a dataset preset")
                })?;
                ExperimentConfig::preset(preset, kind, theta0)?
            }
            (None, None) => {
                return Err(Error::config("either --config or --dataset is required"))
            }
        };

        if self.config.is_some() {
            if let Some(preset) = &self.dataset {
                let fresh = ExperimentConfig::preset(preset, config.model, config.theta0)?;
                config.dataset = fresh.dataset;
            }
            if let Some(kind) = model {
                config.model = kind;
                // Switching to a model without an untrained layer drops the
                // now-inapplicable theta0 setting.
                if !kind.needs_theta0() {
                    config.theta0 = None;
                }
            }
            if self.theta0.is_some() {
                config.theta0 = theta0;
            }
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(epochs) = self.epochs {
            config.train.epochs = epochs;
        }
        if let Some(batch) = self.batch_size {
            config.train.batch_size = batch;
        }
        if let Some(s) = self.s_train {
            config.sampling.s_train = s;
        }
        if let Some(s) = self.s_infer {
            config.sampling.s_infer = s;
        }
        if let Some(grid) = &self.noise_grid {
            config.noise_grid = grid.clone();
        }
        if let Some(repeats) = self.repeats {
            config.repeats = repeats;
        }
        if self.noise_before_standardize {
            config.noise_before_standardize = true;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run unsupervised pretraining and export the frozen layer.
    Pretrain {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for gbrbm.params and pelm.params.
        #[arg(long, default_value = "pretrain-out")]
        out: PathBuf,
    },
    /// Train one model and save the best and final parameters.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "train-out")]
        out: PathBuf,
    },
    /// Report a saved model's test accuracy, optionally under noise.
    Eval {
        /// Saved model parameters (a .params file).
        model_file: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Noise level to apply to the test inputs.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
    /// Run the full experiment: repeats x training x noise sweep -> report.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Merge sweep reports into a model comparison table.
    Report {
        /// report.json files from sweep runs.
        inputs: Vec<PathBuf>,
        /// Optional path for the merged TSV table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn data_dir(cli_flag: &Option<PathBuf>) -> PathBuf {
    cli_flag
        .clone()
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> Result<(), Error> {
    let dir = data_dir(&cli.data_dir);
    match cli.command {
        Command::Pretrain { config, out } => {
            let config = config.resolve()?;
            let run_id = bench::run_pretrain(&config, &dir, &out)?;
            println!("pretraining run {run_id}");
            println!("wrote {}", out.join("gbrbm.params").display());
            println!("wrote {}", out.join("pelm.params").display());
        }
        Command::Train { config, out } => {
            let config = config.resolve()?;
            let label = config.model_label();
            let trained = bench::run_train(&config, &dir, &out)?;
            println!("trained {label} for {} epochs", trained.history.len());
            if let (Some(epoch), Some(acc)) = (trained.best_epoch, trained.best_accuracy) {
                println!("best test accuracy {acc:.4} at epoch {epoch}");
            }
            println!("wrote {}", out.join("model_best.params").display());
            println!("wrote {}", out.join("model_final.params").display());
            println!("wrote {}", out.join("history.tsv").display());
        }
        Command::Eval {
            model_file,
            config,
            sigma,
        } => {
            let config = config.resolve()?;
            let acc = bench::evaluate(&config, &dir, &model_file, sigma)?;
            println!("accuracy {acc:.4} (sigma = {sigma})");
        }
        Command::Sweep { config, out } => {
            let config = config.resolve()?;
            let report = bench::run_experiment(&config, &dir, &out)?;
            print!("{}", report.to_tsv());
            match report.adr {
                Some(adr) => println!("ADR {adr:.2}%"),
                None => println!("ADR n/a (grid has no sigma = 1 entry)"),
            }
            println!("report digest {}", report.digest);
            println!("wrote {}", out.join("report.json").display());
        }
        Command::Report { inputs, out } => {
            if inputs.is_empty() {
                return Err(Error::usage("report: no input files given"));
            }
            let reports = inputs
                .iter()
                .map(|p| NoiseSweepReport::read(p))
                .collect::<Result<Vec<_>, _>>()?;
            let table = comparison_table(&reports)?;
            print!("{table}");
            if let Some(path) = out {
                std::fs::write(&path, &table).map_err(Error::Io)?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
