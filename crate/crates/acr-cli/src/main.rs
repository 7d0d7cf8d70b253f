use acr_cli::commands::{cmd_eval, cmd_export_hist, cmd_make_data, cmd_sweep, cmd_train};
use acr_cli::{CliError, CliResult, ExperimentConfig};
use acr_core::scores::ScorerSpec;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Train, evaluate, and sweep multimodal failure-detection experiments.
#[derive(Parser)]
#[command(name = "acr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON experiment config; omitted fields take the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's method arm.
    #[arg(long)]
    method: Option<String>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's scorer.
    #[arg(long)]
    scorer: Option<String>,
    /// Test-time noise scale on one modality (train/val stay clean).
    #[arg(long = "shift-sigma")]
    shift_sigma: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(method) = &self.method {
            cfg.method = method.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(scorer) = &self.scorer {
            cfg.scorer = scorer.clone();
        }
        if let Some(sigma) = self.shift_sigma {
            cfg.shift_sigma = Some(sigma);
        }
        // Fail fast on anything unusable.
        cfg.method()?;
        cfg.scorer_spec()?;
        cfg.synth_config().validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one method arm and export metrics, curves, history, histogram,
    /// checkpoint, and the test-set logit dump.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate an external logit dump (no model required).
    Eval {
        /// Logit dump CSV.
        #[arg(long)]
        dump: PathBuf,
        /// Scorer name.
        #[arg(long, default_value = "msp")]
        scorer: String,
        /// Renormalize restricted fused probabilities over the real classes.
        #[arg(long)]
        renormalize: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run each (method, seed) pair and aggregate into sweep.csv.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated seed list; defaults to the config's seed list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Comma-separated method list; defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Score a stored dataset split with a checkpoint and export the
    /// correct/incorrect score histogram.
    ExportHist {
        /// Checkpoint JSON written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Directory holding `{split}_mod{k}.csv` files.
        #[arg(long)]
        data: PathBuf,
        /// Which split to score.
        #[arg(long, default_value = "test")]
        split: String,
        /// Number of fixed-width bins over [0, 1].
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long, default_value = "msp")]
        scorer: String,
        #[arg(long)]
        renormalize: bool,
        /// Output CSV path.
        #[arg(long, default_value = "hist_scores.csv")]
        out: PathBuf,
    },
    /// Generate the synthetic benchmark and export it as CSV files.
    MakeData {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train { config, out } => cmd_train(&config.resolve()?, &out),
        Command::Eval { dump, scorer, renormalize, out } => {
            let spec = ScorerSpec::from_name(&scorer).map_err(CliError::from)?;
            cmd_eval(&dump, &spec, renormalize, &out)
        }
        Command::Sweep { config, seeds, methods, out } => {
            let cfg = config.resolve()?;
            let seeds = seeds.unwrap_or_else(|| cfg.seeds.clone());
            let methods = methods.unwrap_or_else(|| cfg.methods.clone());
            cmd_sweep(&cfg, &methods, &seeds, &out)
        }
        Command::ExportHist {
            checkpoint,
            data,
            split,
            bins,
            scorer,
            renormalize,
            out,
        } => {
            let spec = ScorerSpec::from_name(&scorer).map_err(CliError::from)?;
            cmd_export_hist(&checkpoint, &data, &split, bins, &spec, renormalize, &out)
        }
        Command::MakeData { config, out } => cmd_make_data(&config.resolve()?, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
