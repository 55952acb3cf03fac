use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fusegraph::dataset::load_id_list;
use fusegraph::pipeline::{self, PipelineConfig, Stage};
use fusegraph::synth::{self, SynthConfig};
use fusegraph::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fusegraph",
    version,
    about = "Graph-based rank fusion pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the train rank store.
    Ranks(Common),
    /// Extract training fusion graphs.
    Graphs(Common),
    /// Fit the vocabulary or codebook and embed the training graphs.
    Embed(Common),
    /// Fit the estimator.
    Train(Common),
    /// Run every training stage.
    Fit(Common),
    /// Predict the test split, or the ids listed in `--ids`.
    Infer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ids: Option<PathBuf>,
    },
    /// Train and score the concatenation and majority-vote baselines.
    Baselines(Common),
    /// Score an existing predictions file.
    Evaluate(Common),
    /// Metric-versus-L table.
    #[command(name = "sweep-l")]
    SweepL(Common),
    /// Check that no test sample reached a training artifact.
    Audit(Common),
    /// Write a synthetic two-modality dataset and config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        samples: usize,
    },
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = std::env::current_dir()
            .map_err(|e| Error::io(".", e))?
            .join(out);
    }
    Ok(cfg)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ranks(c) => pipeline::run_stage(&load(&c)?, Stage::Ranks).map(drop),
        Command::Graphs(c) => pipeline::run_stage(&load(&c)?, Stage::Graphs).map(drop),
        Command::Embed(c) => pipeline::run_stage(&load(&c)?, Stage::Embed).map(drop),
        Command::Train(c) => pipeline::run_stage(&load(&c)?, Stage::Train).map(drop),
        Command::Fit(c) => pipeline::run_training(&load(&c)?).map(drop),
        Command::Infer { common, ids } => {
            let cfg = load(&common)?;
            let ids = ids.map(load_id_list).transpose()?;
            let outcome = pipeline::run_inference(&cfg, ids)?;
            log::info!("{} predictions written", outcome.predictions.len());
            if let Some(b) = outcome.report.and_then(|r| r.get("balanced_accuracy")) {
                log::info!("balanced accuracy {b:.4}");
            }
            Ok(())
        }
        Command::Baselines(c) => {
            let report = pipeline::run_baselines(&load(&c)?)?;
            for (name, r) in &report.methods {
                if let Some(b) = r.get("balanced_accuracy") {
                    log::info!("{name}: balanced accuracy {b:.4}");
                }
            }
            Ok(())
        }
        Command::Evaluate(c) => pipeline::run_evaluate(&load(&c)?).map(drop),
        Command::SweepL(c) => pipeline::run_sweep(&load(&c)?).map(drop),
        Command::Audit(c) => {
            let report = pipeline::audit_output(&load(&c)?)?;
            for v in &report.violations {
                log::error!("{v}");
            }
            if report.is_clean() {
                log::info!("audit clean");
                Ok(())
            } else {
                Err(Error::Compatibility(format!(
                    "{} leakage findings",
                    report.violations.len()
                )))
            }
        }
        Command::Synth { out, seed, samples } => {
            let data = synth::generate(&SynthConfig {
                samples,
                seed,
                ..SynthConfig::default()
            })?;
            synth::write_dataset(&out, &data, seed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Ok(n) = std::env::var("FUSEGRAPH_WORKERS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    log::warn!("could not set worker count: {e}");
                }
            }
            _ => log::warn!("ignoring FUSEGRAPH_WORKERS={n}"),
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
