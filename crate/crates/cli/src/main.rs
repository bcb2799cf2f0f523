use std::path::PathBuf;
use std::process::ExitCode;

use acegan::pipeline::{ConfigError, Pipeline, PipelineConfig, PipelineError, Stage};
use anyhow::Context;
use clap::{Parser, Subcommand};

/// Falls back to this variable for `data_dir` when neither the config file
/// nor `--data` sets it.
const DATA_DIR_ENV: &str = "ACEGAN_DATA_DIR";

#[derive(Parser, Debug)]
#[command(name = "acegan", version, about = "ECG arrhythmia classification pipeline")]
struct Cli {
    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Pipeline seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// WFDB data directory; overrides the config file.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Read and validate every record in the data directory.
    Ingest,
    /// Cut records into beats and segment lengths.
    Segment,
    /// Estimate normal beats of each test subject without labels.
    EstimateNormals,
    /// Rank training S beats and keep the most representative.
    SelectS,
    /// Assemble the common training pool.
    BuildPool,
    /// Train the generator/discriminator pair.
    TrainGan,
    /// Sample generated beats for fine-tuning.
    Generate,
    /// Fine-tune one classifier per test subject.
    Finetune,
    /// Classify every beat of every test subject.
    Classify,
    /// Score predictions and write the report.
    Evaluate,
    /// Write a synthetic cohort into the data directory.
    Synth,
    /// Run every stage in order.
    RunAll,
    /// Print the effective configuration.
    ShowConfig,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Self::Ingest => Stage::Ingest,
            Self::Segment => Stage::Segment,
            Self::EstimateNormals => Stage::EstimateNormals,
            Self::SelectS => Stage::SelectS,
            Self::BuildPool => Stage::BuildPool,
            Self::TrainGan => Stage::TrainGan,
            Self::Generate => Stage::Generate,
            Self::Finetune => Stage::Finetune,
            Self::Classify => Stage::Classify,
            Self::Evaluate => Stage::Evaluate,
            Self::Synth | Self::RunAll | Self::ShowConfig => return None,
        })
    }
}

fn effective_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut config = PipelineConfig::default();
    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
        config.data_dir = PathBuf::from(dir);
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        config.apply(&text)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(data) = &cli.data {
        config.data_dir = data.clone();
    }
    for kv in &cli.overrides {
        let (k, v) = kv.split_once('=').ok_or(ConfigError::Syntax { line: 0 })?;
        config.set(k.trim(), v.trim())?;
    }
    Ok(config)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let config = effective_config(cli)?;
    let pipeline = Pipeline::new(config);
    match cli.command {
        Command::ShowConfig => print!("{}", pipeline.config.render()),
        Command::Synth => {
            let files = pipeline.synth()?;
            println!("wrote {} records to {}", files.len(), pipeline.config.data_dir.display());
        }
        Command::RunAll => {
            let report = pipeline.run_all()?;
            print!("{}", report.render_text());
        }
        Command::Evaluate => {
            pipeline.run(Stage::Evaluate)?;
            print!("{}", pipeline.read_report()?.render_text());
        }
        other => {
            let stage = other.stage().expect("stage subcommand");
            pipeline.run(stage)?;
            println!("{} done; artifacts in {}", stage.name(), pipeline.stage_dir(stage).display());
        }
    }
    Ok(())
}

/// One line: `error kind=<Kind> message=<text>`.
fn error_line(err: &anyhow::Error) -> String {
    let kind = if let Some(e) = err.downcast_ref::<PipelineError>() {
        e.kind()
    } else if err.downcast_ref::<ConfigError>().is_some() {
        "ConfigError"
    } else if err.downcast_ref::<std::io::Error>().is_some() {
        "IoError"
    } else {
        "Error"
    };
    let message = format!("{err:#}").replace('\n', " ");
    format!("error kind={kind} message={message}")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_line(&err));
            ExitCode::from(if err.downcast_ref::<ConfigError>().is_some() { 2 } else { 1 })
        }
    }
}
