//! `asq`: generate question-answer datasets from AMR corpora.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use asq_core::corpus::PairingStrategy;
use asq_core::pipeline::{run_generate, run_inspect, run_stats, PipelineError, RunConfig, ScorerChoice};
use asq_core::preprocess::PreprocessConfig;
use asq_core::scorer::{NgramModel, SCORER_URL_ENV};

#[derive(Parser)]
#[command(
    name = "asq",
    version,
    about = "Mine question-answer pairs from AMR-annotated sentences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a JSON Lines QA dataset.
    Generate(GenerateArgs),
    /// Print dataset statistics.
    Stats {
        dataset: PathBuf,
        /// Run report supplying sentence and skipped-node counts.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Show one graph before and after preprocessing.
    Inspect {
        #[arg(long)]
        amr: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train a baseline n-gram model from plain text.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 1.0)]
        smoothing: f64,
    },
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON file with the same settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    amr: Option<PathBuf>,
    #[arg(long)]
    conllu: Option<PathBuf>,
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the run report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Baseline model file instead of the bundled one.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    scorer: Option<ScorerChoice>,
    #[arg(long)]
    scorer_url: Option<String>,
    #[arg(long)]
    pair: Option<PairingStrategy>,
    #[arg(long)]
    workers: Option<usize>,
}

fn read_config(path: &PathBuf) -> Result<RunConfig, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

fn resolve(args: GenerateArgs, env_url: Option<String>) -> Result<RunConfig, PipelineError> {
    let mut config = match &args.config {
        Some(path) => read_config(path)?,
        None => RunConfig::default(),
    };
    let overrides = [
        (&mut config.amr_path, args.amr),
        (&mut config.conllu_path, args.conllu),
        (&mut config.template_path, args.templates),
        (&mut config.mapping_path, args.mapping),
        (&mut config.output_path, args.out),
        (&mut config.report_path, args.report),
        (&mut config.model_path, args.model),
    ];
    for (slot, value) in overrides {
        if value.is_some() {
            *slot = value;
        }
    }
    if args.scorer_url.is_some() {
        config.scorer_url = args.scorer_url;
        config.scorer = ScorerChoice::Remote;
    }
    if let Some(scorer) = args.scorer {
        config.scorer = scorer;
    }
    if let Some(pair) = args.pair {
        config.pairing = pair;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(url) = env_url.filter(|u| !u.is_empty()) {
        config.scorer_url = Some(url);
    }
    Ok(config)
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Generate(args) => {
            let config = resolve(args, std::env::var(SCORER_URL_ENV).ok())?;
            let report = run_generate(&config)?;
            eprint!("{}", report.render());
        }
        Command::Stats { dataset, report, json } => {
            let stats = run_stats(&dataset, report.as_deref())?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&stats.to_json()).expect("stats serialize")
                );
            } else {
                print!("{}", stats.render_table());
            }
        }
        Command::Inspect { amr, index, config } => {
            let preprocess = match &config {
                Some(path) => read_config(path)?.preprocess,
                None => PreprocessConfig::default(),
            };
            print!("{}", run_inspect(&amr, index, &preprocess)?);
        }
        Command::Train {
            corpus,
            out,
            order,
            smoothing,
        } => {
            let text = std::fs::read_to_string(&corpus).map_err(|source| asq_core::corpus::CorpusError::Io {
                path: corpus.display().to_string(),
                source,
            })?;
            let model = NgramModel::train(&text, order, smoothing)?;
            std::fs::write(&out, model.serialize()).map_err(|source| asq_core::corpus::CorpusError::Io {
                path: out.display().to_string(),
                source,
            })?;
            eprintln!("wrote order-{order} model with vocabulary {}", model.vocabulary_size());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("asq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
