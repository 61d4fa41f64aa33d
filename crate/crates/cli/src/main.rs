mod commands;
mod config;
mod exit;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::exit::{CliError, Outcome};

/// Stylometric troll-author profiling pipeline.
#[derive(Debug, Parser)]
#[command(name = "stylometry", version)]
struct Cli {
    /// Flat key=value configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice; required here or in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory holding stopwords.txt, easy_words.txt and pos_lexicon.tsv.
    #[arg(long, global = true)]
    assets: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a JSONL post file and summarise its authors.
    Ingest(InputArgs),
    /// Split authors, fit the Burrows model and transform, write features.
    Featurize(FeaturizeArgs),
    /// Train one model on the training split.
    Train(TrainArgs),
    /// Random-search hyper-parameters against the validation split.
    Tune(TuneArgs),
    /// Score the saved model on a labeled split.
    Evaluate(EvaluateArgs),
    /// Score the authors of a new post file.
    Predict(InputArgs),
    /// Per-word troll share and points over the random baseline.
    ReportWords(ReportArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FeaturizeArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Most frequent words kept for Burrows' Z.
    #[arg(long)]
    burrows_words: Option<usize>,
    /// Train, validation and test fractions, e.g. `0.7,0.15,0.15`.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// `forest`, `boost` or `ensemble`.
    #[arg(long)]
    model: Option<String>,
    /// Fixed parameter override `name=value`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct TuneArgs {
    /// `forest` or `boost`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Distribution override `name=spec`, e.g. `gamma=loguniform 1e-4 1`.
    #[arg(long = "space")]
    space: Vec<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// `train`, `validation` or `test`.
    #[arg(long)]
    partition: Option<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of most frequent words listed.
    #[arg(long)]
    top: Option<usize>,
}

fn pairs(raw: &[String], flag: &str) -> Outcome<Vec<(String, String)>> {
    raw.iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
                .ok_or_else(|| CliError::usage(format!("--{flag} expects name=value, got `{p}`")))
        })
        .collect()
}

fn run(cli: Cli) -> Outcome<()> {
    let config = match &cli.config {
        Some(path) => config::Config::load(path)?,
        None => config::Config::default(),
    };
    let settings = commands::Settings::resolve(
        &config,
        commands::Globals {
            seed: cli.seed,
            threads: cli.threads,
            assets: cli.assets,
            out: cli.out,
        },
    )?;
    if let Some(n) = settings.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::internal(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest(&settings.with_input(a.input)),
        Command::Featurize(a) => {
            let mut s = settings.with_input(a.input);
            if let Some(n) = a.burrows_words {
                s.burrows_words = n;
            }
            if let Some(split) = a.split {
                s.split = commands::parse_split(&split)?;
            }
            commands::featurize(&s)
        }
        Command::Train(a) => {
            let mut s = settings;
            if let Some(m) = a.model {
                s.model = m;
            }
            s.params.extend(pairs(&a.params, "param")?);
            commands::train(&s)
        }
        Command::Tune(a) => {
            let mut s = settings;
            if let Some(m) = a.model {
                s.model = m;
            }
            if let Some(t) = a.trials {
                s.trials = t;
            }
            s.space.extend(pairs(&a.space, "space")?);
            commands::tune(&s)
        }
        Command::Evaluate(a) => {
            let mut s = settings;
            if let Some(p) = a.partition {
                s.partition = commands::parse_partition(&p)?;
            }
            commands::evaluate(&s)
        }
        Command::Predict(a) => commands::predict(&settings.with_input(a.input)),
        Command::ReportWords(a) => {
            let mut s = settings.with_input(a.input);
            if let Some(n) = a.top {
                s.burrows_words = n;
            }
            commands::report_words(&s)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
