//! `transitflow` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure (stage named on stderr), 2 usage.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "transitflow", version, about = "Clean and contextualize transit GPS feeds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stream a feed file or a synthetic corpus into a tuple store.
    Ingest(IngestArgs),
    /// Clean every tuple in a store.
    Clean(CleanArgs),
    /// Enrich cleaned tuples with mobility context.
    Contextualize(ContextualizeArgs),
    /// Clean and contextualize a store in one run.
    Pipeline(PipelineArgs),
    /// Summarize a pipeline run directory.
    Report(ReportArgs),
    /// Write a designed fixture or a synthetic corpus with its reference data.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["source", "synth"]))]
pub struct IngestArgs {
    /// NDJSON or CSV feed file.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Synthetic corpus config (TOML).
    #[arg(long)]
    pub synth: Option<PathBuf>,
    #[arg(long, env = "TRANSITFLOW_STORE")]
    pub store: PathBuf,
    /// Pace by event time and close windows after the allowed lateness.
    #[arg(long)]
    pub real_time: bool,
    /// Event-time speedup factor in real-time mode.
    #[arg(long, default_value_t = 1.0, requires = "real_time")]
    pub speedup: f64,
    /// Stop after this many seconds of wall-clock time.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Engine config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[arg(long, env = "TRANSITFLOW_STORE")]
    pub store: PathBuf,
    /// Cleaned tuples (NDJSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Cleaning report (JSON).
    #[arg(long)]
    pub report: PathBuf,
    /// Canonical-value table (JSON).
    #[arg(long)]
    pub canon: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContextualizeArgs {
    /// Cleaned tuples (NDJSON).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub gtfs: PathBuf,
    #[arg(long)]
    pub geometry: PathBuf,
    /// Enriched tuples (NDJSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Station visits (NDJSON).
    #[arg(long)]
    pub visits: Option<PathBuf>,
    /// Run report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, env = "TRANSITFLOW_STORE")]
    pub store: PathBuf,
    #[arg(long)]
    pub gtfs: PathBuf,
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long)]
    pub canon: Option<PathBuf>,
    /// Run directory for every output artifact.
    #[arg(long)]
    pub out: PathBuf,
    /// Reduce workers; 0 uses every available core.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Md,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generated {
    /// The 518-tuple loop trip.
    Loop,
    /// The trip that leaves its route.
    Detour,
    /// A synthetic corpus; see `--config`.
    Corpus,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub what: Generated,
    #[arg(long)]
    pub out: PathBuf,
    /// Corpus config (TOML); field-corpus defect ratios at 100,000 tuples by default.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Clean(a) => commands::clean(&a),
        Command::Contextualize(a) => commands::contextualize(&a),
        Command::Pipeline(a) => commands::pipeline(&a),
        Command::Report(a) => report::emit(&a),
        Command::Generate(a) => commands::generate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("transitflow: {e}");
            ExitCode::from(1)
        }
    }
}
