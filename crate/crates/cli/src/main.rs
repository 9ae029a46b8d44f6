//! Command-line driver: ingest, fit, verify, design, evaluate and stats.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use protodsl::designer::DesignerStrategy;
use protodsl::pipeline::FitView;

#[derive(Debug, Parser)]
#[command(name = "protodsl", version, about = "Protocol DSL synthesis, verification and evaluation")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every stochastic step; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with hyperparameters and thresholds.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Answer model prompts from recorded fixtures in this directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub mock_lm: Option<PathBuf>,
    /// Answer model prompts in order from a JSON array of responses.
    #[arg(long, global = true, value_name = "FILE", conflicts_with = "mock_lm")]
    pub script_lm: Option<PathBuf>,
    /// Write every prompt and response as fixtures into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub record_lm: Option<PathBuf>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Preprocess raw protocols into instance actions and flow records.
    Ingest {
        /// One protocol JSON object per line.
        input: PathBuf,
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
    },
    /// Fit operation interfaces and/or product models.
    Fit {
        #[arg(long, default_value = "corpus.json")]
        corpus: PathBuf,
        #[arg(long, default_value = "both")]
        view: FitView,
        #[arg(long, short, default_value = "artifact.dsl.json")]
        out: PathBuf,
        /// Defaults to fit_trace.csv next to the artifact.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check a plan; exits 0 only when it passes.
    Verify {
        plan: PathBuf,
        #[arg(long)]
        artifact: PathBuf,
        /// JSON array of available reagents, or a task file.
        #[arg(long)]
        reagents: PathBuf,
        /// Write the report JSON here.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Design a plan for a task.
    Design {
        #[arg(long, default_value = "EE+")]
        strategy: DesignerStrategy,
        #[arg(long)]
        task: PathBuf,
        #[arg(long, default_value = "artifact.dsl.json")]
        artifact: PathBuf,
        #[arg(long, default_value = "corpus.json")]
        corpus: PathBuf,
        #[arg(long, short, default_value = "plan.plan.json")]
        out: PathBuf,
        /// Write the verification report JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Corpus protocol held out as the design target.
        #[arg(long)]
        target: Option<String>,
    },
    /// Score a plan against a reference plan.
    Evaluate {
        plan: PathBuf,
        truth: PathBuf,
        #[arg(long, short, default_value = "metrics.csv")]
        out: PathBuf,
        /// Task file whose kind fills the task column.
        #[arg(long)]
        task: Option<PathBuf>,
    },
    /// Summarize an artifact.
    Stats { artifact: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
