//! The `travelsim` command line: preprocess, plan, simulate and score.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 planning pipeline
//! error, 4 simulation abort.

mod commands;
mod output;
mod sources;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;
pub const EXIT_ABORT: i32 = 4;

/// A command failure with its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn pipeline(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PIPELINE,
            message: message.into(),
        }
    }

    pub fn abort(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_ABORT,
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "travelsim",
    version,
    about = "Plan, simulate and score multi-day travel itineraries"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Fixture bundle directory (deterministic, offline).
    #[arg(long, global = true, value_name = "DIR")]
    pub fixture: Option<PathBuf>,
    /// Use the remote map and chat services configured in the environment.
    #[arg(long, global = true)]
    pub live: bool,
    /// Bundle whose static tables (POIs, restaurants, narratives, profiles) back a live run.
    #[arg(long, global = true, value_name = "DIR")]
    pub data: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// JSON file overriding the personalization weights.
    #[arg(long, global = true, value_name = "FILE")]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    #[value(name = "maop")]
    Maop,
    #[value(name = "naive_wide")]
    NaiveWide,
    #[value(name = "long_horizon")]
    LongHorizon,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Maop => "maop",
            Self::NaiveWide => "naive_wide",
            Self::LongHorizon => "long_horizon",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    /// Replay decisions from a JSONL file.
    Scripted,
    /// Follow the plan to the minute.
    Echo,
    /// Ask the chat service (canned responses in fixture mode).
    Remote,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster POIs by day and route each cluster from the hotel.
    Preprocess(PreprocessArgs),
    /// Generate a plan with MAoP or a baseline.
    Plan(PlanArgs),
    /// Run the traveler simulation for each (plan, profile) pair.
    Simulate(SimulateArgs),
    /// Score plans and their simulated traces.
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    /// POI file; defaults to the bundle's pois.json.
    #[arg(long, value_name = "FILE")]
    pub pois: Option<PathBuf>,
    /// Hotel POI id.
    #[arg(long)]
    pub hotel: String,
    #[arg(long)]
    pub days: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Traveler profile id; defaults to the bundle plan's traveler.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub days: Option<u32>,
    #[arg(long)]
    pub hotel: Option<String>,
    #[arg(long)]
    pub origin: Option<String>,
    /// Planning request; a default is built from the trip parameters.
    #[arg(long)]
    pub request: Option<String>,
    /// Strategist samples for decomposition.
    #[arg(long, default_value_t = 4)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub max_aspects: usize,
    /// For naive_wide: a JSON list of {"aspect", "guidance"} to analyse instead of decomposing.
    #[arg(long, value_name = "FILE")]
    pub aspects: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long = "plan", value_name = "FILE", required = true)]
    pub plans: Vec<PathBuf>,
    /// Profile ids; defaults to each plan's traveler.
    #[arg(long = "profile")]
    pub profiles: Vec<String>,
    #[arg(long, value_enum, default_value = "scripted")]
    pub policy: PolicyKind,
    /// Decision script for the scripted policy; defaults to the bundle's
    /// decisions/<profile>.jsonl.
    #[arg(long, value_name = "FILE")]
    pub decisions: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub max_steps: u32,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long = "plan", value_name = "FILE", required = true)]
    pub plans: Vec<PathBuf>,
    #[arg(long = "trace", value_name = "FILE", required = true)]
    pub traces: Vec<PathBuf>,
    /// Blog posts keyed by POI id; defaults to the bundle's posts.json.
    #[arg(long, value_name = "FILE")]
    pub posts: Option<PathBuf>,
    /// `chat` (canned or remote evaluator) or `constant:<score>`.
    #[arg(long, default_value = "chat")]
    pub evaluator: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}
