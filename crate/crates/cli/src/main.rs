mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trafficscope::ErrorFamily;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] trafficscope::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Json(_) => 3,
            CliError::Core(e) => match e.family() {
                ErrorFamily::Io => 3,
                ErrorFamily::Parse => 4,
                ErrorFamily::Argument => 5,
                ErrorFamily::Data => 6,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "trafficscope", version, about = "Simulate and analyze network traffic traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trace from a simulation model.
    Simulate(SimulateArgs),
    /// Run multiresolution, marginal and level analyses on a trace.
    Analyze(AnalyzeArgs),
    /// Run the interval detection algorithm on one session or a set of them.
    Ida(IdaArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// `<seconds> <bytes> [...]`
    Packets,
    /// `<seconds> <bytes> <shost> <rhost> <sport> <rport>`
    Connections,
    /// One value per line.
    Prebinned,
}

#[derive(Args, Clone, Debug, serde::Serialize)]
pub struct InputArgs {
    /// Input trace file.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "prebinned")]
    pub format: InputFormat,
    /// Bin width in seconds.
    #[arg(long, default_value_t = 0.001)]
    pub bin_width: f64,
    /// Connection key `shost,rhost,sport,rport` (connections format).
    #[arg(long)]
    pub connection: Option<String>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Flat key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model label or level list such as `7/12/17`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub bins_log2: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Averaging,
    Energy,
    Autocorr,
    Kolmogorov,
    Tool1,
    Tool2,
    Tool3,
    Tool4,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Analyses to run.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "averaging,energy")]
    pub analyses: Vec<Analysis>,
    /// Estimator definition: 1 disjoint blocks, 2 overlapping blocks.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub definition: u8,
    /// Averaging exponent.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Window length of the windowed Kolmogorov distance.
    #[arg(long, default_value_t = 512)]
    pub window: usize,
    /// Largest autocorrelation lag (default: a quarter of the trace).
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long, default_value_t = trafficscope::tools::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = trafficscope::tools::DEFAULT_FLAT_THRESHOLD, allow_hyphen_values = true)]
    pub threshold: f64,
    /// Scale count of Tools 3 and 4 (default: the largest suggested).
    #[arg(long)]
    pub k: Option<u32>,
    /// Window exponent of Tool 4.
    #[arg(long, default_value_t = trafficscope::tools::DEFAULT_WINDOW_EXPONENT)]
    pub s: u32,
    /// Accept k and s outside the suggested ranges.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct IdaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Superpose every session: each file of a directory, or each
    /// connection of a connections-format trace.
    #[arg(long)]
    pub aggregate: bool,
    /// Class spacing; `1.41421356` gives half-octave classes.
    #[arg(long, default_value_t = 2.0)]
    pub base: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, default_value_t = 3.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.3)]
    pub c2: f64,
    /// Divide every gap class by the session length.
    #[arg(long)]
    pub gap_by_length: bool,
    /// Apply the column rule to the gap column as well.
    #[arg(long)]
    pub normalize_gap_column: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Ida(a) => commands::ida(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
