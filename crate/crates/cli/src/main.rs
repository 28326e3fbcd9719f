use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Trial-driven telegraph process: exact laws, simulation and validation.
#[derive(Parser, Debug)]
#[command(name = "telegraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Atoms and density of S_t on an x-grid.
    Law(LawArgs),
    /// Monte Carlo histogram of S_t, optionally with path traces.
    Simulate(SimulateArgs),
    /// Run the validation suite; exit code 1 if any check fails.
    Validate(ValidateArgs),
    /// E[V_t | V_0] on a time grid.
    Meanvel(MeanvelArgs),
    /// Density data for the figure parameter sweeps, one CSV per curve.
    Figures(FiguresArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Trial scheme: bernoulli:p=.. or polya:b=..,r=..,A=..
    #[arg(long)]
    pub scheme: String,
    /// Intertime family: linexp:lambda=..,mu=.., gammaexp:lambda=..,mu=.. or exp:lambda=..,mu=..
    #[arg(long)]
    pub intertimes: String,
    /// Forward speed.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Backward speed.
    #[arg(long, default_value_t = 1.0)]
    pub v: f64,
    /// Time horizon.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file (standard output if omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct LawArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of interior x points.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid: u64,
    /// Law evaluator from the registry.
    #[arg(long, default_value = "closed-form")]
    pub evaluator: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of paths; scientific notation such as 1e6 is accepted.
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub paths: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    /// Also dump the first N paths epoch by epoch.
    #[arg(long, default_value_t = 0)]
    pub trace: u64,
    #[arg(long, env = "TELEGRAPH_SEED", default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub paths: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    /// Largest number of switches in the enumeration checks.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..=16))]
    pub k_max: u64,
    #[arg(long, default_value = "closed-form")]
    pub evaluator: String,
    /// Mean-velocity method from the registry.
    #[arg(long, default_value = "closed-form")]
    pub method: String,
    /// Simulate a deliberately mismatched trial scheme; the suite must fail.
    #[arg(long)]
    pub negative_control: bool,
    #[arg(long, env = "TELEGRAPH_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Report file (standard output if omitted). Always JSON.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MeanvelArgs {
    /// `--t` is the last time of the grid.
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of grid times `t * i / steps`, `i = 1..=steps`.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    #[arg(long, default_value = "closed-form")]
    pub method: String,
    /// Add Monte Carlo columns with this many paths per time and sign.
    #[arg(long, default_value = "0", value_parser = parse_count_or_zero)]
    pub mc_paths: u64,
    #[arg(long, env = "TELEGRAPH_SEED", default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct FiguresArgs {
    /// Directory for the CSV files; created if missing.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid: u64,
    /// Comma-separated figure numbers (3 to 8).
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7,8")]
    pub only: Vec<u8>,
}

fn parse_count_or_zero(s: &str) -> Result<u64, String> {
    let x: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= 1e15 {
        Ok(x as u64)
    } else {
        Err(format!("'{s}' is not a whole number in [0, 1e15]"))
    }
}

fn parse_count(s: &str) -> Result<u64, String> {
    match parse_count_or_zero(s)? {
        0 => Err("must be at least 1".into()),
        n => Ok(n),
    }
}

/// Failures that end the program.
#[derive(Debug)]
pub enum Failure {
    /// Bad parameters or an evaluation error: exit code 2.
    Usage(String),
    /// Validation ran but some check failed: exit code 1.
    Checks,
}

impl From<telegraph_core::Error> for Failure {
    fn from(e: telegraph_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(format!("json error: {e}"))
    }
}

pub fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Law(a) => commands::law(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Validate(a) => commands::validate(a),
        Command::Meanvel(a) => commands::meanvel(a),
        Command::Figures(a) => commands::figures(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("telegraph: {}", msg.replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
