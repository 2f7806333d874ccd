//! `bellgap`: command-line front end for the bellgap toolkit.

mod commands;
mod config;
mod output;
mod svg;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Argument(String),
    Config(String),
    Io(String),
    Core(bellgap_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Argument(_) => "argument",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) => e.kind(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind() {
            "usage" | "argument" | "config" => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Argument(m) | CliError::Config(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<bellgap_core::Error> for CliError {
    fn from(e: bellgap_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    error: ErrorBody<'a>,
}

#[derive(Debug, Parser)]
#[command(name = "bellgap", version, about = "Compare quantum and local hidden-variable CHSH correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for every sampled quantity.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write an SVG plot next to `--out` (same stem, `.svg`).
    #[arg(long)]
    pub svg: bool,
    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Read angle flags in degrees instead of radians.
    #[arg(long)]
    pub degrees: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableChoice {
    B1,
    B2,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyChoice {
    /// a = 0, a′ = π/2, b = π/4, b′ = 3π/4.
    Canonical,
    /// a = b = θ, a′ = b′ = θ + π/2.
    Aligned,
    /// a = 0, a′ = π/2, b = θ₀ + δ, b′ = π/2 + θ₀ + δ.
    Vicinity,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Start of the θ range. Radians unless `--degrees`; default 0 rad.
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    /// End of the θ range. Radians unless `--degrees`; default π rad.
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Grid spacing. Radians unless `--degrees`; default 0.01 rad.
    #[arg(long, allow_negative_numbers = true)]
    pub step: Option<f64>,
    /// Correlation gap below which θ counts as an overlap region.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Estimate every column from this many samples instead of exactly.
    #[arg(long)]
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_enum, default_value_t = TableChoice::All)]
    pub table: TableChoice,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    /// Angular-momentum spread ΔJ (ħ = 1); vicinity half-width is 1/(2ΔJ).
    #[arg(long, allow_negative_numbers = true)]
    pub delta_j: f64,
    /// Start of the scanned range. Radians unless `--degrees`; default 0 rad.
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    /// End of the scanned range. Radians unless `--degrees`; default π rad.
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Correlation gap for the tolerance-scan regions.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Bracketing grid for root finding. Radians unless `--degrees`; default 0.01 rad.
    #[arg(long, allow_negative_numbers = true)]
    pub grid_step: Option<f64>,
    /// Root tolerance on |qm − hvt|.
    #[arg(long, default_value_t = 1e-12, allow_negative_numbers = true)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct AttackArgs {
    #[arg(long, value_enum, default_value_t = PolicyChoice::Canonical)]
    pub policy: PolicyChoice,
    /// θ for the aligned policy. Radians unless `--degrees`; default 0 rad.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Convergence separation θ₀ for the vicinity policy and sweep. Radians unless `--degrees`; default 0 rad.
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: Option<f64>,
    /// Offset δ for the vicinity policy. Radians unless `--degrees`; default 0 rad.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Rounds per session.
    #[arg(long, default_value_t = 10_000)]
    pub rounds: u64,
    /// Sessions per detection estimate.
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// ΔJ setting the sweep half-width 1/(2ΔJ).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub delta_j: f64,
    /// Offsets in the vicinity sweep.
    #[arg(long, default_value_t = 21)]
    pub sweep_steps: usize,
    /// Use exact correlations in the sweep instead of sampled sessions.
    #[arg(long)]
    pub exact_sweep: bool,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseFitArgs {
    #[arg(long, value_enum, default_value_t = TableChoice::B2)]
    pub table: TableChoice,
    /// Depolarizing probability of a model to compare against.
    #[arg(long, allow_negative_numbers = true)]
    pub depolarizing_p: Option<f64>,
    /// Readout flip probability of a model to compare against.
    #[arg(long, allow_negative_numbers = true)]
    pub readout_epsilon: Option<f64>,
}

#[derive(Debug, Subcommand)]
#[command(args_override_self = true)]
pub enum Command {
    /// Tabulate E and S for both theories over a θ range.
    #[command(args_override_self = true)]
    Sweep {
        #[command(flatten)]
        args: SweepArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute the bundled angle tables and compare with the reported values.
    #[command(args_override_self = true)]
    ReproduceTables {
        #[command(flatten)]
        args: ReproduceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Convergence points, their uncertainty vicinities and overlap regions.
    #[command(args_override_self = true)]
    Convergence {
        #[command(flatten)]
        args: ConvergenceArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Detection rates of a hidden-variable adversary plus a vicinity sweep.
    #[command(args_override_self = true)]
    Attack {
        #[command(flatten)]
        args: AttackArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Fit attenuation factors to the reported observed values.
    #[command(args_override_self = true)]
    NoiseFit {
        #[command(flatten)]
        args: NoiseFitArgs,
        #[command(flatten)]
        common: Common,
    },
}

fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let args = config::expand(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            let message = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("For more information") && !l.starts_with("tip:"))
                .collect::<Vec<_>>()
                .join(" ")
                .trim_start_matches("error: ")
                .to_string();
            return Err(CliError::Usage(message));
        }
    };
    commands::dispatch(cli.command)
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let object = ErrorObject { error: ErrorBody { kind: e.kind(), message: e.to_string() } };
            eprintln!(
                "{}",
                serde_json::to_string(&object)
                    .unwrap_or_else(|_| r#"{"error":{"kind":"internal","message":""}}"#.into())
            );
            ExitCode::from(e.exit_code())
        }
    }
}
