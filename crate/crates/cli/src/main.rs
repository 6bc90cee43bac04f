//! `mrn`: command-line front end for the multi-resolution toolkit.
//!
//! Every command validates its inputs before writing anything. Reports are
//! pure functions of the arguments; the wall-clock timestamp and version go
//! to a `<output>.manifest.json` file written beside the main output.
//!
//! Failures print one JSON line to stderr and exit with:
//!
//! | code | meaning                                  |
//! |------|------------------------------------------|
//! | 1    | internal or numerical failure            |
//! | 2    | usage error (unknown flag, bad value)    |
//! | 3    | file could not be read or written        |
//! | 4    | malformed input file or config           |
//! | 5    | shape mismatch                           |
//! | 6    | invalid argument                         |

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::CliError;

#[derive(Parser, Debug)]
#[command(name = "mrn", version, about = "Multi-resolution wavelets, U-Nets and diffusion diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multilevel DWT of a function on the interval or the square.
    Dwt(DwtArgs),
    /// Galerkin solution of u'' = f with zero boundary values.
    Pde(PdeArgs),
    /// Triangle codespace operations.
    #[command(subcommand)]
    Tri(TriCommand),
    /// Evaluates a saved U-Net on a function.
    UnetEval(UnetEvalArgs),
    /// The synthetic preconditioning experiment.
    TrainSynth(TrainSynthArgs),
    /// Staged multi-resolution training on a toy task.
    TrainStaged(TrainStagedArgs),
    /// Conditional-mean oracle table.
    Thm1(Thm1Args),
    /// Monte Carlo Haar band variances of the forward noising process.
    Spectrum(SpectrumArgs),
    /// Pooled fine process versus direct coarse process.
    Consistency(ConsistencyArgs),
}

#[derive(Args, Debug, serde::Serialize)]
struct DwtArgs {
    #[arg(long)]
    input: String,
    #[arg(long)]
    levels: u32,
    #[arg(long, default_value = "haar")]
    bank: String,
    /// JSON report; a CSV mirror of the bands is written next to it.
    #[arg(long)]
    out: String,
}

#[derive(Args, Debug, serde::Serialize)]
struct PdeArgs {
    /// Right-hand side f on the interval.
    #[arg(long)]
    rhs: String,
    #[arg(long)]
    resolution: u32,
    /// Solution coefficients in the H01 basis.
    #[arg(long)]
    out: String,
    /// Optional CSV of nodal values on the 2^resolution grid.
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Subcommand, Debug)]
enum TriCommand {
    /// Rearranges triangle values onto the square coding grid.
    Encode(TriArgs),
    /// Reads a square coding grid back into triangle order.
    Decode(TriArgs),
    /// Averages down to --depth.
    Pool(TriArgs),
    /// Forward four-point Haar transform.
    Haar(TriArgs),
    /// Writes synthetic triangle data.
    Synth(TriSynthArgs),
}

#[derive(Args, Debug, serde::Serialize)]
struct TriArgs {
    #[arg(long)]
    input: String,
    #[arg(long)]
    depth: u32,
    #[arg(long)]
    out: String,
}

#[derive(Copy, Clone, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
enum TriKind {
    Constant,
    Plane,
    Bump,
}

#[derive(Args, Debug, serde::Serialize)]
struct TriSynthArgs {
    #[arg(long, value_enum)]
    kind: TriKind,
    #[arg(long)]
    depth: u32,
    #[arg(long)]
    out: String,
}

#[derive(Args, Debug, serde::Serialize)]
struct UnetEvalArgs {
    #[arg(long)]
    net: String,
    #[arg(long)]
    input: String,
    #[arg(long)]
    resolution: u32,
    #[arg(long)]
    out: String,
}

#[derive(Copy, Clone, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
enum Target {
    Square,
    Cube,
}

#[derive(Copy, Clone, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
enum Pre {
    Identity,
    Abs,
}

#[derive(Args, Debug, serde::Serialize)]
struct TrainSynthArgs {
    #[arg(long, value_enum)]
    target: Target,
    #[arg(long, value_enum)]
    pre: Pre,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// JSON report; the fitted curve is mirrored to CSV.
    #[arg(long)]
    report: String,
}

#[derive(Args, Debug, serde::Serialize)]
struct TrainStagedArgs {
    /// JSON config with keys `spec`, `task`, `samples`, `data_seed` and
    /// `train`.
    #[arg(long)]
    config: String,
    /// Freeze earlier resolutions during later stages.
    #[arg(long)]
    freeze: bool,
    #[arg(long)]
    out: String,
    #[arg(long)]
    trace: String,
}

#[derive(Args, Debug, serde::Serialize)]
struct Thm1Args {
    /// JSON config with keys `resolution`, `samples`, `seed`, `target`,
    /// optional `levels` and `resolutions`.
    #[arg(long)]
    config: String,
    /// CSV table; a JSON mirror is written next to it.
    #[arg(long)]
    out: String,
}

#[derive(Copy, Clone, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
enum Schedule {
    Linear,
    Exponential,
}

#[derive(Args, Debug, serde::Serialize)]
struct SpectrumArgs {
    #[arg(long)]
    resolution: u32,
    #[arg(long)]
    t: f64,
    #[arg(long, value_enum, default_value = "linear")]
    schedule: Schedule,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Initial signal; zero when absent.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: String,
}

#[derive(Args, Debug, serde::Serialize)]
struct ConsistencyArgs {
    #[arg(long)]
    fine: u32,
    #[arg(long)]
    coarse: u32,
    #[arg(long)]
    t: f64,
    #[arg(long, value_enum, default_value = "linear")]
    schedule: Schedule,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Initial fine signal; `sin(2πx)` sampled at --fine when absent.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: String,
}

fn run() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            return Err(CliError::usage(first.to_string()));
        }
    };
    output::configure_threads()?;
    match cli.command {
        Command::Dwt(a) => commands::dwt(&a),
        Command::Pde(a) => commands::pde(&a),
        Command::Tri(t) => commands::tri(&t),
        Command::UnetEval(a) => commands::unet_eval(&a),
        Command::TrainSynth(a) => commands::train_synth(&a),
        Command::TrainStaged(a) => commands::train_staged(&a),
        Command::Thm1(a) => commands::thm1(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Consistency(a) => commands::consistency(&a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code())
        }
    }
}
