//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 negative result
//! (infeasible, failed verification, refused construction).

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::feasibility::{Mode, Optimizer, SearchConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dense-coding", version, about = "Deterministic dense-coding message sets", args_override_self = true)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON file of flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Record the current time in written message-set files.
    #[arg(long, global = true)]
    pub timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a message set at one spectrum.
    Search(SearchArgs),
    /// Bisect a feasibility boundary along a path.
    Boundary(BoundaryArgs),
    /// Maximum message counts over the d = 3 simplex grid.
    Sweep(SweepArgs),
    /// Maximum unitary and general counts at edge-E points.
    Window(WindowArgs),
    /// Verify a message-set file.
    Verify(VerifyArgs),
    /// Simulate the protocol on a message-set file.
    Simulate(SimulateArgs),
    /// Build a closed-form set or certificate.
    Construct(ConstructArgs),
    /// Check a unitary set for the block-diagonal / zero-diagonal pairing.
    Pairing(PairingArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Unitary,
    General,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unitary => Mode::Unitary,
            ModeArg::General => Mode::General,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    #[value(alias = "levenberg-marquardt")]
    Lm,
    #[value(alias = "steepest-descent")]
    Sd,
}

/// Options shared by every command that runs searches.
#[derive(Clone, Debug, Args)]
pub struct EngineArgs {
    #[arg(long, default_value_t = SearchConfig::default().restarts)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Success threshold on the orthogonality cost.
    #[arg(long, default_value_t = SearchConfig::default().success_tol)]
    pub tol: f64,
    #[arg(long, default_value_t = SearchConfig::default().max_iterations)]
    pub max_iterations: usize,
    /// Largest Kraus rank tried in general mode.
    #[arg(long, default_value_t = SearchConfig::default().max_kappa)]
    pub max_kappa: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Lm)]
    pub optimizer: OptimizerArg,
}

impl EngineArgs {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            restarts: self.restarts,
            seed: self.seed,
            success_tol: self.tol,
            max_iterations: self.max_iterations,
            max_kappa: self.max_kappa,
            optimizer: match self.optimizer {
                OptimizerArg::Lm => Optimizer::LevenbergMarquardt,
                OptimizerArg::Sd => Optimizer::SteepestDescent,
            },
            ..SearchConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Local dimension; defaults to the number of Schmidt coefficients.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Schmidt coefficients, non-increasing, summing to 1 within 1e-9.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub schmidt: Vec<f64>,
    /// Number of messages; defaults to the profile length.
    #[arg(long)]
    pub messages: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Unitary)]
    pub mode: ModeArg,
    /// Kraus ranks of the messages; searches only this profile.
    #[arg(long, value_delimiter = ',')]
    pub profile: Option<Vec<usize>>,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Refine a unitary witness in double-double precision before writing.
    #[arg(long)]
    pub refine: bool,
    /// Witness file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV log of every restart.
    #[arg(long)]
    pub restart_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    /// Lower edge-E λ₀ of the path (edge-E paths are parameterized by λ₀).
    #[arg(long, requires = "to", conflicts_with_all = ["start", "end"])]
    pub from: Option<f64>,
    #[arg(long, requires = "from")]
    pub to: Option<f64>,
    /// Start spectrum of a general path (parameter runs from 0 to 1).
    #[arg(long, value_delimiter = ',', requires = "end")]
    pub start: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', requires = "start")]
    pub end: Option<Vec<f64>>,
    #[arg(long)]
    pub messages: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Unitary)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = crate::phasemap::DEFAULT_RESOLUTION)]
    pub resolution: f64,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    Unitary,
    General,
    Both,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.02)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = SweepMode::Both)]
    pub mode: SweepMode,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Edge-E λ₀ values.
    #[arg(long, value_delimiter = ',', default_values_t = [0.399, 0.401, 0.41])]
    pub lambda0: Vec<f64>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance used to build the decoder.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// CSV log of every trial.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    U,
    Blockset,
    NinthTenth,
    FivePlusFive,
    QubitNogo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DressingArg {
    Identity,
    Random,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Edge-E ratio λ₂/λ₀.
    #[arg(long)]
    pub x: Option<f64>,
    /// β₂ phases of the diagonal and zero-diagonal families.
    #[arg(long, value_delimiter = ',', num_args = 1..=2, allow_negative_numbers = true)]
    pub phases: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = DressingArg::Identity)]
    pub dressings: DressingArg,
    #[arg(long, default_value_t = 0)]
    pub dressing_seed: u64,
    /// |δ|² of the ninth unitary; defaults to half of (1-3x)/x².
    #[arg(long)]
    pub delta_sq: Option<f64>,
    /// arg γ of the ninth unitary.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gamma_phase: f64,
    /// λ₀ for the two-qubit obstruction.
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Message-set file (families that produce a set).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report or certificate.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairingArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Refine the set in double-double precision first.
    #[arg(long)]
    pub refine: bool,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Negative(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoTransition(_)
            | Error::CertificateInfeasible { .. }
            | Error::Verification(_)
            | Error::NotPaired(_)
            | Error::NoObstruction => Failure::Negative(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

pub type Outcome = std::result::Result<i32, Failure>;

/// Buffered output of a command, flushed once it finishes.
pub struct Io {
    pub out: Vec<u8>,
    pub err: Vec<u8>,
    pub timestamp: bool,
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match config::merge(args) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            let _ = writeln!(err, "error: --jobs must be positive");
            return EXIT_USAGE;
        }
        builder = builder.num_threads(j);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut io = Io { out: Vec::new(), err: Vec::new(), timestamp: cli.timestamp };
    let result = pool.install(|| commands::dispatch(&cli.command, &mut io));
    let _ = out.write_all(&io.out);
    let _ = err.write_all(&io.err);
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Negative(msg)) => {
            let _ = writeln!(err, "{msg}");
            EXIT_NEGATIVE
        }
    }
}
