//! `gwalk` — experiments with random walks on dense graphs and graphons.
//!
//! Subcommands mirror the library layers: `degree` and `spectrum` inspect a
//! graphon's degree function and walk spectrum, `solve` integrates the
//! continuum evolution, `walk` simulates individual walkers on a finite
//! graph, `converge` runs discrete-versus-continuum studies, and
//! `lemma-check` exercises the two operator estimates behind the convergence
//! bound. `run` executes any of these from a TOML configuration file whose
//! fields mirror the flags.
//!
//! Every command writes CSV data files plus a JSON run manifest, and is
//! deterministic for a fixed configuration and seed (the manifest's wall
//! time is the one diagnostic exception). Exit codes: 1 for configuration
//! errors, 2 for violated structural hypotheses, 3 for numeric failures.

mod commands;
mod manifest;
mod svg;

use clap::{Args, Parser, Subcommand};
use graphon_walks::Error;

#[derive(Parser, Debug)]
#[command(
    name = "gwalk",
    version,
    about = "Random walks on dense graphs and their graphon limits"
)]
pub(crate) struct Cli {
    #[command(subcommand)]
    pub(crate) command: Command,
}

#[derive(Subcommand, Debug)]
pub(crate) enum Command {
    /// Sample a graphon's degree function k(x) = ∫ W(x,y) dy.
    Degree(DegreeArgs),
    /// Eigenvalues of the normalized walk operator (CSV m,theta,lambda).
    Spectrum(SpectrumArgs),
    /// Solve the continuum evolution ∂w/∂t = Kw − w.
    Solve(SolveArgs),
    /// Simulate walkers on a finite graph (trajectory or histogram).
    Walk(WalkArgs),
    /// Discrete-versus-continuum convergence study.
    Converge(ConvergeArgs),
    /// Randomized verification of the two operator estimates.
    LemmaCheck(LemmaCheckArgs),
    /// Execute a command described by a TOML configuration file.
    Run(RunArgs),
}

#[derive(Args, Debug, Clone)]
pub(crate) struct CommonArgs {
    /// Graphon description: `family:key=value,…` or `@record.toml`.
    #[arg(long)]
    pub(crate) graphon: Option<String>,
    /// Prefix for all output files.
    #[arg(long, default_value = "gwalk")]
    pub(crate) output: String,
    /// RNG seed (falls back to $GRAPHONWALK_SEED, then 0).
    #[arg(long)]
    pub(crate) seed: Option<u64>,
    /// Cap the worker thread count (0 = library default).
    #[arg(long, default_value_t = 0)]
    pub(crate) threads: usize,
    /// Also render an SVG chart where the command supports it.
    #[arg(long, default_value_t = false)]
    pub(crate) svg: bool,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct DegreeArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// Grid resolution.
    #[arg(long, alias = "N", default_value_t = 256)]
    pub(crate) n: usize,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct SpectrumArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// Grid resolution.
    #[arg(long, alias = "N", default_value_t = 256)]
    pub(crate) n: usize,
    /// Spectral route: `auto`, `symmetric` (normalized adjacency) or
    /// `kernel` (nonsymmetric solve of K itself).
    #[arg(long, default_value = "auto")]
    pub(crate) path: String,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct SolveArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// Grid resolution.
    #[arg(long, alias = "N", default_value_t = 256)]
    pub(crate) n: usize,
    /// Initial condition: `one`, `ramp`, `cos`, or `@data.csv`.
    #[arg(long, default_value = "cos")]
    pub(crate) g: String,
    /// Observation times, comma separated, nondecreasing.
    #[arg(long, alias = "t", value_delimiter = ',', default_values_t = vec![0.0, 1.0])]
    pub(crate) times: Vec<f64>,
    /// Solution route: `spectral`, `exponential`, or `both` (cross-check).
    #[arg(long, default_value = "spectral")]
    pub(crate) method: String,
    /// Mode-sum truncation (0 = all modes).
    #[arg(long, default_value_t = 0)]
    pub(crate) modes: usize,
    /// Also write the compact binary record.
    #[arg(long, default_value_t = false)]
    pub(crate) binary: bool,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct WalkArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// Quotient-graph size when building from a graphon.
    #[arg(long, alias = "N", default_value_t = 16)]
    pub(crate) n: usize,
    /// Adjacency CSV to walk on instead of a discretized graphon.
    #[arg(long)]
    pub(crate) graph: Option<String>,
    /// `node-centric`, `edge-centric`, or `discrete`.
    #[arg(long, default_value = "node-centric")]
    pub(crate) mode: String,
    /// Jump rate for the node-centric walk.
    #[arg(long, default_value_t = 1.0)]
    pub(crate) kappa: f64,
    /// Horizon (continuous time, or steps for the discrete walk).
    #[arg(long, alias = "t", default_value_t = 1.0)]
    pub(crate) t_max: f64,
    /// Number of walkers: 1 writes a trajectory, more write a histogram.
    #[arg(long, default_value_t = 1)]
    pub(crate) walkers: usize,
    /// Start node.
    #[arg(long, default_value_t = 0)]
    pub(crate) start: usize,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct ConvergeArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// Initial condition: `one`, `ramp`, `cos`, or `@data.csv`.
    #[arg(long, default_value = "cos")]
    pub(crate) g: String,
    /// `quotient`, `sampled`, or `external`.
    #[arg(long, default_value = "quotient")]
    pub(crate) mode: String,
    /// Graph sizes, comma separated, strictly increasing.
    #[arg(long, value_delimiter = ',', default_values_t = vec![8, 16, 32, 64])]
    pub(crate) ns: Vec<usize>,
    /// Observation times, comma separated.
    #[arg(long, alias = "t", value_delimiter = ',', default_values_t = vec![1.0])]
    pub(crate) times: Vec<f64>,
    /// Continuum reference resolution (0 = 8·max(ns) capped at 2048).
    #[arg(long, default_value_t = 0)]
    pub(crate) n_ref: usize,
    /// Adjacency CSVs for `external` mode, one per size.
    #[arg(long, value_delimiter = ',')]
    pub(crate) graphs: Vec<String>,
    /// Initial-condition CSVs for `external` mode, one per size.
    #[arg(long, value_delimiter = ',')]
    pub(crate) ics: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct LemmaCheckArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// `step-kernel` or `hs-difference`.
    #[arg(long, default_value = "step-kernel")]
    pub(crate) which: String,
    /// Number of randomized cases.
    #[arg(long, default_value_t = 50)]
    pub(crate) cases: usize,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct RunArgs {
    /// TOML file with fields `command`, `graphon`, `params`, `output`, `seed`.
    #[arg(long)]
    pub(crate) config: String,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_)
        | Error::Io(_)
        | Error::MalformedData(_)
        | Error::OutOfRange { .. }
        | Error::NotSymmetric { .. }
        | Error::IncompatibleResolution { .. } => 1,
        Error::DegreeTooSmall { .. } | Error::HypothesisViolation(_) | Error::IsolatedNode(_) => 2,
        Error::ZeroGap | Error::Linalg(_) | Error::Numeric(_) => 3,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Degree(args) => commands::degree(&args),
        Command::Spectrum(args) => commands::spectrum(&args),
        Command::Solve(args) => commands::solve(&args),
        Command::Walk(args) => commands::walk(&args),
        Command::Converge(args) => commands::converge(&args),
        Command::LemmaCheck(args) => commands::lemma_check(&args),
        Command::Run(args) => commands::run_from_config(&args),
    };
    if let Err(e) = outcome {
        eprintln!("gwalk: {e}");
        std::process::exit(exit_code_for(&e));
    }
}
