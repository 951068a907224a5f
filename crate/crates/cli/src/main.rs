//! Command-line laboratory for the three-species exchange dynamics on a
//! ring: exact spectral gaps and scaling sweeps, free-energy minimizers,
//! hydrodynamic runs, kinetic Monte Carlo sampling, the law-of-large-
//! numbers probe, and the interchange-process suite.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "abc", version, about = "Numerical laboratory for the ABC ring dynamics")]
pub struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base RNG seed for stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweep points (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Memory budget in GiB for enumerated objects (default 2).
    #[arg(long, global = true)]
    budget_gib: Option<f64>,

    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact spectral gaps for a sweep of system sizes and temperatures.
    Gap(commands::gap::GapArgs),
    /// Log-log gap scaling in the system size at fixed temperature.
    Scaling(commands::scaling::ScalingArgs),
    /// Free-energy minimizer profiles from the periodic-orbit solver.
    Minimizer(commands::minimizer::MinimizerArgs),
    /// Deterministic hydrodynamic evolution on the periodic grid.
    Hydro(commands::hydro::HydroArgs),
    /// Kinetic Monte Carlo estimates of Gibbs expectations.
    Sample(commands::sample::SampleArgs),
    /// Order-parameter concentration probe at large N.
    Lln(commands::lln::LlnArgs),
    /// Interchange-process suite on the symmetric group.
    Interchange(commands::interchange::InterchangeArgs),
    /// Fast end-to-end identity checks.
    Selftest,
}

/// Shared run context assembled from global flags and the config file.
pub struct RunContext {
    pub seed: u64,
    pub out: output::OutputDir,
    pub budget: abc_ring::ensemble::MemoryBudget,
    pub config: config::FileConfig,
}

fn build_context(cli: &Cli) -> anyhow::Result<RunContext> {
    let file = match &cli.config {
        Some(path) => config::FileConfig::load(path)?,
        None => config::FileConfig::default(),
    };
    let seed = cli.seed.or(file.global.seed).unwrap_or(0);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| file.global.out.clone())
        .unwrap_or_else(|| PathBuf::from("abc-out"));
    let budget_gib = cli.budget_gib.or(file.global.budget_gib).unwrap_or(2.0);
    let workers = cli.workers.or(file.global.workers);
    if let Some(w) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .ok();
    }
    Ok(RunContext {
        seed,
        out: output::OutputDir::new(out_dir, cli.force)?,
        budget: abc_ring::ensemble::MemoryBudget::gib(budget_gib),
        config: file,
    })
}

/// Exit code classification: bad input is a usage error (1), failures of
/// the numerics are reported as 2.
fn classify(err: &anyhow::Error) -> u8 {
    use abc_ring::Error as E;
    if let Some(core) = err.downcast_ref::<E>() {
        match core {
            E::BadSiteCount(_)
            | E::NotEqualDensity { .. }
            | E::BadSpeciesSymbol(_)
            | E::EmptyConfiguration
            | E::InvalidParameter(_)
            | E::BurnInTooLong { .. }
            | E::TooFewBatches { .. } => 1,
            _ => 2,
        }
    } else if err.downcast_ref::<clap::Error>().is_some() {
        1
    } else if err.to_string().contains("--force") || err.to_string().contains("config") {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path too
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let ctx = match build_context(&cli) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Gap(args) => commands::gap::run(&ctx, args),
        Command::Scaling(args) => commands::scaling::run(&ctx, args),
        Command::Minimizer(args) => commands::minimizer::run(&ctx, args),
        Command::Hydro(args) => commands::hydro::run(&ctx, args),
        Command::Sample(args) => commands::sample::run(&ctx, args),
        Command::Lln(args) => commands::lln::run(&ctx, args),
        Command::Interchange(args) => commands::interchange::run(&ctx, args),
        Command::Selftest => commands::selftest::run(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}
