//! Command-line front end: scenario loading, subcommand dispatch and exit
//! codes (0 success, 1 I/O, 2 validation, 3 numerical failure).

mod commands;
mod plot;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use commands::{
    full_run_summary, initial_full, initial_weighted, RunContext, CONTRACTION_ITERATES,
    CONTRACTION_RATIO, ENTROPY_STEP_TOL, L1L2_TOL, MASS_DRIFT_TOL, RF_RATIO_FLOOR,
};
pub use plot::plot_channel;
pub use scenario::{
    load_scenario, parse_scenario, CycleSpec, DampingName, DomainSpec, GridSpec, InitialSpec,
    KernelCheckSpec, KernelConfig, OutputSpec, PicardSpec, PotentialSpec, Scenario, SchemeSpec,
    WeightConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "kinetic-bte",
    version,
    about = "Boltzmann solver with an external potential and diffuse walls"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "KINETIC_BTE_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory; overrides the scenario.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write the state every K steps.
    #[arg(long, global = true)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Nonlinear run with the positivity-preserving scheme.
    Simulate,
    /// Linear run of the damped transport semigroup.
    Semigroup,
    /// Monte-Carlo estimate of the back-time cycle reach probabilities.
    Cycles,
    /// Collision-operator structure, kernel of L and spectral gap.
    KernelCheck,
    /// Nonlinear run checked for entropy monotonicity and control.
    Entropy,
    /// Picard iteration of the mild form, with an optional amplitude sweep.
    Picard,
    /// Summarize a diagnostics CSV into JSON and SVG plots.
    Report {
        /// Diagnostics CSV; defaults to `<out>/diagnostics.csv`.
        input: Option<PathBuf>,
    },
}

fn scenario_for(cli: &Cli) -> Result<scenario::Scenario> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| Error::Validation("--scenario is required for this command".into()))?;
    let mut s = load_scenario(path)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(out) = &cli.out {
        s.output.dir = out.display().to_string();
    }
    if let Some(k) = cli.snapshot_every {
        s.output.snapshot_every = k;
    }
    s.validate()?;
    Ok(s)
}

/// Runs one parsed command line.
pub fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Validation("--workers must be at least 1".into()));
        }
        // a pool already installed by an earlier call in this process stays
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    if let Command::Report { input } = &cli.command {
        let (out, plots) = match &cli.scenario {
            Some(_) => {
                let s = scenario_for(cli)?;
                (PathBuf::from(&s.output.dir), s.output.plots)
            }
            None => (
                cli.out.clone().unwrap_or_else(|| PathBuf::from("out")),
                true,
            ),
        };
        let input = input.clone().unwrap_or_else(|| out.join("diagnostics.csv"));
        return commands::report(&input, &out, plots);
    }
    let s = scenario_for(cli)?;
    run_scenario(&cli.command, s)
}

/// Runs a scenario command with outputs under `s.output.dir`.
pub fn run_scenario(command: &Command, s: Scenario) -> Result<()> {
    s.validate()?;
    let snapshot_every = s.output.snapshot_every;
    let out = PathBuf::from(&s.output.dir);
    let ctx = RunContext::new(s, out)?;
    match command {
        Command::Simulate => commands::simulate(&ctx, snapshot_every),
        Command::Semigroup => commands::semigroup(&ctx, snapshot_every),
        Command::Cycles => commands::cycles(&ctx),
        Command::KernelCheck => commands::kernel_check(&ctx),
        Command::Entropy => commands::entropy(&ctx, snapshot_every),
        Command::Picard => commands::picard(&ctx),
        Command::Report { input } => {
            let out = ctx.out.clone();
            let input = input.clone().unwrap_or_else(|| out.join("diagnostics.csv"));
            commands::report(&input, &out, ctx.scenario.output.plots)
        }
    }
}

pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kinetic-bte: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
