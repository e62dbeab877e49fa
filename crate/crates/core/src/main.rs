use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eb_core::run::{plot, run, Mode, Overrides, RunConfig};
use eb_core::transport::TransportBackend;

/// Euler-Boltzmann radiation hydrodynamics with vacuum.
///
/// Exit status: 0 when the run reaches its horizon (or the mode completes),
/// 2 when blow-up is detected, 1 on errors and failed validation.
///
/// Thread count follows RAYON_NUM_THREADS (default: all cores).
#[derive(Parser, Debug)]
#[command(name = "ebsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the split transport/hydro loop with singularity monitors.
    Simulate(RunArgs),
    /// Compute the blow-up certificate only.
    Certify(RunArgs),
    /// Run the Picard iteration experiment.
    Picard(RunArgs),
    /// Check scenario data and the coefficient structural assumptions.
    Validate(RunArgs),
    /// Re-render SVG plots from an output directory.
    Plot {
        /// Output directory of an earlier run.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Built-in scenario name (see README) or path to a scenario TOML file.
    #[arg(long, default_value = "uniform-rest")]
    scenario: String,
    /// Scenario TOML file; takes precedence over --scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Cells per axis [default: from scenario].
    #[arg(long)]
    cells: Option<usize>,
    /// Angular order: 1 is the 1D rod, n >= 2 a product rule with 2n^2 nodes [default: from scenario].
    #[arg(long)]
    ordinates: Option<usize>,
    /// Frequency groups [default: from scenario].
    #[arg(long)]
    groups: Option<usize>,
    /// Fixed time step; the stability limits still apply [default: from scenario].
    #[arg(long)]
    dt: Option<f64>,
    /// CFL number in (0, 1] [default: from scenario, usually 0.4].
    #[arg(long)]
    cfl: Option<f64>,
    /// Final time [default: from scenario].
    #[arg(long)]
    horizon: Option<f64>,
    /// Transport backend [default: from scenario, usually characteristic].
    #[arg(long, value_parser = ["characteristic", "sweep"])]
    backend: Option<String>,
    /// Seed for random initial radiation [default: from scenario].
    #[arg(long)]
    seed: Option<u64>,
    /// Write every n-th step to the time series [default: from scenario].
    #[arg(long)]
    cadence: Option<usize>,
}

impl RunArgs {
    fn into_config(self, mode: Mode) -> eb_core::Result<RunConfig> {
        let backend = self.backend.map(|b| b.parse::<TransportBackend>()).transpose()?;
        let scenario = match self.config {
            Some(p) => p.to_string_lossy().into_owned(),
            None => self.scenario,
        };
        Ok(RunConfig {
            scenario,
            out: self.out,
            mode,
            overrides: Overrides {
                cells: self.cells,
                ordinates: self.ordinates,
                groups: self.groups,
                dt: self.dt,
                cfl: self.cfl,
                horizon: self.horizon,
                backend,
                seed: self.seed,
                cadence: self.cadence,
            },
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, mode) = match cli.command {
        Command::Simulate(a) => (a, Mode::Simulate),
        Command::Certify(a) => (a, Mode::Certify),
        Command::Picard(a) => (a, Mode::Picard),
        Command::Validate(a) => (a, Mode::Validate),
        Command::Plot { out } => {
            return match plot(&out) {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let outcome = args.into_config(mode).and_then(|c| run(&c));
    match outcome {
        Ok(o) => {
            if let Some(s) = o.status {
                println!("status: {}", s.as_str());
            }
            println!("manifest: {}", o.artifacts.manifest.display());
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
