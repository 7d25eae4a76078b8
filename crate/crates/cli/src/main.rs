use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sinrsim::{commands, parse_config, CliError, Config, Overrides};
use sinrsim_core::Algorithm;

/// Slotted SINR link-scheduling simulator.
#[derive(Debug, Parser)]
#[command(name = "sinrsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the topology and arrival pool a config describes.
    Generate(Common),
    /// Simulate a single load point.
    Run(Common),
    /// Simulate every point of the ρ grid.
    Sweep(Common),
    /// Check the interference-model properties on the configured topology.
    Verify(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config or a previous run's manifest.json.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed; overrides SINRSIM_SEED and the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Scheduling algorithm.
    #[arg(long, value_name = "NAME", value_parser = parse_algorithm)]
    algo: Option<Algorithm>,
    /// Single arrival rate in [0, 1].
    #[arg(long, value_name = "F")]
    rho: Option<f64>,
    /// Worker threads for sweeps.
    #[arg(long, value_name = "N", default_value_t = 1)]
    jobs: usize,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse::<Algorithm>().map_err(|e| e.to_string())
}

impl Common {
    fn resolve(&self) -> Result<Config, CliError> {
        let raw = match &self.config {
            Some(path) => parse_config(path)?,
            None => Config::default(),
        };
        raw.resolve(&Overrides {
            seed: self.seed,
            env_seed: std::env::var("SINRSIM_SEED").ok(),
            algorithm: self.algo,
            rho: self.rho,
        })
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config("--out DIR is required for this command".into()))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(c) => {
            let cfg = c.resolve()?;
            let out = c.out_dir()?;
            let scenario = commands::generate(&cfg, out)?;
            println!(
                "wrote {} links and {} arrival sets to {}",
                scenario.topology().len(),
                scenario.pool().len(),
                out.display()
            );
        }
        Command::Run(c) => {
            let cfg = c.resolve()?;
            print_sweeps(&commands::run(&cfg, c.out_dir()?, c.jobs.max(1))?);
        }
        Command::Sweep(c) => {
            let cfg = c.resolve()?;
            print_sweeps(&commands::sweep(&cfg, c.out_dir()?, c.jobs.max(1))?);
        }
        Command::Verify(c) => {
            let cfg = c.resolve()?;
            let report = commands::verify(&cfg, c.out.as_deref())?;
            print!("{report}");
            if !report.all_passed() {
                let failed: Vec<&str> = report.failures().map(|f| f.property.as_str()).collect();
                return Err(CliError::Verification(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn print_sweeps(results: &[sinrsim_core::SweepResult]) {
    for r in results {
        match r.threshold {
            Some(t) => println!("{}: unstable from rho = {t}", r.algorithm),
            None => println!("{}: stable on the whole grid", r.algorithm),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sinrsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
