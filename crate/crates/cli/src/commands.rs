//! The `generate`, `run`, `sweep` and `verify` subcommands.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use sinrsim_core::sim::{derive_seed, seed_tag, sweep_rho, write_runs_csv, write_series_csv, write_summary_csv, build_power};
use sinrsim_core::{generate_random_topology, Scenario, SinrModel, SweepResult, Topology};

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::plot::render_svg;
use crate::verify::{verify_scenario, Report};

pub const TOPOLOGY_FILE: &str = "topology.json";
pub const POOL_FILE: &str = "pool.json";
pub const PLOT_FILE: &str = "plot.svg";
pub const REPORT_FILE: &str = "verify.txt";

/// Loads or generates the topology a resolved config describes.
pub fn load_topology(cfg: &Config) -> Result<Topology<f64>, CliError> {
    match &cfg.topology_file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("topology_file: {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("topology_file: {}: {e}", path.display())))
        }
        None => Ok(generate_random_topology(&cfg.topology_params(), cfg.topology_seed())?),
    }
}

/// Topology, power assignment and arrival pool for a resolved config.
pub fn build_scenario(cfg: &Config) -> Result<Scenario<f64>, CliError> {
    let topology = load_topology(cfg)?;
    let power = build_power(&topology, cfg.power_kind(), cfg.power_level(), cfg.powers.as_deref())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let model = SinrModel::new(topology, power)?;
    Ok(Scenario::with_random_pool(model, cfg.pool_size(), cfg.pool_seed())?)
}

fn write_json<S: serde::Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Simulation(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn prepare_out(command: &str, cfg: &Config, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    RunManifest::new(command, cfg, out).write(out)?;
    Ok(())
}

fn write_scenario(scenario: &Scenario<f64>, out: &Path) -> Result<(), CliError> {
    write_json(&out.join(TOPOLOGY_FILE), scenario.topology())?;
    write_json(&out.join(POOL_FILE), scenario.pool())
}

/// Writes the manifest, topology and arrival pool.
pub fn generate(cfg: &Config, out: &Path) -> Result<Scenario<f64>, CliError> {
    prepare_out("generate", cfg, out)?;
    let scenario = build_scenario(cfg)?;
    write_scenario(&scenario, out)?;
    Ok(scenario)
}

/// `run` is a sweep restricted to one load point.
pub fn run(cfg: &Config, out: &Path, jobs: usize) -> Result<Vec<SweepResult>, CliError> {
    let grid = cfg.grid();
    if grid.len() != 1 {
        return Err(CliError::Config(format!(
            "rho: `run` needs a single load point (use --rho or `rho`), got a grid of {}; use `sweep` for grids",
            grid.len()
        )));
    }
    simulate("run", cfg, out, jobs)
}

pub fn sweep(cfg: &Config, out: &Path, jobs: usize) -> Result<Vec<SweepResult>, CliError> {
    simulate("sweep", cfg, out, jobs)
}

fn simulate(command: &str, cfg: &Config, out: &Path, jobs: usize) -> Result<Vec<SweepResult>, CliError> {
    prepare_out(command, cfg, out)?;
    let scenario = build_scenario(cfg)?;
    write_scenario(&scenario, out)?;
    let results = cfg
        .algorithms()
        .into_iter()
        .map(|algo| sweep_rho(&scenario, &cfg.sweep_spec(algo), jobs))
        .collect::<Result<Vec<_>, _>>()?;
    for result in &results {
        write_sweep(result, &out.join(result.algorithm.as_str()))?;
    }
    fs::write(out.join(PLOT_FILE), render_svg(&results))?;
    Ok(results)
}

/// Per-algorithm outputs: `runs.csv`, `summary.csv` and one series per run.
pub fn write_sweep(result: &SweepResult, dir: &Path) -> Result<(), CliError> {
    let series_dir = dir.join("series");
    fs::create_dir_all(&series_dir)?;
    write_runs_csv(result, create(&dir.join("runs.csv"))?)?;
    write_summary_csv(result, create(&dir.join("summary.csv"))?)?;
    for point in &result.points {
        for outcome in &point.runs {
            let name = format!("rho_{}_run_{}.csv", point.rho, outcome.run);
            write_series_csv(&outcome.series, create(&series_dir.join(name))?)?;
        }
    }
    Ok(())
}

/// Runs the property report; writes it to `out` when given.
pub fn verify(cfg: &Config, out: Option<&Path>) -> Result<Report, CliError> {
    if let Some(dir) = out {
        prepare_out("verify", cfg, dir)?;
    }
    let scenario = build_scenario(cfg)?;
    let seed = derive_seed(cfg.master_seed(), &[seed_tag::VERIFY]);
    let report = verify_scenario(&scenario, cfg.verify_sets.as_deref().unwrap_or(&[]), seed);
    if let Some(dir) = out {
        write_scenario(&scenario, dir)?;
        fs::write(dir.join(REPORT_FILE), report.to_string())?;
    }
    Ok(report)
}
