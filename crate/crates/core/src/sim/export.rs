//! CSV views of run and sweep metrics.

use std::io::Write;

use super::{MetricsSeries, SweepResult};
use crate::error::Result;

pub const SERIES_HEADER: [&str; 5] = ["slot", "max_queue", "mean_queue", "departures", "running_max_queue"];
pub const RUNS_HEADER: [&str; 5] = ["rho", "run", "final_max_queue", "stable", "slope"];
pub const SUMMARY_HEADER: [&str; 3] = ["rho", "mean_final_max_queue", "unstable_fraction"];

pub fn write_series_csv<W: Write>(series: &MetricsSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for c in &series.checkpoints {
        w.write_record([
            c.slot.to_string(),
            c.max_queue.to_string(),
            c.mean_queue.to_string(),
            c.departures.to_string(),
            c.running_max_queue.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (ρ, run).
pub fn write_runs_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUNS_HEADER)?;
    for p in &sweep.points {
        for r in &p.runs {
            w.write_record([
                p.rho.to_string(),
                r.run.to_string(),
                r.series.final_max_queue().to_string(),
                r.verdict.stable.to_string(),
                r.verdict.slope.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per ρ.
pub fn write_summary_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for p in &sweep.points {
        w.write_record([
            p.rho.to_string(),
            p.mean_final_max_queue.to_string(),
            p.unstable_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
