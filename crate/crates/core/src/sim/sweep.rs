use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_stability, derive_seed, seed_tag, MetricsSeries, RunParams, Scenario, StabilityCriteria, StabilityVerdict};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sched::Algorithm;

/// A ρ-sweep over one shared scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub algorithm: Algorithm,
    pub grid: Vec<f64>,
    pub runs: usize,
    pub horizon: u64,
    pub checkpoint: u64,
    pub master_seed: u64,
    pub criteria: StabilityCriteria,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::ConfigInvalid("rho grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ConfigInvalid("rho grid must be strictly increasing".into()));
        }
        if self.runs == 0 {
            return Err(Error::ConfigInvalid("runs must be at least 1".into()));
        }
        Ok(())
    }

    /// Seeds for run `run` at grid index `point`. They do not depend on the
    /// algorithm, so algorithms compared under one master seed see the same
    /// arrivals.
    pub fn run_params<T: Scalar>(&self, point: usize, run: usize) -> RunParams<T> {
        let tags = |tag| derive_seed(self.master_seed, &[tag, point as u64, run as u64]);
        RunParams {
            algorithm: self.algorithm,
            rho: T::lit(self.grid[point]),
            horizon: self.horizon,
            checkpoint: self.checkpoint,
            traffic_seed: tags(seed_tag::TRAFFIC),
            decision_seed: tags(seed_tag::DECISION),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub run: usize,
    pub series: MetricsSeries,
    pub verdict: StabilityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rho: f64,
    pub runs: Vec<RunOutcome>,
    pub mean_final_max_queue: f64,
    pub unstable_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub algorithm: Algorithm,
    pub criteria: StabilityCriteria,
    pub points: Vec<SweepPoint>,
    /// Smallest grid ρ unstable in a majority of runs; `None` means the
    /// threshold lies above the grid.
    pub threshold: Option<f64>,
}

impl SweepResult {
    fn assemble(algorithm: Algorithm, criteria: StabilityCriteria, grid: &[f64], outcomes: Vec<Vec<RunOutcome>>) -> Self {
        let points: Vec<SweepPoint> = grid
            .iter()
            .zip(outcomes)
            .map(|(&rho, runs)| {
                let k = runs.len() as f64;
                let mean_final_max_queue = runs.iter().map(|r| r.series.final_max_queue() as f64).sum::<f64>() / k;
                let unstable_fraction = runs.iter().filter(|r| !r.verdict.stable).count() as f64 / k;
                SweepPoint {
                    rho,
                    runs,
                    mean_final_max_queue,
                    unstable_fraction,
                }
            })
            .collect();
        let threshold = points.iter().find(|p| p.unstable_fraction > 0.5).map(|p| p.rho);
        Self {
            algorithm,
            criteria,
            points,
            threshold,
        }
    }

    /// Re-runs the classifier on the stored series with other thresholds.
    pub fn reclassify(&self, criteria: StabilityCriteria) -> Result<Self> {
        let grid: Vec<f64> = self.points.iter().map(|p| p.rho).collect();
        let outcomes = self
            .points
            .iter()
            .map(|p| {
                p.runs
                    .iter()
                    .map(|r| {
                        Ok(RunOutcome {
                            run: r.run,
                            series: r.series.clone(),
                            verdict: classify_stability(&r.series, &criteria)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(self.algorithm, criteria, &grid, outcomes))
    }
}

/// Runs `runs × |grid|` independent simulations on up to `jobs` threads.
///
/// Every run's streams come from `(master seed, grid index, run index)`, so
/// the result does not depend on `jobs`.
pub fn sweep_rho<T: Scalar>(scenario: &Scenario<T>, spec: &SweepSpec, jobs: usize) -> Result<SweepResult> {
    spec.validate()?;
    let tasks: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|p| (0..spec.runs).map(move |r| (p, r)))
        .collect();
    let run_one = |&(point, run): &(usize, usize)| -> Result<RunOutcome> {
        let series = scenario.run(&spec.run_params::<T>(point, run))?;
        let verdict = classify_stability(&series, &spec.criteria)?;
        Ok(RunOutcome { run, series, verdict })
    };
    let results: Vec<Result<RunOutcome>> = if jobs <= 1 {
        tasks.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run_one).collect())
    };
    let mut flat = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter();
    let outcomes = (0..spec.grid.len())
        .map(|_| flat.by_ref().take(spec.runs).collect())
        .collect();
    Ok(SweepResult::assemble(spec.algorithm, spec.criteria, &spec.grid, outcomes))
}
