//! Slotted-time closed loop: arrivals, transmit decisions, SINR success
//! resolution, queue update, checkpointed metrics.

mod export;
mod sweep;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{generate_random_topology, Topology, TopologyParams};
use crate::scalar::Scalar;
use crate::sched::{
    build_length_classes, lqf_schedule, partitioned_reflect_decide, reflect_decide, resolve_successes,
    Algorithm, DecisionStreams, LengthClasses, QueueState,
};
use crate::sinr::{PowerAssignment, PowerKind, SinrModel};
use crate::traffic::{build_pool, FeasibleSetPool, TrafficModel};

pub use export::{write_runs_csv, write_series_csv, write_summary_csv, RUNS_HEADER, SERIES_HEADER, SUMMARY_HEADER};
pub use sweep::{sweep_rho, RunOutcome, SweepPoint, SweepResult, SweepSpec};

/// Mixes a master seed with a tag path into an independent 64-bit seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    tags.iter().fold(splitmix(master), |acc, &t| splitmix(acc ^ splitmix(t)))
}

/// Tags for [`derive_seed`].
pub mod seed_tag {
    pub const TOPOLOGY: u64 = 1;
    pub const POOL: u64 = 2;
    pub const TRAFFIC: u64 = 3;
    pub const DECISION: u64 = 4;
    pub const VERIFY: u64 = 5;
}

/// Topology, power, interference matrix and traffic pool shared by every run
/// of an experiment.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    model: SinrModel<T>,
    pool: FeasibleSetPool<T>,
    classes: LengthClasses,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(model: SinrModel<T>, pool: FeasibleSetPool<T>) -> Result<Self> {
        let classes = build_length_classes(model.topology())?;
        if let Err(i) = pool.verify(&model) {
            return Err(Error::ConfigInvalid(format!(
                "pool set {i} is not a maximal feasible set of this topology"
            )));
        }
        Ok(Self { model, pool, classes })
    }

    /// Builds the pool from `pool_size` random greedy orders.
    pub fn with_random_pool(model: SinrModel<T>, pool_size: usize, pool_seed: u64) -> Result<Self> {
        let pool = build_pool(&model, pool_size, pool_seed)?;
        let classes = build_length_classes(model.topology())?;
        Ok(Self { model, pool, classes })
    }

    pub fn model(&self) -> &SinrModel<T> {
        &self.model
    }

    pub fn topology(&self) -> &Topology<T> {
        self.model.topology()
    }

    pub fn pool(&self) -> &FeasibleSetPool<T> {
        &self.pool
    }

    pub fn classes(&self) -> &LengthClasses {
        &self.classes
    }

    pub fn traffic(&self, rho: T) -> Result<TrafficModel<T>> {
        TrafficModel::new(self.pool.clone(), self.model.len(), rho)
    }

    pub fn run(&self, params: &RunParams<T>) -> Result<MetricsSeries> {
        params.validate()?;
        let mut sim = Simulation::new(self, params)?;
        let mut series = MetricsSeries::default();
        for _ in 0..params.horizon {
            sim.step();
            if sim.queues.slot() % params.checkpoint == 0 {
                series.checkpoints.push(sim.checkpoint());
            }
        }
        series.final_queues = sim.queues.queues().to_vec();
        Ok(series)
    }
}

/// Per-run knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RunParams<T> {
    pub algorithm: Algorithm,
    pub rho: T,
    pub horizon: u64,
    pub checkpoint: u64,
    pub traffic_seed: u64,
    pub decision_seed: u64,
}

impl<T: Scalar> RunParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.checkpoint == 0 || self.horizon < self.checkpoint {
            return Err(Error::ConfigInvalid(format!(
                "need horizon >= checkpoint >= 1, got horizon={} checkpoint={}",
                self.horizon, self.checkpoint
            )));
        }
        if !(self.rho >= T::zero() && self.rho <= T::one()) {
            return Err(Error::ConfigInvalid(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        Ok(())
    }
}

/// Where a run's topology comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", rename_all = "lowercase")]
pub enum TopologySource<T> {
    Generate { params: TopologyParams<T>, seed: u64 },
    File(PathBuf),
}

impl<T: Scalar> TopologySource<T> {
    pub fn load(&self) -> Result<Topology<T>> {
        match self {
            Self::Generate { params, seed } => generate_random_topology(params, *seed),
            Self::File(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

/// Everything needed to reproduce one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SimConfig<T> {
    pub topology: TopologySource<T>,
    pub power: PowerKind,
    pub power_level: T,
    /// Required when `power` is `custom`.
    pub powers: Option<Vec<T>>,
    pub pool_size: usize,
    pub pool_seed: u64,
    pub run: RunParams<T>,
}

impl<T: Scalar> SimConfig<T> {
    pub fn build_scenario(&self) -> Result<Scenario<T>> {
        if self.pool_size == 0 {
            return Err(Error::ConfigInvalid("pool_size must be at least 1".into()));
        }
        let topology = self.topology.load()?;
        let power = build_power(&topology, self.power, self.power_level, self.powers.as_deref())?;
        let model = SinrModel::new(topology, power)?;
        Scenario::with_random_pool(model, self.pool_size, self.pool_seed)
    }
}

/// Materializes a power assignment from its configured kind.
pub fn build_power<T: Scalar>(
    topology: &Topology<T>,
    kind: PowerKind,
    level: T,
    powers: Option<&[T]>,
) -> Result<PowerAssignment<T>> {
    match (kind, powers) {
        (PowerKind::Custom, Some(p)) => PowerAssignment::custom(topology, p.to_vec()),
        (PowerKind::Custom, None) => Err(Error::ConfigInvalid("custom power requires `powers`".into())),
        (_, Some(_)) => Err(Error::ConfigInvalid(format!("`powers` is only valid with custom power, not {kind}"))),
        (kind, None) => PowerAssignment::from_kind(kind, topology, level),
    }
}

/// Runs one configured simulation end to end.
pub fn run_simulation<T: Scalar>(cfg: &SimConfig<T>) -> Result<MetricsSeries> {
    cfg.run.validate()?;
    cfg.build_scenario()?.run(&cfg.run)
}

/// Metrics recorded at one checkpoint slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub slot: u64,
    /// Largest queue at this slot.
    pub max_queue: u64,
    pub mean_queue: f64,
    /// Cumulative departures over all links.
    pub departures: u64,
    /// Largest queue seen at any slot so far.
    pub running_max_queue: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub checkpoints: Vec<Checkpoint>,
    pub final_queues: Vec<u64>,
}

impl MetricsSeries {
    pub fn final_max_queue(&self) -> u64 {
        self.checkpoints.last().map_or(0, |c| c.max_queue)
    }
}

/// Thresholds for calling a run unstable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCriteria {
    /// Least-squares slope of max queue per slot.
    pub slope: f64,
    /// Final max queue.
    pub queue: f64,
}

impl Default for StabilityCriteria {
    fn default() -> Self {
        Self {
            slope: 1e-3,
            queue: 50.0,
        }
    }
}

impl StabilityCriteria {
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            slope: self.slope * factor,
            queue: self.queue * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub slope: f64,
}

/// Unstable iff the trailing-half slope of max queue exceeds
/// `criteria.slope` and the final max queue exceeds `criteria.queue`.
pub fn classify_stability(series: &MetricsSeries, criteria: &StabilityCriteria) -> Result<StabilityVerdict> {
    let cps = &series.checkpoints;
    if cps.len() < 4 {
        return Err(Error::TooFewCheckpoints(cps.len()));
    }
    let tail = &cps[cps.len() / 2..];
    let slope = least_squares_slope(tail.iter().map(|c| (c.slot as f64, c.max_queue as f64)));
    let last = series.final_max_queue() as f64;
    Ok(StabilityVerdict {
        stable: !(slope > criteria.slope && last > criteria.queue),
        slope,
    })
}

fn least_squares_slope(points: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.fold((0.0, 0.0), |(num, den), (x, y)| {
        (num + (x - mx) * (y - my), den + (x - mx) * (x - mx))
    });
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Mean realized slot affectance per link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectanceProbe {
    /// Average of `a_S(u)` over every slot of the window.
    pub mean: Vec<f64>,
    /// Average over the slots in which `u` was backlogged.
    pub mean_when_backlogged: Vec<Option<f64>>,
    pub backlogged_slots: Vec<u64>,
}

/// Runs `window` slots and averages `total_affectance(transmitters, u)`.
pub fn mean_affectance_probe<T: Scalar>(
    scenario: &Scenario<T>,
    params: &RunParams<T>,
    window: u64,
) -> Result<AffectanceProbe> {
    if window == 0 {
        return Err(Error::ConfigInvalid("probe window must be at least 1 slot".into()));
    }
    let n = scenario.model.len();
    let mut sim = Simulation::new(scenario, params)?;
    let mut sum = vec![0.0; n];
    let mut sum_backlogged = vec![0.0; n];
    let mut backlogged_slots = vec![0u64; n];
    for _ in 0..window {
        sim.arrive_and_decide();
        for u in 0..n {
            let a = scenario.model.total_affectance(&sim.transmitters, u).as_f64();
            sum[u] += a;
            if sim.queues.is_backlogged(u) {
                sum_backlogged[u] += a;
                backlogged_slots[u] += 1;
            }
        }
        sim.resolve();
    }
    let w = window as f64;
    Ok(AffectanceProbe {
        mean: sum.iter().map(|s| s / w).collect(),
        mean_when_backlogged: sum_backlogged
            .iter()
            .zip(&backlogged_slots)
            .map(|(&s, &k)| (k > 0).then(|| s / k as f64))
            .collect(),
        backlogged_slots,
    })
}

/// Mutable state of one run.
struct Simulation<'a, T> {
    scenario: &'a Scenario<T>,
    algorithm: Algorithm,
    traffic: TrafficModel<T>,
    traffic_rng: ChaCha8Rng,
    streams: DecisionStreams,
    queues: QueueState,
    rates: Vec<T>,
    arrivals: Vec<usize>,
    transmitters: Vec<usize>,
    successes: Vec<usize>,
    total_departures: u64,
    running_max: u64,
}

impl<'a, T: Scalar> Simulation<'a, T> {
    fn new(scenario: &'a Scenario<T>, params: &RunParams<T>) -> Result<Self> {
        let n = scenario.model.len();
        let traffic = scenario.traffic(params.rho)?;
        let rates = traffic.rates().to_vec();
        Ok(Self {
            scenario,
            algorithm: params.algorithm,
            traffic,
            traffic_rng: ChaCha8Rng::seed_from_u64(params.traffic_seed),
            streams: DecisionStreams::new(params.decision_seed, n),
            queues: QueueState::new(n),
            rates,
            arrivals: Vec::new(),
            transmitters: Vec::new(),
            successes: Vec::new(),
            total_departures: 0,
            running_max: 0,
        })
    }

    /// Arrivals land at the start of the slot, then links decide.
    fn arrive_and_decide(&mut self) {
        self.traffic.sample_arrivals(&mut self.traffic_rng, &mut self.arrivals);
        self.queues.begin_slot(&self.arrivals);
        for &u in &self.arrivals {
            self.running_max = self.running_max.max(self.queues.queue(u));
        }
        let model = &self.scenario.model;
        match self.algorithm {
            Algorithm::Reflect => reflect_decide(&self.queues, &self.rates, &mut self.streams, &mut self.transmitters),
            Algorithm::ReflectEstimated => {
                self.queues.estimated_rates(&mut self.rates);
                reflect_decide(&self.queues, &self.rates, &mut self.streams, &mut self.transmitters);
            }
            Algorithm::ReflectPartitioned => partitioned_reflect_decide(
                &self.queues,
                &self.rates,
                &self.scenario.classes,
                self.queues.slot(),
                &mut self.streams,
                &mut self.transmitters,
            ),
            Algorithm::Lqf => lqf_schedule(&self.queues, model, &mut self.transmitters),
        }
    }

    /// Successful transmitters drop their head packet.
    fn resolve(&mut self) {
        resolve_successes(&self.transmitters, &self.scenario.model, &mut self.successes);
        self.queues.depart(&self.successes);
        self.total_departures += self.successes.len() as u64;
    }

    fn step(&mut self) {
        self.arrive_and_decide();
        self.resolve();
    }

    fn checkpoint(&self) -> Checkpoint {
        let queues = self.queues.queues();
        let total: u64 = queues.iter().sum();
        Checkpoint {
            slot: self.queues.slot(),
            max_queue: self.queues.max_queue(),
            mean_queue: if queues.is_empty() { 0.0 } else { total as f64 / queues.len() as f64 },
            departures: self.total_departures,
            running_max_queue: self.running_max,
        }
    }
}
