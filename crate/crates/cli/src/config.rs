//! Experiment config: JSON in, normalized config out.
//!
//! Every field is optional on input. [`Config::resolve`] fills defaults
//! (n = 200 links in a 100×100 square, ℓ ∈ [1, 20], α = 2.5, β = 1,
//! 100,000 slots checkpointed every 10,000, 10 runs, ρ ∈ 0.01..=0.60 step
//! 0.01) and normalizes the ρ grid and algorithm list into explicit lists,
//! so a resolved config serializes to the same bytes every time.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, IntoDeserializer};
use serde::{Deserialize, Deserializer, Serialize};
use sinrsim_core::sim::{derive_seed, seed_tag, RunParams, StabilityCriteria, SweepSpec};
use sinrsim_core::{Algorithm, PowerKind, TopologyParams};

use crate::error::CliError;

pub const DEFAULT_HORIZON: u64 = 100_000;
pub const DEFAULT_CHECKPOINT: u64 = 10_000;
pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_POOL_SIZE: usize = 64;

/// One algorithm name or a list of them; always serialized as a list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Algorithms(pub Vec<Algorithm>);

impl<'de> Deserialize<'de> for Algorithms {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;

        impl<'de> de::Visitor<'de> for Visitor {
            type Value = Algorithms;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an algorithm name or a list of names")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Algorithms, E> {
                Algorithm::deserialize(v.into_deserializer()).map(|a| Algorithms(vec![a]))
            }

            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> Result<Algorithms, A::Error> {
                let mut out = Vec::new();
                while let Some(a) = seq.next_element()? {
                    out.push(a);
                }
                Ok(Algorithms(out))
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl RhoGrid {
    fn expand(&self) -> Result<Vec<f64>, CliError> {
        match *self {
            Self::List(ref xs) => Ok(xs.clone()),
            Self::Range { start, stop, step } => {
                if step.is_nan() || step <= 0.0 || stop < start {
                    return Err(CliError::Config(format!(
                        "rho_grid: need step > 0 and stop >= start, got start={start} stop={stop} step={step}"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as u64;
                // Rounded to 12 decimals so 0.07 prints as 0.07.
                Ok((0..=count)
                    .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lmin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Load the topology from JSON instead of generating it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithms>,
    /// Single load point; takes precedence over `rho_grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_grid: Option<RhoGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue_threshold: Option<f64>,
    /// Extra sets for `verify` to run through the set-affectance check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_sets: Option<Vec<Vec<usize>>>,
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub env_seed: Option<String>,
    pub algorithm: Option<Algorithm>,
    pub rho: Option<f64>,
}

/// Parses a config document, or the `config` member of a run manifest.
pub fn parse_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<Config, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    let (value, prefix) = match value {
        serde_json::Value::Object(mut map) if map.contains_key("manifest_version") => {
            let cfg = map
                .remove("config")
                .ok_or_else(|| CliError::Config("manifest has no `config` member".into()))?;
            (cfg, "config.")
        }
        other => (other, ""),
    };
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{prefix}{path}: {}", e.inner()))
    })
}

impl Config {
    /// Applies overrides and defaults, returning the normalized config.
    ///
    /// Seed precedence: `--seed`, then `SINRSIM_SEED`, then the file.
    pub fn resolve(&self, overrides: &Overrides) -> Result<Config, CliError> {
        let env_seed = overrides
            .env_seed
            .as_deref()
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::Config(format!("SINRSIM_SEED: `{s}` is not a u64")))
            })
            .transpose()?;
        let seed = overrides.seed.or(env_seed).or(self.seed).unwrap_or(0);

        let algorithms = match overrides.algorithm {
            Some(a) => vec![a],
            None => self
                .algorithm
                .as_ref()
                .map_or_else(|| vec![Algorithm::ReflectEstimated], |a| a.0.clone()),
        };
        if algorithms.is_empty() {
            return Err(CliError::Config("algorithm: list is empty".into()));
        }

        let rho = overrides.rho.or(self.rho);
        let grid = match (rho, &self.rho_grid) {
            (Some(r), _) => vec![r],
            (None, Some(g)) => g.expand()?,
            (None, None) => RhoGrid::Range {
                start: 0.01,
                stop: 0.60,
                step: 0.01,
            }
            .expand()?,
        };
        if grid.is_empty() {
            return Err(CliError::Config("rho_grid: no points".into()));
        }
        if let Some(r) = grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(CliError::Config(format!("rho_grid: {r} outside [0, 1]")));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("rho_grid: must be strictly increasing".into()));
        }

        let power = self.power.unwrap_or(PowerKind::Uniform);
        match (power, &self.powers) {
            (PowerKind::Custom, None) => {
                return Err(CliError::Config("powers: required when power is `custom`".into()))
            }
            (p, Some(_)) if p != PowerKind::Custom => {
                return Err(CliError::Config(format!("powers: only allowed with custom power, not {p}")))
            }
            _ => {}
        }

        let horizon = self.horizon.unwrap_or(DEFAULT_HORIZON);
        let checkpoint = self.checkpoint.unwrap_or(DEFAULT_CHECKPOINT);
        if checkpoint == 0 || horizon < checkpoint {
            return Err(CliError::Config(format!(
                "checkpoint: need horizon >= checkpoint >= 1 (horizon={horizon}, checkpoint={checkpoint})"
            )));
        }
        if horizon / checkpoint < 4 {
            return Err(CliError::Config(format!(
                "checkpoint: stability classification needs at least 4 checkpoints, horizon/checkpoint = {}",
                horizon / checkpoint
            )));
        }
        let runs = self.runs.unwrap_or(DEFAULT_RUNS);
        if runs == 0 {
            return Err(CliError::Config("runs: must be at least 1".into()));
        }
        let pool_size = self.pool_size.unwrap_or(DEFAULT_POOL_SIZE);
        if pool_size == 0 {
            return Err(CliError::Config("pool_size: must be at least 1".into()));
        }

        let resolved = Config {
            n: Some(self.n.unwrap_or(200)),
            side: Some(self.side.unwrap_or(100.0)),
            lmin: Some(self.lmin.unwrap_or(1.0)),
            lmax: Some(self.lmax.unwrap_or(20.0)),
            alpha: Some(self.alpha.unwrap_or(2.5)),
            beta: Some(self.beta.unwrap_or(1.0)),
            noise: Some(self.noise.unwrap_or(0.0)),
            topology_file: self.topology_file.clone(),
            topology_seed: self.topology_seed,
            power: Some(power),
            power_level: Some(self.power_level.unwrap_or(1.0)),
            powers: self.powers.clone(),
            algorithm: Some(Algorithms(algorithms)),
            rho: None,
            rho_grid: Some(RhoGrid::List(grid)),
            horizon: Some(horizon),
            checkpoint: Some(checkpoint),
            runs: Some(runs),
            pool_size: Some(pool_size),
            pool_seed: self.pool_seed,
            seed: Some(seed),
            slope_threshold: Some(self.slope_threshold.unwrap_or(StabilityCriteria::default().slope)),
            queue_threshold: Some(self.queue_threshold.unwrap_or(StabilityCriteria::default().queue)),
            verify_sets: self.verify_sets.clone(),
        };
        resolved.topology_params().validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(resolved)
    }
}

/// Accessors on a resolved config. They panic if called before
/// [`Config::resolve`].
impl Config {
    pub fn topology_params(&self) -> TopologyParams<f64> {
        TopologyParams {
            n: self.n.expect("resolved"),
            side: self.side.expect("resolved"),
            lmin: self.lmin.expect("resolved"),
            lmax: self.lmax.expect("resolved"),
            alpha: self.alpha.expect("resolved"),
            beta: self.beta.expect("resolved"),
            noise: self.noise.expect("resolved"),
        }
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.algorithm.as_ref().expect("resolved").0.clone()
    }

    pub fn grid(&self) -> Vec<f64> {
        match self.rho_grid.as_ref().expect("resolved") {
            RhoGrid::List(xs) => xs.clone(),
            RhoGrid::Range { .. } => unreachable!("resolved grids are lists"),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.seed.expect("resolved")
    }

    /// Explicit topology seed, else one derived from the master seed.
    pub fn topology_seed(&self) -> u64 {
        self.topology_seed
            .unwrap_or_else(|| derive_seed(self.master_seed(), &[seed_tag::TOPOLOGY]))
    }

    pub fn pool_seed(&self) -> u64 {
        self.pool_seed
            .unwrap_or_else(|| derive_seed(self.master_seed(), &[seed_tag::POOL]))
    }

    pub fn power_level(&self) -> f64 {
        self.power_level.expect("resolved")
    }

    pub fn power_kind(&self) -> PowerKind {
        self.power.expect("resolved")
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size.expect("resolved")
    }

    pub fn criteria(&self) -> StabilityCriteria {
        StabilityCriteria {
            slope: self.slope_threshold.expect("resolved"),
            queue: self.queue_threshold.expect("resolved"),
        }
    }

    pub fn sweep_spec(&self, algorithm: Algorithm) -> SweepSpec {
        SweepSpec {
            algorithm,
            grid: self.grid(),
            runs: self.runs.expect("resolved"),
            horizon: self.horizon.expect("resolved"),
            checkpoint: self.checkpoint.expect("resolved"),
            master_seed: self.master_seed(),
            criteria: self.criteria(),
        }
    }

    /// Parameters of run `run` at grid point `point`, as the sweep uses them.
    pub fn run_params(&self, algorithm: Algorithm, point: usize, run: usize) -> RunParams<f64> {
        self.sweep_spec(algorithm).run_params(point, run)
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
