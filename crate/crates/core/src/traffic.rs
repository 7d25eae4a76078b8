//! Arrival traffic: a pool of maximal feasible sets stands in for the set
//! of all maximal schedules, and each slot delivers a thinned draw from it.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::length_diversity;
use crate::sinr::{kappa, FeasibleSetBuilder, LinkSet, PowerKind, SinrModel};
use crate::scalar::Scalar;

/// Scans `order` and keeps every link that leaves the set feasible.
///
/// When `order` covers every link the result is maximal.
pub fn greedy_maximal_feasible<T: Scalar>(model: &SinrModel<T>, order: &[usize]) -> LinkSet {
    let mut builder = FeasibleSetBuilder::new(model);
    for &id in order {
        builder.try_add(id);
    }
    builder.into_set()
}

/// Weighted maximal feasible sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeasibleSetPool<T> {
    sets: Vec<LinkSet>,
    weights: Vec<T>,
}

impl<T: Scalar> FeasibleSetPool<T> {
    pub fn new(sets: Vec<LinkSet>, weights: Vec<T>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidParameter("pool needs at least one set".into()));
        }
        if sets.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} sets but {} weights",
                sets.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= T::zero() && w.is_finite())) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { sets, weights })
    }

    pub fn uniform(sets: Vec<LinkSet>) -> Result<Self> {
        let w = T::one() / T::from_usize(sets.len().max(1)).expect("count fits");
        let weights = vec![w; sets.len()];
        Self::new(sets, weights)
    }

    pub fn sets(&self) -> &[LinkSet] {
        &self.sets
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Re-checks every set against `model`: feasible, and nothing outside
    /// it can be added. Returns the index of the first offending set.
    pub fn verify(&self, model: &SinrModel<T>) -> std::result::Result<(), usize> {
        for (i, set) in self.sets.iter().enumerate() {
            if set.iter().any(|id| id >= model.len()) || !is_maximal_feasible(model, set) {
                return Err(i);
            }
        }
        Ok(())
    }
}

/// Feasible, and no outside link can join while keeping it feasible.
pub fn is_maximal_feasible<T: Scalar>(model: &SinrModel<T>, set: &LinkSet) -> bool {
    if !model.is_feasible(set.as_slice()) {
        return false;
    }
    let mut grown: Vec<usize> = set.as_slice().to_vec();
    (0..model.len()).filter(|&x| !set.contains(x)).all(|x| {
        grown.push(x);
        let addable = model.is_feasible(&grown);
        grown.pop();
        !addable
    })
}

/// `k` greedy maximal sets from independent random link orders,
/// deduplicated in first-seen order, uniformly weighted.
pub fn build_pool<T: Scalar>(model: &SinrModel<T>, k: usize, seed: u64) -> Result<FeasibleSetPool<T>> {
    if k == 0 {
        return Err(Error::InvalidParameter("pool size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..model.len()).collect();
    let mut sets: Vec<LinkSet> = Vec::with_capacity(k);
    for _ in 0..k {
        order.shuffle(&mut rng);
        let set = greedy_maximal_feasible(model, &order);
        if !sets.contains(&set) {
            sets.push(set);
        }
    }
    FeasibleSetPool::uniform(sets)
}

/// Per-link rate `m_u = ρ · Σ_{i ∋ u} w_i`.
pub fn link_rates<T: Scalar>(pool: &FeasibleSetPool<T>, n: usize, rho: T) -> Vec<T> {
    let mut rates = vec![T::zero(); n];
    for (set, &w) in pool.sets.iter().zip(&pool.weights) {
        for id in set.iter() {
            rates[id] = rates[id] + rho * w;
        }
    }
    rates
}

/// Pool plus load factor `ρ`; produces i.i.d. per-slot Bernoulli arrivals.
#[derive(Debug, Clone)]
pub struct TrafficModel<T> {
    pool: FeasibleSetPool<T>,
    rho: T,
    rates: Vec<T>,
    picker: WeightedIndex<f64>,
}

impl<T: Scalar> TrafficModel<T> {
    pub fn new(pool: FeasibleSetPool<T>, n: usize, rho: T) -> Result<Self> {
        if !(rho >= T::zero() && rho <= T::one()) {
            return Err(Error::InvalidParameter(format!("rho must lie in [0, 1], got {rho}")));
        }
        if let Some(bad) = pool.sets.iter().flat_map(LinkSet::iter).find(|&id| id >= n) {
            return Err(Error::InvalidParameter(format!(
                "pool references link {bad} but topology has {n} links"
            )));
        }
        let picker = WeightedIndex::new(pool.weights.iter().map(|w| w.as_f64()))
            .map_err(|e| Error::InvalidParameter(format!("pool weights: {e}")))?;
        let rates = link_rates(&pool, n, rho);
        Ok(Self {
            pool,
            rho,
            rates,
            picker,
        })
    }

    pub fn pool(&self) -> &FeasibleSetPool<T> {
        &self.pool
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    /// Draws one pooled set by weight, then keeps each of its links with
    /// probability `ρ`. `out` receives the links that get a packet.
    pub fn sample_arrivals<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        let set = &self.pool.sets[self.picker.sample(rng)];
        let rho = self.rho.as_f64();
        out.extend(set.iter().filter(|_| rng.random::<f64>() < rho));
    }
}

/// Load below which Reflect is guaranteed stable: `1/(6 κ Δ^α)`, or
/// `1/(6 κ)` under linear power where the `Δ` dependence drops out.
pub fn proven_stable_rho<T: Scalar>(model: &SinrModel<T>) -> Result<T> {
    let t = model.topology();
    let alpha = t.alpha();
    let diversity_term = match model.power().kind() {
        PowerKind::Linear => T::one(),
        _ => length_diversity(t)?.powf(alpha),
    };
    Ok((T::lit(6.0) * kappa(alpha) * diversity_term).recip())
}
