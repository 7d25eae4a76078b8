//! Physical (SINR) interference: power assignments, affectance, feasibility
//! and the structural checks built on top of them.
//!
//! Affectance of `v` on `u` is
//! `a_v(u) = min{1, c_u · (P_v / P_u) · (ℓ_u / d_vu)^α}` with
//! `c_u = β / (1 − β N ℓ_u^α / P_u)`.
//!
//! Feasibility and δ-signal tests sum the *uncapped* terms. The capped and
//! uncapped sums only differ once a single term reaches 1, and at that point
//! the raw SINR test already fails; summing raw terms keeps the affectance
//! test equivalent to the SINR inequality instead of admitting mutually
//! destructive pairs whose capped sum sits exactly at 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{length_diversity, Topology};
use crate::scalar::{Scalar, BOUNDARY_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerKind {
    /// Every link uses the same power.
    Uniform,
    /// `P_u = ℓ_u^α`.
    Linear,
    /// `P_u = ℓ_u^{α/2}`.
    Mean,
    /// Caller-supplied powers, not checked for monotonicity or sublinearity.
    Custom,
}

impl PowerKind {
    pub const ALL: [PowerKind; 4] = [Self::Uniform, Self::Linear, Self::Mean, Self::Custom];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Linear => "linear",
            Self::Mean => "mean",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for PowerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PowerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown power kind `{s}`, expected one of uniform|linear|mean|custom"
                ))
            })
    }
}

/// Transmit power per link, materialized for one topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PowerAssignment<T> {
    kind: PowerKind,
    powers: Vec<T>,
}

impl<T: Scalar> PowerAssignment<T> {
    /// Uniform, linear or mean power scaled by `level`.
    pub fn from_kind(kind: PowerKind, topology: &Topology<T>, level: T) -> Result<Self> {
        if !(level > T::zero() && level.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power level must be positive, got {level}"
            )));
        }
        let alpha = topology.alpha();
        let half = alpha / T::lit(2.0);
        let powers = match kind {
            PowerKind::Uniform => vec![level; topology.len()],
            PowerKind::Linear => topology.lengths().iter().map(|l| level * l.powf(alpha)).collect(),
            PowerKind::Mean => topology.lengths().iter().map(|l| level * l.powf(half)).collect(),
            PowerKind::Custom => {
                return Err(Error::InvalidParameter(
                    "custom power needs explicit per-link powers".into(),
                ))
            }
        };
        Ok(Self { kind, powers })
    }

    pub fn uniform(topology: &Topology<T>) -> Self {
        Self::from_kind(PowerKind::Uniform, topology, T::one()).expect("unit level is valid")
    }

    pub fn linear(topology: &Topology<T>) -> Self {
        Self::from_kind(PowerKind::Linear, topology, T::one()).expect("unit level is valid")
    }

    pub fn mean(topology: &Topology<T>) -> Self {
        Self::from_kind(PowerKind::Mean, topology, T::one()).expect("unit level is valid")
    }

    pub fn custom(topology: &Topology<T>, powers: Vec<T>) -> Result<Self> {
        if powers.len() != topology.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} powers, got {}",
                topology.len(),
                powers.len()
            )));
        }
        if let Some(i) = powers.iter().position(|p| !(*p > T::zero() && p.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "power of link {i} must be positive and finite"
            )));
        }
        Ok(Self {
            kind: PowerKind::Custom,
            powers,
        })
    }

    pub fn kind(&self) -> PowerKind {
        self.kind
    }

    /// True for the uniform/linear/mean family the stability theory covers.
    pub fn in_theory_class(&self) -> bool {
        self.kind != PowerKind::Custom
    }

    #[inline]
    pub fn power(&self, id: usize) -> T {
        self.powers[id]
    }

    pub fn powers(&self) -> &[T] {
        &self.powers
    }

    /// `P_v ≥ P_w` whenever `ℓ_v ≥ ℓ_w`.
    pub fn is_length_monotone(&self, topology: &Topology<T>) -> bool {
        let tol = T::lit(1e-12);
        pairs_with_longer(topology).all(|(v, w)| {
            self.powers[v] >= self.powers[w] * (T::one() - tol)
        })
    }

    /// `P_v/ℓ_v^α ≤ P_w/ℓ_w^α` whenever `ℓ_v ≥ ℓ_w`.
    pub fn is_sublinear(&self, topology: &Topology<T>) -> bool {
        let tol = T::lit(1e-12);
        let alpha = topology.alpha();
        let density =
            |i: usize| self.powers[i] / topology.length(i).powf(alpha);
        pairs_with_longer(topology).all(|(v, w)| density(v) <= density(w) * (T::one() + tol))
    }

    /// Checks `β N ℓ_u^α / P_u ≤ 1/2` for every link, i.e. `c_u ≤ 2β`.
    pub fn check_noise_assumption(&self, topology: &Topology<T>) -> Result<()> {
        for u in 0..topology.len() {
            c_factor(topology, self, u)?;
        }
        Ok(())
    }
}

/// Ordered pairs `(v, w)` with `ℓ_v ≥ ℓ_w`, `v ≠ w`.
fn pairs_with_longer<T: Scalar>(topology: &Topology<T>) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n = topology.len();
    (0..n)
        .flat_map(move |v| (0..n).map(move |w| (v, w)))
        .filter(move |&(v, w)| v != w && topology.length(v) >= topology.length(w))
}

/// Noise margin factor `c_u = β / (1 − β N ℓ_u^α / P_u)`.
///
/// Fails when the noise term exceeds half the received signal, which is the
/// `c_u ≤ 2β` assumption. At exactly one half this returns `2β`.
pub fn c_factor<T: Scalar>(topology: &Topology<T>, power: &PowerAssignment<T>, u: usize) -> Result<T> {
    let beta = topology.beta();
    let ratio = beta * topology.noise() * topology.length(u).powf(topology.alpha()) / power.power(u);
    if ratio.is_nan() || ratio > T::lit(0.5) {
        return Err(Error::AssumptionViolated {
            link: u,
            ratio: ratio.as_f64(),
        });
    }
    Ok(beta / (T::one() - ratio))
}

/// Uncapped affectance term `c_u (P_v/P_u) (ℓ_u/d_vu)^α`, with `c_u` given.
#[inline]
fn raw_term<T: Scalar>(topology: &Topology<T>, power: &PowerAssignment<T>, c_u: T, v: usize, u: usize) -> T {
    if v == u {
        return T::zero();
    }
    let d = topology.link_distance(v, u);
    c_u * (power.power(v) / power.power(u)) * (topology.length(u) / d).powf(topology.alpha())
}

/// Affectance `a_v(u)` of link `v` on link `u`, in `[0, 1]`; zero for `v = u`.
pub fn affectance<T: Scalar>(
    topology: &Topology<T>,
    power: &PowerAssignment<T>,
    v: usize,
    u: usize,
) -> Result<T> {
    let c_u = c_factor(topology, power, u)?;
    Ok(raw_term(topology, power, c_u, v, u).min(T::one()))
}

/// Raw SINR test for `u` against the other members of `set`.
///
/// Computed from powers and distances directly, independent of affectance.
pub fn check_sinr_direct<T: Scalar>(
    topology: &Topology<T>,
    power: &PowerAssignment<T>,
    set: &LinkSet,
    u: usize,
) -> bool {
    let alpha = topology.alpha();
    let signal = power.power(u) / topology.length(u).powf(alpha);
    let interference: T = set
        .iter()
        .filter(|&v| v != u)
        .map(|v| power.power(v) / topology.link_distance(v, u).powf(alpha))
        .sum();
    signal >= topology.beta() * (interference + topology.noise())
}

/// `κ = 3^{α+1}`.
pub fn kappa<T: Scalar>(alpha: T) -> T {
    T::lit(3.0).powf(alpha + T::one())
}

/// Stated bound `κ · Δ^α` on the affectance a feasible set puts on any link.
pub fn max_set_affectance_bound<T: Scalar>(topology: &Topology<T>) -> Result<T> {
    let delta = length_diversity(topology)?;
    Ok(kappa(topology.alpha()) * delta.powf(topology.alpha()))
}

/// Number of `3^α`-signal parts the proof splits a feasible set into,
/// `⌈2·q^α/β⌉²` for general `q`.
pub fn strengthening_part_bound<T: Scalar>(q: T, alpha: T, beta: T) -> T {
    let per_axis = (T::lit(2.0) * q.powf(alpha) / beta).ceil();
    per_axis * per_axis
}

/// Conservative set-affectance ceiling `⌈2·3^α/β⌉² · (1 + 2(3Δ)^α)`:
/// the per-part bound times the number of parts.
pub fn set_affectance_ceiling<T: Scalar>(alpha: T, beta: T, diversity: T) -> T {
    let three = T::lit(3.0);
    strengthening_part_bound(three, alpha, beta)
        * (T::one() + T::lit(2.0) * (three * diversity).powf(alpha))
}

/// A set of link ids over one topology, kept sorted and duplicate-free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkSet(Vec<usize>);

impl LinkSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Validates ids against a topology of `n` links.
    pub fn from_ids(ids: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        if let Some(&bad) = ids.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidParameter(format!(
                "link id {bad} out of range for {n} links"
            )));
        }
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate link id in set".into()));
        }
        Ok(Self(ids))
    }

    /// Sorts and deduplicates without range checks.
    pub(crate) fn from_unsorted(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self(ids)
    }

    pub fn singleton(id: usize) -> Self {
        Self(vec![id])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn insert(&mut self, id: usize) -> bool {
        match self.0.binary_search(&id) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, id);
                true
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn without(&self, id: usize) -> Self {
        Self(self.0.iter().copied().filter(|&v| v != id).collect())
    }
}

impl FromIterator<usize> for LinkSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}

/// A topology with a power assignment and its precomputed affectance matrix.
#[derive(Debug, Clone)]
pub struct SinrModel<T> {
    topology: Topology<T>,
    power: PowerAssignment<T>,
    /// `raw[u * n + v]` is the uncapped affectance of `v` on `u`.
    raw: Vec<T>,
}

impl<T: Scalar> SinrModel<T> {
    pub fn new(topology: Topology<T>, power: PowerAssignment<T>) -> Result<Self> {
        let n = topology.len();
        if power.powers().len() != n {
            return Err(Error::InvalidParameter(format!(
                "power assignment covers {} links, topology has {n}",
                power.powers().len()
            )));
        }
        let mut raw = vec![T::zero(); n * n];
        for u in 0..n {
            let c_u = c_factor(&topology, &power, u)?;
            let row = &mut raw[u * n..(u + 1) * n];
            for (v, slot) in row.iter_mut().enumerate() {
                *slot = raw_term(&topology, &power, c_u, v, u);
            }
        }
        Ok(Self { topology, power, raw })
    }

    pub fn topology(&self) -> &Topology<T> {
        &self.topology
    }

    pub fn power(&self) -> &PowerAssignment<T> {
        &self.power
    }

    pub fn len(&self) -> usize {
        self.topology.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topology.is_empty()
    }

    #[inline]
    pub fn raw_affectance(&self, v: usize, u: usize) -> T {
        self.raw[u * self.len() + v]
    }

    #[inline]
    pub fn affectance(&self, v: usize, u: usize) -> T {
        self.raw_affectance(v, u).min(T::one())
    }

    /// `a_S(u)`: capped affectance summed over `members`, skipping `u`.
    pub fn total_affectance(&self, members: &[usize], u: usize) -> T {
        let row = &self.raw[u * self.len()..(u + 1) * self.len()];
        members
            .iter()
            .filter(|&&v| v != u)
            .map(|&v| row[v].min(T::one()))
            .sum()
    }

    /// Uncapped affectance summed over `members`, skipping `u`.
    pub fn interference_load(&self, members: &[usize], u: usize) -> T {
        let row = &self.raw[u * self.len()..(u + 1) * self.len()];
        members.iter().filter(|&&v| v != u).map(|&v| row[v]).sum()
    }

    /// Every member receives at most `1/δ` (plus the boundary tolerance).
    pub fn is_delta_signal(&self, members: &[usize], delta: T) -> bool {
        let limit = signal_limit(delta);
        members
            .iter()
            .all(|&u| self.interference_load(members, u) <= limit)
    }

    pub fn is_feasible(&self, members: &[usize]) -> bool {
        self.is_delta_signal(members, T::one())
    }

    /// Members of `transmitters` whose reception succeeds this slot.
    pub fn successful(&self, transmitters: &[usize], out: &mut Vec<usize>) {
        out.clear();
        let limit = signal_limit(T::one());
        out.extend(
            transmitters
                .iter()
                .copied()
                .filter(|&u| self.interference_load(transmitters, u) <= limit),
        );
    }

    /// `P_u ℓ_v^α / (P_v ℓ_u^α)`, bounded by `Δ^α` for monotone sublinear power.
    pub fn signal_ratio(&self, u: usize, v: usize) -> T {
        let alpha = self.topology.alpha();
        let (lu, lv) = (self.topology.length(u), self.topology.length(v));
        (self.power.power(u) * lv.powf(alpha)) / (self.power.power(v) * lu.powf(alpha))
    }

    /// Separation property of signal sets: `d_uv · d_vu ≥ q² ℓ_u ℓ_v`,
    /// checked with relative tolerance `1e-9`.
    pub fn check_separation(&self, u: usize, v: usize, q: T) -> bool {
        let t = &self.topology;
        let lhs = t.link_distance(u, v) * t.link_distance(v, u);
        let rhs = q * q * t.length(u) * t.length(v);
        lhs >= rhs * (T::one() - T::lit(BOUNDARY_EPS))
    }

    /// Splits a feasible set into `q^α`-signal parts.
    ///
    /// First-fit over links in decreasing length order (ties by id): a link
    /// joins the first part in which neither it nor any member would exceed
    /// affectance `q^{-α}`.
    pub fn strengthen_decompose(&self, set: &LinkSet, q: T) -> Result<Vec<LinkSet>> {
        if !self.is_feasible(set.as_slice()) {
            return Err(Error::InfeasibleInput);
        }
        let delta = q.powf(self.topology.alpha());
        let mut order: Vec<usize> = set.iter().collect();
        order.sort_by(|&a, &b| {
            self.topology
                .length(b)
                .partial_cmp(&self.topology.length(a))
                .expect("finite lengths")
                .then(a.cmp(&b))
        });
        let mut parts: Vec<FeasibleSetBuilder<'_, T>> = Vec::new();
        for u in order {
            if !parts.iter_mut().any(|p| p.try_add(u)) {
                let mut part = FeasibleSetBuilder::with_delta(self, delta);
                let added = part.try_add(u);
                debug_assert!(added, "a singleton is always a signal set");
                parts.push(part);
            }
        }
        Ok(parts.into_iter().map(FeasibleSetBuilder::into_set).collect())
    }

    /// Checks the set-affectance ceiling for a feasible `set` and probe link.
    ///
    /// `diversity` is normally `Δ`; pass `1` for the linear-power variant.
    pub fn check_set_affectance(&self, set: &LinkSet, probe: usize, diversity: T) -> Result<bool> {
        if !self.is_feasible(set.as_slice()) {
            return Err(Error::InfeasibleInput);
        }
        let t = &self.topology;
        let ceiling = set_affectance_ceiling(t.alpha(), t.beta(), diversity);
        Ok(self.total_affectance(set.as_slice(), probe) <= ceiling)
    }
}

#[inline]
fn signal_limit<T: Scalar>(delta: T) -> T {
    delta.recip() + T::lit(BOUNDARY_EPS)
}

/// Grows a `δ`-signal set one link at a time, tracking member loads.
#[derive(Debug, Clone)]
pub struct FeasibleSetBuilder<'a, T> {
    model: &'a SinrModel<T>,
    limit: T,
    members: Vec<usize>,
    loads: Vec<T>,
}

impl<'a, T: Scalar> FeasibleSetBuilder<'a, T> {
    /// Builder for SINR-feasible (1-signal) sets.
    pub fn new(model: &'a SinrModel<T>) -> Self {
        Self::with_delta(model, T::one())
    }

    pub fn with_delta(model: &'a SinrModel<T>, delta: T) -> Self {
        Self {
            model,
            limit: signal_limit(delta),
            members: Vec::new(),
            loads: Vec::new(),
        }
    }

    /// Adds `x` if the grown set stays within the signal limit.
    pub fn try_add(&mut self, x: usize) -> bool {
        let own = self.model.interference_load(&self.members, x);
        if own > self.limit {
            return false;
        }
        let fits = self
            .members
            .iter()
            .zip(&self.loads)
            .all(|(&u, &load)| load + self.model.raw_affectance(x, u) <= self.limit);
        if !fits {
            return false;
        }
        for (&u, load) in self.members.iter().zip(self.loads.iter_mut()) {
            *load = *load + self.model.raw_affectance(x, u);
        }
        self.members.push(x);
        self.loads.push(own);
        true
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn clear(&mut self) {
        self.members.clear();
        self.loads.clear();
    }

    pub fn into_set(self) -> LinkSet {
        LinkSet::from_unsorted(self.members)
    }
}
