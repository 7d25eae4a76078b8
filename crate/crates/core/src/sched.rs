//! Transmission policies: Reflect (known or estimated rates), the
//! length-class partitioned Reflect, and centralized Longest Queue First.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Topology;
use crate::scalar::Scalar;
use crate::sinr::{FeasibleSetBuilder, SinrModel};

/// Reflect transmits a backlogged packet with probability `2.5 · m_u`.
pub const REFLECT_FACTOR: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Reflect,
    ReflectEstimated,
    ReflectPartitioned,
    Lqf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Self::Reflect,
        Self::ReflectEstimated,
        Self::ReflectPartitioned,
        Self::Lqf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Reflect => "reflect",
            Self::ReflectEstimated => "reflect-estimated",
            Self::ReflectPartitioned => "reflect-partitioned",
            Self::Lqf => "lqf",
        }
    }

    pub fn rate_mode(self) -> RateMode {
        match self {
            Self::ReflectEstimated => RateMode::Estimated,
            _ => RateMode::Known,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown algorithm `{s}`, expected one of reflect|reflect-estimated|reflect-partitioned|lqf"
            ))
        })
    }
}

/// Whether links use their true arrival rate or the running estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    Known,
    Estimated,
}

/// Per-link queues and cumulative counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueState {
    queues: Vec<u64>,
    arrivals: Vec<u64>,
    departures: Vec<u64>,
    slot: u64,
}

impl QueueState {
    pub fn new(n: usize) -> Self {
        Self {
            queues: vec![0; n],
            arrivals: vec![0; n],
            departures: vec![0; n],
            slot: 0,
        }
    }

    /// Starts the next slot and enqueues one packet per listed link.
    pub fn begin_slot(&mut self, arriving: &[usize]) {
        self.slot += 1;
        for &u in arriving {
            self.queues[u] += 1;
            self.arrivals[u] += 1;
        }
    }

    /// Removes the head packet of each listed link.
    pub fn depart(&mut self, links: &[usize]) {
        for &u in links {
            assert!(self.queues[u] > 0, "link {u} departed from an empty queue");
            self.queues[u] -= 1;
            self.departures[u] += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.queues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queues.is_empty()
    }

    /// Slots begun so far (`t`).
    pub fn slot(&self) -> u64 {
        self.slot
    }

    #[inline]
    pub fn queue(&self, u: usize) -> u64 {
        self.queues[u]
    }

    #[inline]
    pub fn is_backlogged(&self, u: usize) -> bool {
        self.queues[u] > 0
    }

    pub fn queues(&self) -> &[u64] {
        &self.queues
    }

    pub fn arrivals(&self) -> &[u64] {
        &self.arrivals
    }

    pub fn departures(&self) -> &[u64] {
        &self.departures
    }

    pub fn max_queue(&self) -> u64 {
        self.queues.iter().copied().max().unwrap_or(0)
    }

    /// Fills `rates` with `min{1, A_u(t)/t}` for every link.
    pub fn estimated_rates<T: Scalar>(&self, rates: &mut [T]) {
        for (r, &a) in rates.iter_mut().zip(&self.arrivals) {
            *r = estimate_rate(a, self.slot);
        }
    }
}

/// Running rate estimate `min{1, A_u(t)/t}`; zero before the first slot.
pub fn estimate_rate<T: Scalar>(cumulative_arrivals: u64, t: u64) -> T {
    if t == 0 {
        return T::zero();
    }
    T::lit((cumulative_arrivals as f64 / t as f64).min(1.0))
}

/// `min{1, 2.5 · m}`.
#[inline]
pub fn transmit_probability<T: Scalar>(rate: T) -> f64 {
    (REFLECT_FACTOR * rate.as_f64()).min(1.0)
}

/// One independent random stream per link, so that a link's decisions never
/// depend on what other links drew.
#[derive(Debug, Clone)]
pub struct DecisionStreams {
    streams: Vec<ChaCha8Rng>,
}

impl DecisionStreams {
    pub fn new(seed: u64, n: usize) -> Self {
        let streams = (0..n)
            .map(|u| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(u as u64);
                rng
            })
            .collect();
        Self { streams }
    }

    #[inline]
    fn draw(&mut self, u: usize) -> f64 {
        self.streams[u].random()
    }
}

/// Reflect decision for one link: consumes exactly one draw from `u`'s
/// stream and reads nothing but `u`'s own queue and rate.
#[inline]
fn reflect_link<T: Scalar>(queues: &QueueState, rate: T, streams: &mut DecisionStreams, u: usize, scale: f64) -> bool {
    let draw = streams.draw(u);
    queues.is_backlogged(u) && draw < (REFLECT_FACTOR * scale * rate.as_f64()).min(1.0)
}

/// Each backlogged link transmits independently with probability
/// `min{1, 2.5 · m_u}`.
pub fn reflect_decide<T: Scalar>(
    queues: &QueueState,
    rates: &[T],
    streams: &mut DecisionStreams,
    out: &mut Vec<usize>,
) {
    out.clear();
    for (u, &rate) in rates.iter().enumerate() {
        if reflect_link(queues, rate, streams, u, 1.0) {
            out.push(u);
        }
    }
}

/// [`reflect_decide`] restricted to `links`.
pub fn reflect_decide_links<T: Scalar>(
    queues: &QueueState,
    rates: &[T],
    links: &[usize],
    streams: &mut DecisionStreams,
    out: &mut Vec<usize>,
) {
    out.clear();
    for &u in links {
        if reflect_link(queues, rates[u], streams, u, 1.0) {
            out.push(u);
        }
    }
}

/// Dyadic length classes: class `r` (1-based) holds lengths in
/// `[2^{r-1} ℓ_min, 2^r ℓ_min)`, with `ℓ_max` kept in the top class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthClasses {
    count: usize,
    class_of: Vec<usize>,
}

impl LengthClasses {
    pub fn count(&self) -> usize {
        self.count
    }

    /// 1-based class of link `u`.
    pub fn class_of(&self, u: usize) -> usize {
        self.class_of[u]
    }

    /// Class scheduled in 1-based slot `t`: `((t − 1) mod C) + 1`.
    pub fn slot_class(&self, t: u64) -> usize {
        debug_assert!(t >= 1);
        ((t - 1) % self.count as u64) as usize + 1
    }
}

pub fn build_length_classes<T: Scalar>(topology: &Topology<T>) -> Result<LengthClasses> {
    let (lmin, lmax) = topology.length_range().ok_or(Error::EmptyTopology)?;
    let class_index = |l: T| -> usize {
        let octave = (l / lmin).log2().floor();
        octave.to_usize().unwrap_or(0) + 1
    };
    let count = class_index(lmax);
    let class_of = topology
        .lengths()
        .iter()
        .map(|&l| class_index(l).min(count))
        .collect();
    Ok(LengthClasses { count, class_of })
}

/// Reflect on the class owning slot `t`; links of that class transmit with
/// probability `min{1, 2.5 · m_u · C}`, all others stay silent.
pub fn partitioned_reflect_decide<T: Scalar>(
    queues: &QueueState,
    rates: &[T],
    classes: &LengthClasses,
    t: u64,
    streams: &mut DecisionStreams,
    out: &mut Vec<usize>,
) {
    out.clear();
    let active = classes.slot_class(t);
    let scale = classes.count() as f64;
    for (u, &rate) in rates.iter().enumerate() {
        let go = reflect_link(queues, rate, streams, u, scale);
        if go && classes.class_of(u) == active {
            out.push(u);
        }
    }
}

/// Longest Queue First: backlogged links in decreasing queue order (ties
/// by lower id), each admitted iff the schedule stays feasible.
pub fn lqf_schedule<T: Scalar>(queues: &QueueState, model: &SinrModel<T>, out: &mut Vec<usize>) {
    let mut order: Vec<usize> = (0..queues.len()).filter(|&u| queues.is_backlogged(u)).collect();
    order.sort_by(|&a, &b| queues.queue(b).cmp(&queues.queue(a)).then(a.cmp(&b)));
    let mut builder = FeasibleSetBuilder::new(model);
    for u in order {
        builder.try_add(u);
    }
    out.clear();
    out.extend_from_slice(builder.members());
}

/// Transmitters whose slot affectance permits decoding.
pub fn resolve_successes<T: Scalar>(transmitters: &[usize], model: &SinrModel<T>, out: &mut Vec<usize>) {
    model.successful(transmitters, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Link, Point};
    use crate::sinr::PowerAssignment;

    fn line_topology(lengths: &[f64]) -> Topology<f64> {
        let links = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let x = 1e4 * i as f64;
                Link::new(i, Point::new(x, 0.0), Point::new(x + l, 0.0))
            })
            .collect();
        Topology::new(links, 2.5, 1.0, 0.0).unwrap()
    }

    fn colocated(k: usize) -> SinrModel<f64> {
        let links = (0..k)
            .map(|i| Link::new(i, Point::new(0.0, 0.0), Point::new(1.0, 0.0)))
            .collect();
        let t = Topology::new(links, 2.5, 1.0, 0.0).unwrap();
        SinrModel::new(t.clone(), PowerAssignment::uniform(&t)).unwrap()
    }

    fn backlogged(n: usize) -> QueueState {
        let mut q = QueueState::new(n);
        let all: Vec<usize> = (0..n).collect();
        for _ in 0..3 {
            q.begin_slot(&all);
        }
        q
    }

    #[test]
    fn algorithm_names() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{a}\""));
        }
        let err = "relect".parse::<Algorithm>().unwrap_err().to_string();
        assert!(err.contains("reflect-estimated"), "{err}");
    }

    #[test]
    fn reflect_examples() {
        let q = QueueState::new(4);
        let mut streams = DecisionStreams::new(1, 4);
        let mut out = Vec::new();
        reflect_decide(&q, &[0.3; 4], &mut streams, &mut out);
        assert!(out.is_empty());

        let q = backlogged(4);
        for _ in 0..100 {
            reflect_decide(&q, &[0.4; 4], &mut streams, &mut out);
            assert_eq!(out, vec![0, 1, 2, 3]);
        }
        assert_eq!(transmit_probability(0.4), 1.0);
    }

    #[test]
    fn reflect_transmit_frequency() {
        let q = backlogged(1);
        let mut streams = DecisionStreams::new(5, 1);
        let mut out = Vec::new();
        let slots = 100_000;
        let mut hits = 0u32;
        for _ in 0..slots {
            reflect_decide(&q, &[0.1], &mut streams, &mut out);
            hits += out.len() as u32;
        }
        let freq = f64::from(hits) / slots as f64;
        let sigma = (0.25f64 * 0.75 / slots as f64).sqrt();
        assert!((freq - 0.25).abs() <= 3.0 * sigma, "{freq}");
    }

    #[test]
    fn reflect_is_local() {
        let n = 12;
        let mut q = QueueState::new(n);
        q.begin_slot(&[0, 2, 3, 5, 7, 8, 11]);
        let rates: Vec<f64> = (0..n).map(|u| 0.02 * u as f64).collect();
        let subset = [2, 5, 6, 11];

        let mut full_streams = DecisionStreams::new(42, n);
        let mut sub_streams = DecisionStreams::new(42, n);
        let (mut full, mut part) = (Vec::new(), Vec::new());
        for _ in 0..500 {
            reflect_decide(&q, &rates, &mut full_streams, &mut full);
            reflect_decide_links(&q, &rates, &subset, &mut sub_streams, &mut part);
            let restricted: Vec<usize> = full.iter().copied().filter(|u| subset.contains(u)).collect();
            assert_eq!(restricted, part);
        }
    }

    #[test]
    fn estimator_examples() {
        assert_eq!(estimate_rate::<f64>(0, 10), 0.0);
        assert_eq!(estimate_rate::<f64>(10, 10), 1.0);
        assert_eq!(estimate_rate::<f64>(3, 12), 0.25);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut q = QueueState::new(1);
        for _ in 0..100_000 {
            let arriving: &[usize] = if rng.random::<f64>() < 0.2 { &[0] } else { &[] };
            q.begin_slot(arriving);
        }
        let mut est = [0.0f64];
        q.estimated_rates(&mut est);
        assert!((est[0] - 0.2).abs() <= 0.01, "{}", est[0]);
    }

    /// Every pair conflicts: each link's sender sits inside the others' reach.
    fn crowded(k: usize) -> SinrModel<f64> {
        let links = (0..k)
            .map(|i| {
                let x = 0.1 * i as f64;
                Link::new(i, Point::new(x, 0.0), Point::new(x + 1.0, 0.0))
            })
            .collect();
        let t = Topology::new(links, 2.5, 1.0, 0.0).unwrap();
        SinrModel::new(t.clone(), PowerAssignment::uniform(&t)).unwrap()
    }

    #[test]
    fn lqf_examples() {
        let m = crowded(3);
        assert!(!m.is_feasible(&[0, 1]) && !m.is_feasible(&[1, 2]) && !m.is_feasible(&[0, 2]));
        let mut out = Vec::new();
        lqf_schedule(&QueueState::new(3), &m, &mut out);
        assert!(out.is_empty());

        let mut q = QueueState::new(3);
        q.begin_slot(&[1]);
        lqf_schedule(&q, &m, &mut out);
        assert_eq!(out, vec![1]);

        // Longest queue wins among mutually exclusive links; ties by id.
        q.begin_slot(&[2]);
        q.begin_slot(&[2, 0]);
        lqf_schedule(&q, &m, &mut out);
        assert_eq!(out, vec![2]);
        q.begin_slot(&[1]);
        lqf_schedule(&q, &m, &mut out);
        assert_eq!(out, vec![1]);
    }

    #[test]
    fn resolve_examples() {
        let t = line_topology(&[1.0, 2.0, 3.0]);
        let m = SinrModel::new(t.clone(), PowerAssignment::uniform(&t)).unwrap();
        let mut out = Vec::new();
        resolve_successes(&[1], &m, &mut out);
        assert_eq!(out, vec![1]);
        resolve_successes(&[0, 1, 2], &m, &mut out);
        assert_eq!(out, vec![0, 1, 2]);

        let m = colocated(3);
        resolve_successes(&[0, 1, 2], &m, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn length_class_examples() {
        let c = build_length_classes(&line_topology(&[3.0, 3.0, 3.0])).unwrap();
        assert_eq!(c.count(), 1);

        let c = build_length_classes(&line_topology(&[1.0, 1.9, 2.0, 4.5, 8.0, 15.9, 16.0, 20.0])).unwrap();
        assert_eq!(c.count(), 5);
        let classes: Vec<usize> = (0..8).map(|u| c.class_of(u)).collect();
        assert_eq!(classes, vec![1, 1, 2, 3, 4, 4, 5, 5]);
        assert_eq!(c.slot_class(1), 1);
        assert_eq!(c.slot_class(5), 5);
        assert_eq!(c.slot_class(6), 1);

        // ℓ_max exactly a power of two times ℓ_min opens its own top class.
        let c = build_length_classes(&line_topology(&[1.0, 4.0])).unwrap();
        assert_eq!(c.count(), 3);
        assert_eq!(c.class_of(1), 3);

        let empty = Topology::<f64>::new(vec![], 2.0, 1.0, 0.0).unwrap();
        assert!(build_length_classes(&empty).is_err());
    }

    #[test]
    fn partitioned_examples() {
        let n = 4;
        let q = backlogged(n);
        let rates = [0.05, 0.1, 0.15, 0.2];
        let mut out = Vec::new();

        // C = 1 reproduces plain Reflect draw for draw.
        let one = build_length_classes(&line_topology(&[2.0, 2.5, 3.0, 3.5])).unwrap();
        let mut a = DecisionStreams::new(8, n);
        let mut b = DecisionStreams::new(8, n);
        let mut plain = Vec::new();
        for t in 1..=300 {
            partitioned_reflect_decide(&q, &rates, &one, t, &mut a, &mut out);
            reflect_decide(&q, &rates, &mut b, &mut plain);
            assert_eq!(out, plain);
        }

        // Only the slot's class may transmit.
        let five = build_length_classes(&line_topology(&[1.0, 2.5, 5.0, 20.0])).unwrap();
        assert_eq!(five.count(), 5);
        let mut s = DecisionStreams::new(9, n);
        for t in 1..=500u64 {
            partitioned_reflect_decide(&q, &[1.0; 4], &five, t, &mut s, &mut out);
            let active = five.slot_class(t);
            let expected: Vec<usize> = (0..n).filter(|&u| five.class_of(u) == active).collect();
            assert_eq!(out, expected, "slot {t}");
        }
    }
}
