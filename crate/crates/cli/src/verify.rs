//! Property checks run against a scenario's topology, power and pool.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sinrsim_core::sinr::{check_sinr_direct, set_affectance_ceiling, strengthening_part_bound, FeasibleSetBuilder};
use sinrsim_core::traffic::is_maximal_feasible;
use sinrsim_core::{length_diversity, Error, LinkSet, PowerKind, Scenario, SinrModel};

/// Random (set, link) instances for the affectance/SINR agreement check.
pub const EQUIVALENCE_SAMPLES: usize = 2_000;
/// Random signal sets per strength for the separation check.
pub const SEPARATION_SETS: usize = 200;
const BOUNDARY_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub property: String,
    pub samples: usize,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, property: impl Into<String>, samples: usize, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            property: property.into(),
            samples,
            passed,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{status}  {:<48} samples={:<8} {}", c.property, c.samples, c.detail)?;
        }
        let failed = self.failures().count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Runs every property check. `injected` sets are fed to the set-affectance
/// checker as-is, so an infeasible one fails the report.
pub fn verify_scenario(scenario: &Scenario<f64>, injected: &[Vec<usize>], seed: u64) -> Report {
    let model = scenario.model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Report::default();
    let n = model.len();
    let pairs = n * n.saturating_sub(1);

    let power = model.power();
    let topo = model.topology();
    let monotone = power.is_length_monotone(topo);
    let sublinear = power.is_sublinear(topo);
    report.push(
        "power length-monotone and sub-linear",
        pairs,
        monotone && sublinear,
        format!("kind={}, monotone={monotone}, sublinear={sublinear}", power.kind()),
    );

    match power.check_noise_assumption(topo) {
        Ok(()) => report.push("noise margin c_u <= 2 beta", n, true, ""),
        Err(e) => report.push("noise margin c_u <= 2 beta", n, false, e.to_string()),
    }

    ratio_bound_check(model, &mut report);
    equivalence_check(model, &mut rng, &mut report);
    for q in [1.0, 2.0, 3.0] {
        separation_check(model, q, &mut rng, &mut report);
    }
    set_affectance_check(scenario, &mut report);
    injected_check(model, injected, &mut report);
    decomposition_check(scenario, &mut report);

    let sets = scenario.pool().sets();
    let maximal = sets.iter().filter(|s| is_maximal_feasible(model, s)).count();
    report.push(
        "pool sets are maximal feasible",
        sets.len(),
        maximal == sets.len(),
        format!("{maximal}/{} maximal", sets.len()),
    );
    report
}

fn ratio_bound_check(model: &SinrModel<f64>, report: &mut Report) {
    let n = model.len();
    let topo = model.topology();
    let Ok(diversity) = length_diversity(topo) else {
        report.push("signal ratio <= Delta^alpha", 0, false, "empty topology");
        return;
    };
    let bound = diversity.powf(topo.alpha());
    let mut max_ratio = if n > 1 { 0.0f64 } else { 1.0 };
    for u in 0..n {
        for v in (0..n).filter(|&v| v != u) {
            max_ratio = max_ratio.max(model.signal_ratio(u, v));
        }
    }
    let detail = if model.power().kind() == PowerKind::Linear && max_ratio == 1.0 {
        format!("max ratio = 1 exactly, bound = {bound:.6}")
    } else {
        format!("max ratio = {max_ratio:.12}, bound = {bound:.6}")
    };
    report.push(
        "signal ratio <= Delta^alpha",
        n * n.saturating_sub(1),
        max_ratio <= bound * (1.0 + BOUNDARY_BAND),
        detail,
    );
}

fn equivalence_check(model: &SinrModel<f64>, rng: &mut ChaCha8Rng, report: &mut Report) {
    let n = model.len();
    let mut ids: Vec<usize> = (0..n).collect();
    let (mut checked, mut boundary, mut disagreements) = (0usize, 0usize, 0usize);
    for _ in 0..EQUIVALENCE_SAMPLES {
        let k = rng.random_range(1..=n.min(16));
        ids.shuffle(rng);
        let set: LinkSet = ids[..k].iter().copied().collect();
        let u = ids[rng.random_range(0..k)];
        let sum = model.total_affectance(set.as_slice(), u);
        if (sum - 1.0).abs() <= BOUNDARY_BAND {
            boundary += 1;
            continue;
        }
        checked += 1;
        if (sum <= 1.0) != check_sinr_direct(model.topology(), model.power(), &set, u) {
            disagreements += 1;
        }
    }
    report.push(
        "affectance test agrees with direct SINR",
        checked,
        disagreements == 0,
        format!("{disagreements} disagreements, {boundary} boundary cases skipped"),
    );
}

/// Greedy `q^α`-signal set over a random order.
pub fn random_signal_set<R: Rng>(model: &SinrModel<f64>, q: f64, rng: &mut R) -> LinkSet {
    let mut order: Vec<usize> = (0..model.len()).collect();
    order.shuffle(rng);
    let mut builder = FeasibleSetBuilder::with_delta(model, q.powf(model.topology().alpha()));
    for u in order {
        builder.try_add(u);
    }
    builder.into_set()
}

fn separation_check(model: &SinrModel<f64>, q: f64, rng: &mut ChaCha8Rng, report: &mut Report) {
    let property = format!("separation in {q}^alpha-signal sets");
    if model.topology().beta() < 1.0 {
        report.push(property, 0, true, "not applicable: needs beta >= 1");
        return;
    }
    let mut violations = 0usize;
    let mut pairs = 0usize;
    for _ in 0..SEPARATION_SETS {
        let set = random_signal_set(model, q, rng);
        let members = set.as_slice();
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                pairs += 1;
                if !model.check_separation(u, v, q) {
                    violations += 1;
                }
            }
        }
    }
    report.push(
        property,
        SEPARATION_SETS,
        violations == 0,
        format!("{pairs} pairs, {violations} violations"),
    );
}

fn set_affectance_check(scenario: &Scenario<f64>, report: &mut Report) {
    let model = scenario.model();
    let topo = model.topology();
    let Ok(diversity) = length_diversity(topo) else {
        return;
    };
    let mut variants = vec![("set affectance <= ceiling", diversity)];
    if model.power().kind() == PowerKind::Linear {
        variants.push(("set affectance <= Delta-free ceiling", 1.0));
    }
    for (property, div) in variants {
        let mut samples = 0usize;
        let mut violations = 0usize;
        let mut worst = 0.0f64;
        for set in scenario.pool().sets() {
            for probe in 0..model.len() {
                samples += 1;
                worst = worst.max(model.total_affectance(set.as_slice(), probe));
                match model.check_set_affectance(set, probe, div) {
                    Ok(true) => {}
                    _ => violations += 1,
                }
            }
        }
        let ceiling = set_affectance_ceiling(topo.alpha(), topo.beta(), div);
        report.push(
            property,
            samples,
            violations == 0,
            format!("max {worst:.4} vs ceiling {ceiling:.1}, {violations} violations"),
        );
    }
}

fn injected_check(model: &SinrModel<f64>, injected: &[Vec<usize>], report: &mut Report) {
    if injected.is_empty() {
        return;
    }
    let diversity = length_diversity(model.topology()).unwrap_or(1.0);
    let mut problems = Vec::new();
    let mut samples = 0usize;
    for (i, ids) in injected.iter().enumerate() {
        let set = match LinkSet::from_ids(ids.iter().copied(), model.len()) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("set {i}: {e}"));
                continue;
            }
        };
        for probe in 0..model.len() {
            samples += 1;
            match model.check_set_affectance(&set, probe, diversity) {
                Ok(true) => {}
                Ok(false) => problems.push(format!("set {i}: ceiling exceeded at link {probe}")),
                Err(Error::InfeasibleInput) => {
                    problems.push(format!("set {i}: rejected, input set is infeasible"));
                    break;
                }
                Err(e) => {
                    problems.push(format!("set {i}: {e}"));
                    break;
                }
            }
        }
    }
    let detail = if problems.is_empty() {
        format!("{} sets accepted", injected.len())
    } else {
        problems.join("; ")
    };
    report.push("set affectance on injected sets", samples, problems.is_empty(), detail);
}

fn decomposition_check(scenario: &Scenario<f64>, report: &mut Report) {
    let model = scenario.model();
    let topo = model.topology();
    let q = 3.0;
    let limit = strengthening_part_bound(q, topo.alpha(), topo.beta());
    let delta = q.powf(topo.alpha());
    let mut failures = 0usize;
    let mut most_parts = 0usize;
    let sets = scenario.pool().sets();
    for set in sets {
        let Ok(parts) = model.strengthen_decompose(set, q) else {
            failures += 1;
            continue;
        };
        most_parts = most_parts.max(parts.len());
        let mut union: Vec<usize> = parts.iter().flat_map(|p| p.iter()).collect();
        union.sort_unstable();
        let ok = parts.len() as f64 <= limit
            && union == set.as_slice()
            && parts.iter().all(|p| model.is_delta_signal(p.as_slice(), delta));
        if !ok {
            failures += 1;
        }
    }
    report.push(
        "strengthening splits into 3^alpha-signal parts",
        sets.len(),
        failures == 0,
        format!("at most {most_parts} parts vs bound {limit}, {failures} failures"),
    );
}
