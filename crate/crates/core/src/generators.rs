//! Instance generators.
//!
//! Two families: random Euclidean testbeds for exercising the solver, and
//! a set-coverage reduction that produces instances whose exact optimum is
//! known (1 when a k-cover exists, `3^z` when none does), used to sanity
//! check the whole pipeline against ground truth.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::instance::{Instance, MetricCheck, MetricData};
use crate::subsets::{binomial, next_combination};

/// Subset-count ceiling for the exhaustive cover check.
pub const COVER_CHECK_CAP: u64 = 1_000_000;

/// Probability that an extra element is mixed into a planted set.
const ENRICH_P: f64 = 0.2;
/// Per-element membership probability for decoy sets.
const DECOY_P: f64 = 0.35;

fn padded(prefix: &str, i: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(1);
    format!("{prefix}{i:0width$}")
}

/// Random instance in the unit cube: uniform coordinates, a uniform group
/// partition repaired so every group is nonempty, and uniform weights.
/// Everything is a pure function of the parameters and seed.
#[allow(clippy::too_many_arguments)]
pub fn random_euclidean(
    n_points: usize,
    n_facilities: usize,
    dim: usize,
    n_groups: usize,
    k: usize,
    z: f64,
    weight_range: (f64, f64),
    seed: u64,
) -> Result<Instance, Error> {
    let bad = |msg: String| Err(Error::InvalidParameter(msg));
    if n_points == 0 || n_facilities == 0 || dim == 0 || n_groups == 0 {
        return bad("all counts must be positive".into());
    }
    if n_groups > n_points {
        return bad(format!(
            "cannot split {n_points} points into {n_groups} nonempty groups"
        ));
    }
    if k == 0 || k > n_facilities {
        return bad(format!(
            "k = {k} out of range for {n_facilities} facilities"
        ));
    }
    let (lo, hi) = weight_range;
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi < lo {
        return bad(format!("bad weight range [{lo}, {hi}]"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point_ids: Vec<String> = (0..n_points).map(|i| padded("p", i, n_points)).collect();
    let facility_ids: Vec<String> = (0..n_facilities)
        .map(|i| padded("f", i, n_facilities))
        .collect();

    let mut coords = std::collections::BTreeMap::new();
    for id in point_ids.iter().chain(&facility_ids) {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        coords.insert(id.clone(), v);
    }

    // Independent uniform group labels, then repair empty groups by
    // stealing the highest-index member of the currently largest group.
    let mut label: Vec<usize> = (0..n_points).map(|_| rng.gen_range(0..n_groups)).collect();
    loop {
        let mut size = vec![0usize; n_groups];
        for &g in &label {
            size[g] += 1;
        }
        let empty = match size.iter().position(|&s| s == 0) {
            Some(g) => g,
            None => break,
        };
        let largest = size
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(g, _)| g)
            .expect("group list is nonempty");
        let victim = (0..n_points)
            .rev()
            .find(|&p| label[p] == largest)
            .expect("largest group has a member");
        label[victim] = empty;
    }

    let weights: Vec<f64> = (0..n_points)
        .map(|_| if lo == hi { lo } else { rng.gen_range(lo..hi) })
        .collect();

    let groups: Vec<(String, Vec<String>, Vec<f64>)> = (0..n_groups)
        .map(|g| {
            let members: Vec<usize> = (0..n_points).filter(|&p| label[p] == g).collect();
            (
                padded("g", g, n_groups),
                members.iter().map(|&p| point_ids[p].clone()).collect(),
                members.iter().map(|&p| weights[p]).collect(),
            )
        })
        .collect();

    Instance::new(
        point_ids,
        facility_ids,
        MetricData::Coords(coords),
        groups,
        k,
        z,
        MetricCheck::Validate,
    )
}

/// A set-coverage question: do `k` sets from the collection cover the
/// universe? `is_yes` carries the ground truth when known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetCoverageInstance {
    pub universe: Vec<String>,
    pub sets: Vec<Vec<String>>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_yes: Option<bool>,
}

impl SetCoverageInstance {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.universe.is_empty() {
            return bad("empty universe".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        let mut seen = BTreeSet::new();
        for e in &self.universe {
            if !seen.insert(e) {
                return bad(format!("duplicate universe element '{e}'"));
            }
        }
        for (i, s) in self.sets.iter().enumerate() {
            let mut in_set = BTreeSet::new();
            for e in s {
                if !seen.contains(e) {
                    return bad(format!("set {i} mentions unknown element '{e}'"));
                }
                if !in_set.insert(e) {
                    return bad(format!("set {i} lists '{e}' twice"));
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<SetCoverageInstance, Error> {
        let sc: SetCoverageInstance = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInstance(format!("set-coverage JSON: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    fn membership(&self) -> Vec<u128> {
        let index: std::collections::HashMap<&str, usize> = self
            .universe
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i))
            .collect();
        self.sets
            .iter()
            .map(|s| s.iter().fold(0u128, |m, e| m | (1 << index[e.as_str()])))
            .collect()
    }
}

/// Decide by enumeration whether some `k` sets cover the universe. When the
/// collection holds fewer than `k` sets, all of them together must cover.
pub fn exhaustive_cover_check(sc: &SetCoverageInstance) -> Result<bool, Error> {
    sc.validate()?;
    if sc.universe.len() > 128 {
        return Err(Error::InvalidParameter(format!(
            "cover check supports at most 128 elements, got {}",
            sc.universe.len()
        )));
    }
    let m = sc.sets.len();
    let r = sc.k.min(m);
    if m == 0 {
        return Ok(false);
    }
    match binomial(m, r) {
        Some(total) if total <= COVER_CHECK_CAP => {}
        Some(total) => {
            return Err(Error::CapExceeded {
                what: "exhaustive cover check",
                required: total.to_string(),
                cap: COVER_CHECK_CAP,
            })
        }
        None => {
            return Err(Error::CapExceeded {
                what: "exhaustive cover check",
                required: "more than 2^64".into(),
                cap: COVER_CHECK_CAP,
            })
        }
    }

    let masks = sc.membership();
    let full = if sc.universe.len() == 128 {
        u128::MAX
    } else {
        (1u128 << sc.universe.len()) - 1
    };
    let mut combo: Vec<usize> = (0..r).collect();
    loop {
        let union = combo.iter().fold(0u128, |m, &i| m | masks[i]);
        if union == full {
            return Ok(true);
        }
        if !next_combination(&mut combo, m) {
            break;
        }
    }
    Ok(false)
}

/// Turn a set-coverage question into a clustering instance whose optimal
/// fair cost is exactly 1 on YES inputs and exactly `3^z` on NO inputs.
///
/// One facility per set, one point per element. An element sits at
/// distance 1 from sets containing it and 3 from the rest; all other pairs
/// are at distance 2. Every point forms its own unit-weight group, so the
/// per-group maximum is just the worst point's powered distance.
pub fn reduce_set_coverage(sc: &SetCoverageInstance, z: f64) -> Result<Instance, Error> {
    sc.validate()?;
    let n_e = sc.universe.len();
    let m = sc.sets.len();
    if m == 0 {
        return Err(Error::InvalidInstance("empty set collection".into()));
    }
    let masks = sc.membership();
    let n = n_e + m;
    let mut matrix = vec![vec![2.0; n]; n];
    for (a, row) in matrix.iter_mut().enumerate() {
        row[a] = 0.0;
    }
    for e in 0..n_e {
        for i in 0..m {
            let d = if masks[i] & (1 << e) != 0 { 1.0 } else { 3.0 };
            matrix[e][n_e + i] = d;
            matrix[n_e + i][e] = d;
        }
    }
    let groups = sc
        .universe
        .iter()
        .map(|e| (e.clone(), vec![e.clone()], vec![1.0]))
        .collect();
    Instance::new(
        sc.universe.clone(),
        (0..m).map(|i| padded("set", i, m)).collect(),
        MetricData::Matrix(matrix),
        groups,
        sc.k,
        z,
        MetricCheck::Validate,
    )
}

/// Replace the group structure with one singleton unit-weight group per
/// point; the fair cost then equals the worst single point's powered
/// distance, whatever the groups looked like before.
pub fn singleton_groups(inst: &Instance) -> Result<Instance, Error> {
    let groups = inst
        .point_ids()
        .iter()
        .map(|p| (p.clone(), vec![p.clone()], vec![1.0]))
        .collect();
    inst.with_groups(groups)
}

/// Generate a set-coverage question with a planted size-k cover (a random
/// partition of the universe, enriched with extra elements) plus random
/// decoy sets, shuffled together. With `plant_no`, one element is removed
/// from every planted set to break the witness. Either way `is_yes` is
/// ground-truthed by the exhaustive check, never assumed.
pub fn planted_set_coverage(
    universe_size: usize,
    m: usize,
    k: usize,
    plant_no: bool,
    seed: u64,
) -> Result<SetCoverageInstance, Error> {
    if universe_size == 0 || m == 0 || k == 0 || k > m {
        return Err(Error::InvalidParameter(format!(
            "bad planted-cover shape: |U| = {universe_size}, m = {m}, k = {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let universe: Vec<String> = (0..universe_size)
        .map(|i| padded("e", i, universe_size))
        .collect();

    let mut member = vec![vec![false; universe_size]; m];
    for e in 0..universe_size {
        member[rng.gen_range(0..k)][e] = true;
    }
    for planted in member.iter_mut().take(k) {
        for slot in planted.iter_mut() {
            if !*slot && rng.gen::<f64>() < ENRICH_P {
                *slot = true;
            }
        }
    }
    for decoy in member.iter_mut().skip(k) {
        for slot in decoy.iter_mut() {
            *slot = rng.gen::<f64>() < DECOY_P;
        }
    }
    if plant_no {
        let victim = rng.gen_range(0..universe_size);
        for planted in member.iter_mut().take(k) {
            planted[victim] = false;
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);

    let sets: Vec<Vec<String>> = order
        .iter()
        .map(|&i| {
            (0..universe_size)
                .filter(|&e| member[i][e])
                .map(|e| universe[e].clone())
                .collect()
        })
        .collect();
    let mut sc = SetCoverageInstance {
        universe,
        sets,
        k,
        is_yes: None,
    };
    sc.is_yes = Some(exhaustive_cover_check(&sc)?);
    Ok(sc)
}
