//! Exhaustive reference solvers: scan every k-subset of facilities.
//!
//! Exponential by design. Callers pass an enumeration cap and get a
//! resource error back when the subset count would blow past it, so a typo
//! in `k` cannot wedge the process.

use crate::cost::{fair_cost, unconstrained_cost};
use crate::error::Error;
use crate::instance::{CenterSet, Instance};
use crate::subsets::{binomial, min_scan};

pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub centers: CenterSet,
    pub cost: f64,
    pub subsets_scanned: u64,
}

fn guard(inst: &Instance, k: usize, cap: u64) -> Result<(), Error> {
    if k == 0 || k > inst.n_facilities() {
        return Err(Error::InvalidParameter(format!(
            "cannot place {k} centers among {} facilities",
            inst.n_facilities()
        )));
    }
    match binomial(inst.n_facilities(), k) {
        Some(total) if total <= cap => Ok(()),
        Some(total) => Err(Error::CapExceeded {
            what: "exhaustive center search",
            required: total.to_string(),
            cap,
        }),
        None => Err(Error::CapExceeded {
            what: "exhaustive center search",
            required: "more than 2^64".into(),
            cap,
        }),
    }
}

fn scan(
    inst: &Instance,
    k: usize,
    cap: u64,
    workers: usize,
    score: impl Fn(&CenterSet) -> f64 + Sync,
) -> Result<OracleResult, Error> {
    guard(inst, k, cap)?;
    let order = inst.facilities_by_rank();
    // Combinations are over rank positions, so ties in `min_scan` resolve
    // to the id-lexicographically smallest subset.
    let (combo, cost, scanned) = min_scan(inst.n_facilities(), k, workers, |positions| {
        let centers = CenterSet::new(inst, positions.iter().map(|&i| order[i]))
            .expect("positions map to valid facilities");
        score(&centers)
    });
    let centers = CenterSet::new(inst, combo.iter().map(|&i| order[i]))?;
    Ok(OracleResult {
        centers,
        cost,
        subsets_scanned: scanned,
    })
}

/// Minimize the per-group maximum over all k-subsets.
pub fn brute_force_fair(
    inst: &Instance,
    k: usize,
    cap: u64,
    workers: usize,
) -> Result<OracleResult, Error> {
    scan(inst, k, cap, workers, |c| {
        fair_cost(inst, c).expect("nonempty center set").max
    })
}

/// Minimize the weight-summed objective over all k-subsets.
pub fn brute_force_unconstrained(
    inst: &Instance,
    k: usize,
    cap: u64,
    workers: usize,
) -> Result<OracleResult, Error> {
    scan(inst, k, cap, workers, |c| {
        unconstrained_cost(inst, c).expect("nonempty center set")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{MetricCheck, MetricData};
    use crate::subsets::next_combination;

    fn line(points: &[(f64, &str, f64)], facilities: &[f64], k: usize) -> Instance {
        // points: (position, group, weight)
        let pos: Vec<f64> = points
            .iter()
            .map(|&(x, _, _)| x)
            .chain(facilities.iter().copied())
            .collect();
        let n = pos.len();
        let mut m = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                m[a][b] = (pos[a] - pos[b]).abs();
            }
        }
        let mut groups: Vec<(String, Vec<String>, Vec<f64>)> = Vec::new();
        for (i, &(_, g, w)) in points.iter().enumerate() {
            match groups.iter_mut().find(|(name, _, _)| name == g) {
                Some((_, members, weights)) => {
                    members.push(format!("p{i}"));
                    weights.push(w);
                }
                None => groups.push((g.into(), vec![format!("p{i}")], vec![w])),
            }
        }
        Instance::new(
            (0..points.len()).map(|i| format!("p{i}")).collect(),
            (0..facilities.len()).map(|i| format!("f{i}")).collect(),
            MetricData::Matrix(m),
            groups,
            k,
            1.0,
            MetricCheck::Validate,
        )
        .unwrap()
    }

    #[test]
    fn fair_and_unconstrained_optima_can_differ() {
        // One heavy point at 0, one light at 10, facilities at 0 and 4.
        // Summed: f0 costs 10, f1 costs 8 + 6 = 14. Maximum: f0 gives 10,
        // f1 gives max(8, 6) = 8.
        let inst = line(&[(0.0, "a", 2.0), (10.0, "b", 1.0)], &[0.0, 4.0], 1);
        let unc = brute_force_unconstrained(&inst, 1, 100, 1).unwrap();
        assert_eq!(unc.centers.ids(&inst), vec!["f0"]);
        assert!((unc.cost - 10.0).abs() < 1e-12);
        let fair = brute_force_fair(&inst, 1, 100, 1).unwrap();
        assert_eq!(fair.centers.ids(&inst), vec!["f1"]);
        assert!((fair.cost - 8.0).abs() < 1e-12);
        assert_eq!(fair.subsets_scanned, 2);
    }

    #[test]
    fn agrees_with_plain_combination_loop() {
        let inst = line(
            &[
                (0.0, "a", 1.0),
                (1.5, "a", 2.0),
                (3.0, "b", 1.0),
                (7.0, "b", 0.5),
                (9.0, "c", 1.5),
            ],
            &[0.5, 2.0, 4.0, 6.5, 8.0, 9.5],
            3,
        );
        // Reference scan written against next_combination directly.
        let mut combo: Vec<usize> = (0..3).collect();
        let mut best_cost = f64::INFINITY;
        let mut best: Vec<usize> = combo.clone();
        loop {
            let centers = CenterSet::new(&inst, combo.iter().copied()).unwrap();
            let c = fair_cost(&inst, &centers).unwrap().max;
            if c < best_cost {
                best_cost = c;
                best = combo.clone();
            }
            if !next_combination(&mut combo, 6) {
                break;
            }
        }
        let got = brute_force_fair(&inst, 3, 1000, 1).unwrap();
        assert_eq!(got.centers, CenterSet::new(&inst, best).unwrap());
        assert_eq!(got.cost, best_cost);
        assert_eq!(got.subsets_scanned, 20);
    }

    #[test]
    fn worker_count_does_not_change_the_answer() {
        let inst = line(
            &[
                (0.0, "a", 1.0),
                (2.0, "a", 1.0),
                (5.0, "b", 2.0),
                (8.0, "b", 1.0),
            ],
            &[0.0, 1.0, 3.0, 5.0, 7.0, 9.0],
            2,
        );
        let one = brute_force_fair(&inst, 2, 1000, 1).unwrap();
        for workers in [2, 3, 8] {
            let w = brute_force_fair(&inst, 2, 1000, workers).unwrap();
            assert_eq!(w.centers, one.centers);
            assert_eq!(w.cost.to_bits(), one.cost.to_bits());
        }
    }

    #[test]
    fn cap_is_enforced() {
        let inst = line(
            &[(0.0, "a", 1.0)],
            &[0.0, 1.0, 2.0, 3.0, 4.0],
            2,
        );
        match brute_force_fair(&inst, 2, 5, 1) {
            Err(Error::CapExceeded { required, cap, .. }) => {
                assert_eq!(required, "10");
                assert_eq!(cap, 5);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
        assert!(brute_force_fair(&inst, 2, 10, 1).is_ok());
    }

    #[test]
    fn full_set_is_the_only_candidate_at_k_equals_m() {
        let inst = line(&[(0.0, "a", 1.0), (4.0, "b", 1.0)], &[1.0, 3.0], 2);
        let got = brute_force_fair(&inst, 2, 10, 1).unwrap();
        assert_eq!(got.subsets_scanned, 1);
        assert_eq!(got.centers.ids(&inst), vec!["f0", "f1"]);
    }
}
