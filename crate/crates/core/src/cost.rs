//! Cost evaluation: powered distances, group costs, the min-max objective,
//! and Voronoi partitions.

use crate::error::Error;
use crate::instance::{CenterSet, Instance};

/// `d^z` with `0^z = 0`.
///
/// Integer exponents use repeated multiplication so that the small exact
/// cases (`3^1 = 3`, `3^2 = 9`) stay exact; other exponents go through the
/// usual `exp(z ln d)` path.
pub fn pow_z(d: f64, z: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else if z == 1.0 {
        d
    } else if z == 2.0 {
        d * d
    } else if z.fract() == 0.0 && z.abs() <= 64.0 {
        d.powi(z as i32)
    } else {
        d.powf(z)
    }
}

/// Nearest center to point `p` and its distance.
///
/// Centers are scanned in canonical (id) order, so distance ties resolve to
/// the facility with the smaller id.
pub fn nearest_center(inst: &Instance, centers: &CenterSet, p: usize) -> (usize, f64) {
    let mut best = centers.indices()[0];
    let mut best_d = inst.dist_pf(best, p);
    for &f in &centers.indices()[1..] {
        let d = inst.dist_pf(f, p);
        if d < best_d {
            best = f;
            best_d = d;
        }
    }
    (best, best_d)
}

/// Weighted powered cost of serving `members` (point indices with aligned
/// weights) from the nearest centers in `C`.
pub fn cluster_cost(
    inst: &Instance,
    centers: &CenterSet,
    members: &[usize],
    weights: &[f64],
) -> Result<f64, Error> {
    if centers.is_empty() {
        return Err(Error::EmptyCenterSet);
    }
    if members.len() != weights.len() {
        return Err(Error::InvalidParameter(format!(
            "{} members but {} weights",
            members.len(),
            weights.len()
        )));
    }
    let mut total = 0.0;
    for (&p, &w) in members.iter().zip(weights) {
        if p >= inst.n_points() {
            return Err(Error::InvalidParameter(format!(
                "point index {p} out of range (instance has {})",
                inst.n_points()
            )));
        }
        let (_, d) = nearest_center(inst, centers, p);
        total += pow_z(d, inst.z()) * w;
    }
    Ok(total)
}

pub fn group_cost(inst: &Instance, centers: &CenterSet, group: usize) -> Result<f64, Error> {
    let g = &inst.groups()[group];
    cluster_cost(inst, centers, &g.members, &g.weights)
}

/// The min-max objective and its per-group breakdown.
#[derive(Clone, Debug, PartialEq)]
pub struct FairCost {
    pub max: f64,
    pub per_group: Vec<f64>,
    /// Index of the most expensive group; ties go to the lowest index.
    pub argmax_group: usize,
}

pub fn fair_cost(inst: &Instance, centers: &CenterSet) -> Result<FairCost, Error> {
    let mut per_group = Vec::with_capacity(inst.n_groups());
    let mut max = f64::NEG_INFINITY;
    let mut argmax = 0;
    for j in 0..inst.n_groups() {
        let c = group_cost(inst, centers, j)?;
        if c > max {
            max = c;
            argmax = j;
        }
        per_group.push(c);
    }
    Ok(FairCost {
        max,
        per_group,
        argmax_group: argmax,
    })
}

/// Sum of all group costs: the classic (group-blind) clustering objective
/// over the same weighted occurrences.
pub fn unconstrained_cost(inst: &Instance, centers: &CenterSet) -> Result<f64, Error> {
    let mut total = 0.0;
    for j in 0..inst.n_groups() {
        total += group_cost(inst, centers, j)?;
    }
    Ok(total)
}

/// Assignment of every point to its nearest center, with per-occurrence cost
/// contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// Per point: (nearest facility, distance).
    pub nearest: Vec<(usize, f64)>,
    /// Per group, per member occurrence: `d^z * w` under `nearest`.
    pub member_costs: Vec<Vec<f64>>,
    /// Per group total; sums `member_costs` in member order.
    pub group_costs: Vec<f64>,
}

pub fn voronoi_partition(inst: &Instance, centers: &CenterSet) -> Result<Assignment, Error> {
    if centers.is_empty() {
        return Err(Error::EmptyCenterSet);
    }
    let nearest: Vec<(usize, f64)> = (0..inst.n_points())
        .map(|p| nearest_center(inst, centers, p))
        .collect();
    let mut member_costs = Vec::with_capacity(inst.n_groups());
    let mut group_costs = Vec::with_capacity(inst.n_groups());
    for g in inst.groups() {
        let costs: Vec<f64> = g
            .members
            .iter()
            .zip(&g.weights)
            .map(|(&p, &w)| pow_z(nearest[p].1, inst.z()) * w)
            .collect();
        group_costs.push(costs.iter().sum());
        member_costs.push(costs);
    }
    Ok(Assignment {
        nearest,
        member_costs,
        group_costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{MetricCheck, MetricData};

    /// Test-local reference evaluator: plain double loop over members and
    /// centers, `powf` powers, no shared code with the library path.
    fn naive_weighted_cost(
        inst: &Instance,
        centers: &[usize],
        members: &[usize],
        weights: &[f64],
        z: f64,
    ) -> f64 {
        let mut total = 0.0;
        for (i, &p) in members.iter().enumerate() {
            let mut d = f64::INFINITY;
            for &f in centers {
                let cand = inst.dist_pf(f, p);
                if cand < d {
                    d = cand;
                }
            }
            let powered = if d == 0.0 { 0.0 } else { d.powf(z) };
            total += powered * weights[i];
        }
        total
    }

    fn instance_from_matrix(
        n_p: usize,
        n_f: usize,
        m: Vec<Vec<f64>>,
        groups: Vec<(String, Vec<String>, Vec<f64>)>,
        k: usize,
        z: f64,
    ) -> Instance {
        let points = (0..n_p).map(|i| format!("p{i}")).collect();
        let facilities = (0..n_f).map(|i| format!("f{i}")).collect();
        Instance::new(
            points,
            facilities,
            MetricData::Matrix(m),
            groups,
            k,
            z,
            MetricCheck::Skip,
        )
        .unwrap()
    }

    /// Deterministic pseudo-random matrix with exact triangle-safe entries:
    /// d(a,b) = 1 + ((a*31 + b*17) mod 7) / 10, symmetrized.
    fn pseudo_matrix(n: usize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let d = 1.0 + ((a * 31 + b * 17) % 7) as f64 / 10.0;
                m[a][b] = d;
                m[b][a] = d;
            }
        }
        m
    }

    #[test]
    fn pow_z_handles_zero_and_integer_exponents_exactly() {
        assert_eq!(pow_z(0.0, 1.0), 0.0);
        assert_eq!(pow_z(0.0, 2.5), 0.0);
        assert_eq!(pow_z(3.0, 1.0), 3.0);
        assert_eq!(pow_z(3.0, 2.0), 9.0);
        assert_eq!(pow_z(2.0, 3.0), 8.0);
        let frac = pow_z(2.0, 1.5);
        assert!((frac - 2.0f64.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn cluster_cost_matches_independent_double_loop() {
        // 6 points, 3 facilities, |C| = 2, z = 1.
        let inst = instance_from_matrix(
            6,
            3,
            pseudo_matrix(9),
            vec![(
                "g0".into(),
                (0..6).map(|i| format!("p{i}")).collect(),
                vec![1.0, 0.5, 2.0, 1.25, 3.0, 0.75],
            )],
            2,
            1.0,
        );
        let centers = CenterSet::new(&inst, [0, 2]).unwrap();
        let got = cluster_cost(
            &inst,
            &centers,
            &inst.groups()[0].members,
            &inst.groups()[0].weights,
        )
        .unwrap();
        let want = naive_weighted_cost(
            &inst,
            &[0, 2],
            &inst.groups()[0].members,
            &inst.groups()[0].weights,
            1.0,
        );
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        // Frozen value for this fixture, computed with the evaluator above.
        assert!((got - 10.425).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn empty_center_set_is_an_error() {
        let inst = crate::instance::tests::matrix_instance();
        let centers = CenterSet::new(&inst, [0]).unwrap();
        assert!(cluster_cost(&inst, &centers, &[0], &[1.0, 2.0]).is_err());
        assert!(cluster_cost(&inst, &centers, &[99], &[1.0]).is_err());
    }

    #[test]
    fn fair_cost_reports_max_group_and_breakdown() {
        // Two groups engineered to cost exactly 4.0 and 7.5 under {f0}:
        // g0 = one point at distance 2 with weight 2, g1 = one point at
        // distance 3 with weight 2.5, z = 1.
        let m = vec![
            vec![0.0, 5.0, 2.0],
            vec![5.0, 0.0, 3.0],
            vec![2.0, 3.0, 0.0],
        ];
        let inst = instance_from_matrix(
            2,
            1,
            m,
            vec![
                ("g0".into(), vec!["p0".into()], vec![2.0]),
                ("g1".into(), vec!["p1".into()], vec![2.5]),
            ],
            1,
            1.0,
        );
        let centers = CenterSet::new(&inst, [0]).unwrap();
        let fc = fair_cost(&inst, &centers).unwrap();
        assert_eq!(fc.per_group, vec![4.0, 7.5]);
        assert_eq!(fc.max, 7.5);
        assert_eq!(fc.argmax_group, 1);
    }

    #[test]
    fn fair_cost_breaks_ties_toward_lower_group_index() {
        let m = vec![
            vec![0.0, 4.0, 2.0],
            vec![4.0, 0.0, 2.0],
            vec![2.0, 2.0, 0.0],
        ];
        let inst = instance_from_matrix(
            2,
            1,
            m,
            vec![
                ("g0".into(), vec!["p0".into()], vec![1.0]),
                ("g1".into(), vec!["p1".into()], vec![1.0]),
            ],
            1,
            1.0,
        );
        let centers = CenterSet::new(&inst, [0]).unwrap();
        let fc = fair_cost(&inst, &centers).unwrap();
        assert_eq!(fc.per_group, vec![2.0, 2.0]);
        assert_eq!(fc.argmax_group, 0);
    }

    #[test]
    fn voronoi_matches_exhaustive_argmin_and_sums_to_cluster_cost() {
        // 8 points, 3 facilities, |C| = 3.
        let inst = instance_from_matrix(
            8,
            3,
            pseudo_matrix(11),
            vec![
                (
                    "g0".into(),
                    (0..4).map(|i| format!("p{i}")).collect(),
                    vec![1.0, 2.0, 0.5, 1.0],
                ),
                (
                    "g1".into(),
                    (4..8).map(|i| format!("p{i}")).collect(),
                    vec![2.0, 1.0, 1.0, 3.0],
                ),
            ],
            3,
            2.0,
        );
        let centers = CenterSet::new(&inst, [0, 1, 2]).unwrap();
        let a = voronoi_partition(&inst, &centers).unwrap();
        assert_eq!(a.nearest.len(), 8);
        for p in 0..8 {
            // Independent argmin over all centers.
            let best = (0..3)
                .map(|f| (inst.dist_pf(f, p), f))
                .fold((f64::INFINITY, usize::MAX), |acc, (d, f)| {
                    if d < acc.0 {
                        (d, f)
                    } else {
                        acc
                    }
                });
            assert_eq!(a.nearest[p].1, best.0);
        }
        for j in 0..2 {
            let direct = group_cost(&inst, &centers, j).unwrap();
            assert_eq!(a.group_costs[j], direct);
            let sum: f64 = a.member_costs[j].iter().sum();
            assert_eq!(sum, a.group_costs[j]);
        }
    }

    #[test]
    fn voronoi_ties_go_to_the_lexicographically_smaller_facility_id() {
        // p equidistant (d = 2) from both facilities; declared order is
        // fB, fA so the tie must pick fA by id, not index.
        let m = vec![
            vec![0.0, 2.0, 2.0],
            vec![2.0, 0.0, 4.0],
            vec![2.0, 4.0, 0.0],
        ];
        let inst = Instance::new(
            vec!["p".into()],
            vec!["fB".into(), "fA".into()],
            MetricData::Matrix(m),
            vec![("g".into(), vec!["p".into()], vec![1.0])],
            1,
            1.0,
            MetricCheck::Skip,
        )
        .unwrap();
        let centers = CenterSet::new(&inst, [0, 1]).unwrap();
        let a = voronoi_partition(&inst, &centers).unwrap();
        assert_eq!(inst.facility_id(a.nearest[0].0), "fA");
    }

    #[test]
    fn split_preserves_fair_cost_for_random_center_sets() {
        // ~30% of points shared between groups.
        let inst = instance_from_matrix(
            10,
            4,
            pseudo_matrix(14),
            vec![
                (
                    "g0".into(),
                    (0..6).map(|i| format!("p{i}")).collect(),
                    vec![1.0, 2.0, 0.5, 1.0, 1.5, 1.0],
                ),
                (
                    "g1".into(),
                    (3..10).map(|i| format!("p{i}")).collect(),
                    vec![2.0, 1.0, 1.0, 3.0, 0.5, 1.0, 2.5],
                ),
            ],
            2,
            2.0,
        );
        let split = crate::instance::split_overlapping_groups(&inst);
        assert!(split.groups_disjoint());
        let sets: [&[usize]; 5] = [&[0], &[1, 3], &[0, 2], &[2, 3], &[0, 1, 2, 3]];
        for ids in sets {
            let c1 = CenterSet::new(&inst, ids.iter().copied()).unwrap();
            let c2 = CenterSet::new(&split, ids.iter().copied()).unwrap();
            let f1 = fair_cost(&inst, &c1).unwrap();
            let f2 = fair_cost(&split, &c2).unwrap();
            for j in 0..2 {
                let rel = (f1.per_group[j] - f2.per_group[j]).abs()
                    / f1.per_group[j].abs().max(1.0);
                assert!(rel <= 1e-12, "group {j}: {f1:?} vs {f2:?}");
            }
            assert_eq!(f1.max, f2.max);
        }
    }

    #[test]
    fn monotone_under_center_set_growth() {
        let inst = crate::instance::tests::matrix_instance();
        let small = CenterSet::new(&inst, [0]).unwrap();
        let large = CenterSet::new(&inst, [0, 1]).unwrap();
        let fs = fair_cost(&inst, &small).unwrap().max;
        let fl = fair_cost(&inst, &large).unwrap().max;
        assert!(fl <= fs * (1.0 + 1e-9));
    }
}
