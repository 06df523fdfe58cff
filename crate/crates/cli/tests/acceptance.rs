//! Acceptance gate: ten end-to-end criteria, one test per criterion. Each
//! test finishes by printing a single verdict line (visible with
//! `--nocapture`); an assertion failure is the FAIL verdict. Every
//! tolerance and trial count is pinned in the constants below, and every
//! random input is seeded, so the gate is deterministic.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use fairclust_core::baseline::{self, local_search_factor};
use fairclust_core::cost::{fair_cost, group_cost, nearest_center, pow_z, voronoi_partition};
use fairclust_core::generators::{
    exhaustive_cover_check, planted_set_coverage, random_euclidean, reduce_set_coverage,
};
use fairclust_core::instance::split_overlapping_groups;
use fairclust_core::lp::{build_model, solve_model, FractionalSolution};
use fairclust_core::metric::validate_metric;
use fairclust_core::oracle::{brute_force_fair, brute_force_unconstrained};
use fairclust_core::rounding::{amplify, estimate_group_expectation, survival_statistics};
use fairclust_core::solver::{self, subset_search, SolveOptions};
use fairclust_core::{CenterSet, Instance, MetricCheck, MetricData};

/// Relative slack for inequalities between exactly-defined quantities.
const REL_TOL: f64 = 1e-6;
/// Accuracy knob used throughout; the end-to-end target is 3^z + 0.5.
const EPSILON: f64 = 0.5;
const RATIO_Z1: f64 = 3.5;
const RATIO_Z2: f64 = 9.5;
/// Per-instance solver seeds and the success rate they must reach.
const SOLVE_SEEDS: u64 = 20;
const MIN_SUCCESS: f64 = 0.9;
/// Oversized-set fair-cost target `1 + EPSILON` and its per-desk seeds.
const AMPLIFY_BOUND: f64 = 1.5;
const AMPLIFY_SEEDS: u64 = 200;
/// Monte Carlo volume and acceptance band for the statistical criteria.
const STAT_TRIALS: usize = 10_000;
const SIGMA_BAND: f64 = 3.0;
/// Randomized cases for the invariant sweep.
const PROPERTY_CASES: u64 = 1_000;

/// Fifty small instances with n_P <= 10, n_F <= 6, k <= 3 and at most
/// three groups, all shapes and seeds fixed.
fn suite() -> Vec<Instance> {
    (0..50usize)
        .map(|i| {
            let n_p = 4 + i % 7;
            let n_f = 3 + i % 4;
            let dim = 1 + i % 3;
            let n_groups = 1 + i % 3;
            let k = 1 + (i / 3) % 3;
            random_euclidean(n_p, n_f, dim, n_groups, k, 1.0, (0.5, 2.0), 40_000 + i as u64)
                .expect("suite instance")
        })
        .collect()
}

/// Five fixed desk instances for the statistical criteria, covering both
/// k = 2 and k = 3.
fn desk() -> Vec<Instance> {
    let shapes = [(8, 5, 2, 2), (9, 5, 3, 3), (7, 4, 2, 2), (10, 6, 3, 3), (8, 5, 1, 2)];
    shapes
        .iter()
        .enumerate()
        .map(|(i, &(n_p, n_f, n_groups, k))| {
            random_euclidean(n_p, n_f, 2, n_groups, k, 1.0, (0.5, 2.0), 90_100 + i as u64)
                .expect("desk instance")
        })
        .collect()
}

fn optimum(inst: &Instance) -> f64 {
    brute_force_fair(inst, inst.k(), u64::MAX, 1).expect("oracle").cost
}

fn relaxation(inst: &Instance) -> FractionalSolution {
    let model = build_model(inst).expect("model");
    solve_model(&model).expect("relaxation solves")
}

#[test]
fn c01_end_to_end_approximation_ratio() {
    let mut worst: Vec<(f64, u64)> = Vec::new();
    for (z, ratio) in [(1.0, RATIO_Z1), (2.0, RATIO_Z2)] {
        let mut worst_hits = SOLVE_SEEDS;
        for (i, base) in suite().iter().enumerate() {
            let inst = base.with_z(z).unwrap();
            let opt = optimum(&inst);
            let mut hits = 0;
            for seed in 0..SOLVE_SEEDS {
                let opts = SolveOptions {
                    epsilon: EPSILON,
                    seed,
                    oracle_cap: 0,
                    ..SolveOptions::default()
                };
                let solved = solver::solve(&inst, &opts).unwrap();
                if solved.report.fair_cost <= ratio * opt * (1.0 + REL_TOL) {
                    hits += 1;
                }
            }
            assert!(
                hits as f64 / SOLVE_SEEDS as f64 >= MIN_SUCCESS,
                "instance {i} at z={z}: only {hits}/{SOLVE_SEEDS} runs within {ratio}x"
            );
            worst_hits = worst_hits.min(hits);
        }
        worst.push((z, worst_hits));
    }
    println!(
        "criterion 01 approximation ratio: PASS \
         (worst instance {}/{SOLVE_SEEDS} within 3.5x at z=1, {}/{SOLVE_SEEDS} within 9.5x at z=2)",
        worst[0].1, worst[1].1
    );
}

#[test]
fn c02_relaxation_lower_bounds_optimum() {
    let mut checked = 0u32;
    let mut tightest = 0.0f64;
    for z in [1.0, 2.0] {
        for base in &suite() {
            let inst = base.with_z(z).unwrap();
            let frac = relaxation(&split_overlapping_groups(&inst));
            let opt = optimum(&inst);
            assert!(
                frac.gamma <= opt * (1.0 + REL_TOL),
                "z={z}: relaxation value {} exceeds optimum {opt}",
                frac.gamma
            );
            tightest = tightest.max(frac.gamma / opt);
            checked += 1;
        }
    }
    println!(
        "criterion 02 relaxation lower bound: PASS \
         ({checked}/{checked} instances, largest gamma*/OPT = {tightest:.6})"
    );
}

#[test]
fn c03_subset_bound_on_oversized_center_sets() {
    let mut trials = 0u32;
    let mut worst_slack = 0.0f64;
    for z in [1.0, 2.0] {
        for base in suite().iter().take(10) {
            let inst = base.with_z(z).unwrap();
            let opt = optimum(&inst);
            assert!(opt > 0.0);
            let factor = pow_z(3.0, z - 1.0);
            let mut check = |big: &CenterSet| {
                let alpha = fair_cost(&inst, big).unwrap().max / opt;
                let found = subset_search(&inst, big, inst.k(), u64::MAX, 1).unwrap();
                let bound = factor * (alpha + 2.0) * opt;
                assert!(
                    found.cost <= bound * (1.0 + REL_TOL),
                    "z={z}: best subset of alpha={alpha:.3} set costs {} > {bound}",
                    found.cost
                );
                worst_slack = worst_slack.max(found.cost / bound);
                trials += 1;
            };

            // The pipeline's own oversized set.
            let opts = SolveOptions {
                epsilon: EPSILON,
                seed: 1,
                oracle_cap: 0,
                ..SolveOptions::default()
            };
            let solved = solver::solve(&inst, &opts).unwrap();
            let own = CenterSet::new(&inst, solved.amplified.centers.indices().iter().copied())
                .unwrap();
            check(&own);

            // Deliberately inflated sets: every facility subset of size
            // >= k, which includes arbitrarily bad alphas.
            let m = inst.n_facilities();
            for mask in 1u32..(1 << m) {
                if (mask.count_ones() as usize) < inst.k() {
                    continue;
                }
                let set = (0..m).filter(|f| mask >> f & 1 == 1);
                check(&CenterSet::new(&inst, set).unwrap());
            }
        }
    }
    println!(
        "criterion 03 oversized-set subset bound: PASS \
         ({trials} sets, worst cost/bound = {worst_slack:.3})"
    );
}

#[test]
fn c04_amplified_sets_reach_near_optimal_fair_cost() {
    let mut worst_hits = AMPLIFY_SEEDS;
    for (i, inst) in desk().iter().enumerate() {
        let opt = optimum(inst);
        let split = split_overlapping_groups(inst);
        let frac = relaxation(&split);
        let mut hits = 0;
        for seed in 0..AMPLIFY_SEEDS {
            let amp = amplify(&split, &frac, EPSILON, seed, 1).unwrap();
            let centers = CenterSet::new(inst, amp.centers.indices().iter().copied()).unwrap();
            if fair_cost(inst, &centers).unwrap().max <= AMPLIFY_BOUND * opt * (1.0 + REL_TOL) {
                hits += 1;
            }
        }
        assert!(
            hits as f64 / AMPLIFY_SEEDS as f64 >= MIN_SUCCESS,
            "desk {i}: only {hits}/{AMPLIFY_SEEDS} amplified sets within {AMPLIFY_BOUND}x"
        );
        worst_hits = worst_hits.min(hits);
    }
    println!(
        "criterion 04 amplified fair cost: PASS \
         (worst desk instance {worst_hits}/{AMPLIFY_SEEDS} within {AMPLIFY_BOUND}x)"
    );
}

#[test]
fn c05_single_round_expected_group_cost() {
    let mut worst_margin = f64::NEG_INFINITY;
    for (i, inst) in desk().iter().enumerate() {
        let opt = optimum(inst);
        let split = split_overlapping_groups(inst);
        let frac = relaxation(&split);
        let est =
            estimate_group_expectation(&split, &frac, EPSILON, STAT_TRIALS, 424_242, 1).unwrap();
        for (j, (&mean, &se)) in est.mean.iter().zip(&est.stderr).enumerate() {
            let bound = (1.0 + EPSILON / 2.0) * opt + SIGMA_BAND * se;
            assert!(
                mean <= bound,
                "desk {i} group {j}: mean {mean} above {bound} ({STAT_TRIALS} trials)"
            );
            worst_margin = worst_margin.max(mean - bound);
        }
    }
    println!(
        "criterion 05 expected group cost: PASS \
         ({STAT_TRIALS} trials/desk, worst mean-bound margin = {worst_margin:.3e})"
    );
}

#[test]
fn c06_assignment_survival_geometry() {
    let mut ks = BTreeSet::new();
    let mut worst = 0.0f64;
    for inst in &desk() {
        let split = split_overlapping_groups(inst);
        let frac = relaxation(&split);
        let stats =
            survival_statistics(&split, &frac, EPSILON, &[1, 2, 5], STAT_TRIALS, 515_151).unwrap();
        let sigma = stats.worst_sigma();
        assert!(
            sigma <= SIGMA_BAND,
            "k={}: survival off by {sigma:.2} standard errors",
            inst.k()
        );
        worst = worst.max(sigma);
        ks.insert(inst.k());
    }
    assert!(ks.contains(&2) && ks.contains(&3), "need both k=2 and k=3 desks");
    println!(
        "criterion 06 survival geometry: PASS \
         (k in {{2,3}}, {STAT_TRIALS} trials, worst deviation {worst:.2} sigma)"
    );
}

#[test]
fn c07_coverage_reduction_gap() {
    let shapes = [(6, 7, 3), (8, 8, 3), (5, 5, 2), (7, 6, 3), (4, 8, 2)];
    let mut yes = 0u32;
    let mut no = 0u32;
    let mut made = 0u64;
    for &(universe, m, k) in &shapes {
        for _ in 0..4 {
            let sc = planted_set_coverage(universe, m, k, made % 2 == 1, 70_000 + made).unwrap();
            let covered = exhaustive_cover_check(&sc).unwrap();
            assert_eq!(sc.is_yes, Some(covered));
            if covered {
                yes += 1;
            } else {
                no += 1;
            }
            for z in [1.0, 2.0] {
                let inst = reduce_set_coverage(&sc, z).unwrap();
                let opt = optimum(&inst);
                let want = if covered { 1.0 } else { pow_z(3.0, z) };
                assert!(
                    opt == want,
                    "universe {universe}, m {m}, k {k}, z {z}: optimum {opt}, expected {want}"
                );
            }
            made += 1;
        }
    }
    assert!(yes > 0 && no > 0, "suite must exercise both answers ({yes} yes, {no} no)");
    println!(
        "criterion 07 coverage reduction gap: PASS \
         ({yes} covered / {no} uncovered, exact optima at z=1 and z=2)"
    );
}

#[test]
fn c08_baseline_group_count_bounds() {
    let mut checked = 0u32;
    for z in [1.0, 2.0] {
        for base in &suite() {
            let inst = base.with_z(z).unwrap();
            let groups = inst.n_groups() as f64;
            let opt = optimum(&inst);
            let opt_u = brute_force_unconstrained(&inst, inst.k(), u64::MAX, 1)
                .unwrap()
                .cost;
            assert!(
                opt_u <= groups * opt * (1.0 + REL_TOL),
                "z={z}: unconstrained optimum {opt_u} above {groups}x fair optimum {opt}"
            );
            let bl = baseline::solve(&inst).unwrap();
            let bound = local_search_factor(z) * groups * opt;
            assert!(
                bl.fair.max <= bound * (1.0 + REL_TOL),
                "z={z}: baseline fair cost {} above {bound}",
                bl.fair.max
            );
            checked += 1;
        }
    }
    println!("criterion 08 baseline group-count bounds: PASS ({checked}/{checked} instances)");
}

#[test]
fn c09_randomized_invariant_sweep() {
    for case in 0..PROPERTY_CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000_000 + case);
        let n_p = rng.gen_range(2..=8);
        let n_f = rng.gen_range(2..=5);
        let dim = rng.gen_range(1..=3);
        let n_groups = rng.gen_range(1..=n_p.min(3));
        let k = rng.gen_range(1..=n_f.min(3));
        let z = if rng.gen() { 1.0 } else { 2.0 };
        let inst =
            random_euclidean(n_p, n_f, dim, n_groups, k, z, (0.5, 2.0), rng.gen()).unwrap();

        // Metric axioms hold on everything the generator emits.
        assert!(validate_metric(&inst).is_clean(), "case {case}: dirty metric");

        // Powered distances detour through a point-facility-point chain at
        // the cost of one 3^(z-1) factor.
        let three = pow_z(3.0, z - 1.0);
        for _ in 0..5 {
            let p = rng.gen_range(0..n_p);
            let q = rng.gen_range(0..n_p);
            let f = rng.gen_range(0..n_f);
            let g = rng.gen_range(0..n_f);
            let direct = pow_z(inst.dist_pf(g, p), z);
            let legs = pow_z(inst.dist_pf(f, p), z)
                + pow_z(inst.dist_pf(f, q), z)
                + pow_z(inst.dist_pf(g, q), z);
            assert!(
                direct <= three * legs * (1.0 + REL_TOL) + 1e-12,
                "case {case}: chain inequality violated"
            );
        }

        // Adding a center never hurts any group.
        let mut all: Vec<usize> = (0..n_f).collect();
        for i in (1..all.len()).rev() {
            all.swap(i, rng.gen_range(0..=i));
        }
        let size = rng.gen_range(1..n_f);
        let smaller = CenterSet::new(&inst, all[..size].iter().copied()).unwrap();
        let larger = CenterSet::new(&inst, all[..size + 1].iter().copied()).unwrap();
        let small_fc = fair_cost(&inst, &smaller).unwrap();
        let large_fc = fair_cost(&inst, &larger).unwrap();
        assert!(
            large_fc.max <= small_fc.max * (1.0 + 1e-12),
            "case {case}: extra center raised the fair cost"
        );

        // Scaling every distance by lambda scales costs by lambda^z and
        // cannot move a strictly unique argmax group.
        let lambda = if rng.gen() { 0.25 } else { 4.0 };
        let n = inst.n_elements();
        let scaled_matrix: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|b| lambda * inst.dist_elements(a, b)).collect())
            .collect();
        let group_defs = group_defs_of(&inst);
        let scaled = Instance::new(
            inst.point_ids().to_vec(),
            inst.facility_ids().to_vec(),
            MetricData::Matrix(scaled_matrix),
            group_defs,
            inst.k(),
            z,
            MetricCheck::Skip,
        )
        .unwrap();
        let scaled_fc = fair_cost(&scaled, &CenterSet::new(&scaled, smaller.indices().iter().copied()).unwrap()).unwrap();
        let want = pow_z(lambda, z) * small_fc.max;
        assert!(
            (scaled_fc.max - want).abs() <= want.abs() * 1e-9 + 1e-12,
            "case {case}: scaling broke equivariance"
        );
        let unique = small_fc
            .per_group
            .iter()
            .enumerate()
            .all(|(j, &c)| j == small_fc.argmax_group || c < small_fc.max * (1.0 - REL_TOL));
        if unique {
            assert_eq!(
                scaled_fc.argmax_group, small_fc.argmax_group,
                "case {case}: scaling moved a strictly unique argmax group"
            );
        }

        // Splitting overlapping groups changes no group's cost.
        let mut overlaid_defs = group_defs_of(&inst);
        overlaid_defs.push((
            "everyone".into(),
            inst.point_ids().to_vec(),
            vec![1.0; n_p],
        ));
        let overlaid = inst.with_groups(overlaid_defs).unwrap();
        let split = split_overlapping_groups(&overlaid);
        let centers_ov = CenterSet::new(&overlaid, smaller.indices().iter().copied()).unwrap();
        let centers_sp = CenterSet::new(&split, smaller.indices().iter().copied()).unwrap();
        for j in 0..overlaid.n_groups() {
            let a = group_cost(&overlaid, &centers_ov, j).unwrap();
            let b = group_cost(&split, &centers_sp, j).unwrap();
            assert!(
                (a - b).abs() <= a.abs() * 1e-12 + 1e-12,
                "case {case} group {j}: split changed the cost"
            );
        }

        // Assignment agrees with a direct scan, ties to the id-smallest
        // facility.
        let assign = voronoi_partition(&inst, &smaller).unwrap();
        for p in 0..n_p {
            let best = smaller
                .indices()
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    inst.dist_pf(a, p)
                        .partial_cmp(&inst.dist_pf(b, p))
                        .unwrap()
                        .then(inst.facility_rank(a).cmp(&inst.facility_rank(b)))
                })
                .unwrap();
            assert_eq!(assign.nearest[p].0, best, "case {case} point {p}");
            assert_eq!(assign.nearest[p], nearest_center(&inst, &smaller, p));
        }
    }
    println!("criterion 09 randomized invariant sweep: PASS ({PROPERTY_CASES} cases, 6 properties)");
}

fn group_defs_of(inst: &Instance) -> Vec<(String, Vec<String>, Vec<f64>)> {
    inst.groups()
        .iter()
        .map(|g| {
            (
                g.name.clone(),
                g.members.iter().map(|&p| inst.point_id(p).to_string()).collect(),
                g.weights.clone(),
            )
        })
        .collect()
}

/// Report text minus the timing block.
fn stripped(raw: &[u8]) -> String {
    let mut v: Value = serde_json::from_slice(raw).expect("report parses");
    if let Some(map) = v.as_object_mut() {
        map.remove("wall_times");
    }
    v.to_string()
}

fn run_ok(args: &[String]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_fairclust"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "`{}` failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

#[test]
fn c10_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let sc = dir.path().join("cover.json");
    std::fs::write(
        &sc,
        r#"{"universe": ["a", "b", "c", "d"], "sets": [["a", "b"], ["c"], ["b", "d"], ["a"]], "k": 3}"#,
    )
    .unwrap();
    let seed_gen: Vec<String> = [
        "gen", "euclidean", "--points", "8", "--facilities", "5", "--groups", "3", "--k", "2",
        "--seed", "21",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut gen_out = seed_gen.clone();
    gen_out.extend(["--out".into(), inst.to_str().unwrap().to_string()]);
    run_ok(&gen_out);

    let file = |p: &Path| p.to_str().unwrap().to_string();
    let cases: Vec<(&str, Vec<String>)> = vec![
        ("gen euclidean", seed_gen),
        (
            "gen setcover-reduce",
            vec!["gen".into(), "setcover-reduce".into(), "--instance".into(), file(&sc)],
        ),
        (
            "gen singleton",
            vec!["gen".into(), "singleton".into(), "--instance".into(), file(&inst)],
        ),
        ("validate", vec!["validate".into(), "--instance".into(), file(&inst)]),
        ("baseline", vec!["baseline".into(), "--instance".into(), file(&inst)]),
        ("oracle", vec!["oracle".into(), "--instance".into(), file(&inst)]),
        (
            "solve",
            vec![
                "solve".into(),
                "--instance".into(),
                file(&inst),
                "--epsilon".into(),
                "0.5".into(),
                "--seed".into(),
                "3".into(),
            ],
        ),
        (
            "bicriteria",
            vec![
                "bicriteria".into(),
                "--instance".into(),
                file(&inst),
                "--epsilon".into(),
                "0.5".into(),
                "--seed".into(),
                "3".into(),
            ],
        ),
        (
            "stats",
            vec![
                "stats".into(),
                "--instance".into(),
                file(&inst),
                "--trials".into(),
                "600".into(),
                "--seed".into(),
                "2".into(),
            ],
        ),
    ];

    let mut commands = 0;
    for (name, args) in &cases {
        let mut outputs = Vec::new();
        for workers in ["1", "4"] {
            let mut full = args.clone();
            full.extend(["--workers".into(), workers.to_string()]);
            for _ in 0..2 {
                outputs.push(stripped(&run_ok(&full)));
            }
        }
        for other in &outputs[1..] {
            assert_eq!(&outputs[0], other, "command `{name}` is not byte-stable");
        }
        commands += 1;
    }
    println!(
        "criterion 10 report determinism: PASS \
         ({commands} commands x 2 repeats x workers in {{1,4}})"
    );
}
