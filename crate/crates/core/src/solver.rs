//! The end-to-end solver: relaxation, amplified rounding, and the final
//! subset search that brings the center count back down to k.
//!
//! The search leans on a structural fact: inside any center set whose fair
//! cost is within a factor alpha of optimal, some k-subset is within
//! `3^(z-1) * (alpha + 2)` of optimal. Running the bicriteria stage at a
//! tightened epsilon (the requested value divided by `3^(z-1)`) therefore
//! lands the finished solution at `3^z + epsilon` times optimal, with the
//! same success probability the amplification already paid for.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::cost::{fair_cost, pow_z};
use crate::error::Error;
use crate::instance::{split_overlapping_groups, CenterSet, Instance};
use crate::lp::{build_model, solve_model, write_lp_text};
use crate::numfmt;
use crate::oracle;
use crate::rounding::{amplify, AmplifyOutcome};
use crate::subsets::{binomial, min_scan};

/// Default ceiling on subsets visited by the final search.
pub const DEFAULT_ENUM_CAP: u64 = 100_000_000;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Requested accuracy; the final guarantee is `3^z + epsilon`.
    pub epsilon: f64,
    pub seed: u64,
    pub workers: usize,
    /// Cap on subsets enumerated by the final search.
    pub enum_cap: u64,
    /// Attach the brute-force optimum to the report when the full scan
    /// stays under this many subsets.
    pub oracle_cap: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            epsilon: 0.5,
            seed: 0,
            workers: 1,
            enum_cap: DEFAULT_ENUM_CAP,
            oracle_cap: oracle::DEFAULT_ORACLE_CAP,
        }
    }
}

/// The accuracy handed to the bicriteria stage: requested epsilon divided
/// by `3^(z-1)`.
pub fn internal_epsilon(epsilon: f64, z: f64) -> f64 {
    epsilon / pow_z(3.0, z - 1.0)
}

#[derive(Clone, Debug)]
pub struct SubsetSearchResult {
    pub centers: CenterSet,
    pub cost: f64,
    pub enumerated: u64,
}

/// Best k-subset of a candidate center set by fair cost; exhaustive scan
/// in lexicographic id order, ties to the id-smallest subset, identical
/// for any worker count.
pub fn subset_search(
    inst: &Instance,
    candidates: &CenterSet,
    k: usize,
    cap: u64,
    workers: usize,
) -> Result<SubsetSearchResult, Error> {
    let m = candidates.len();
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!(
            "cannot pick {k} centers from a candidate set of {m}"
        )));
    }
    match binomial(m, k) {
        Some(total) if total <= cap => {}
        Some(total) => {
            return Err(Error::CapExceeded {
                what: "subset search",
                required: total.to_string(),
                cap,
            })
        }
        None => {
            return Err(Error::CapExceeded {
                what: "subset search",
                required: "more than 2^64".into(),
                cap,
            })
        }
    }
    // candidates.indices() is rank-sorted, so position combinations map to
    // canonical center sets directly.
    let pool = candidates.indices();
    let (combo, cost, enumerated) = min_scan(m, k, workers, |positions| {
        let set = CenterSet::from_canonical(positions.iter().map(|&i| pool[i]).collect());
        fair_cost(inst, &set).expect("candidate subset is valid").max
    });
    Ok(SubsetSearchResult {
        centers: CenterSet::from_canonical(combo.iter().map(|&i| pool[i]).collect()),
        cost,
        enumerated,
    })
}

/// Full pipeline report; costs serialize as 12-significant-digit decimal
/// strings so reports diff cleanly across platforms.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub solution: Vec<String>,
    #[serde(serialize_with = "numfmt::ser_cost")]
    pub fair_cost: f64,
    #[serde(serialize_with = "numfmt::ser_cost_vec")]
    pub per_group_costs: Vec<f64>,
    pub argmax_group: usize,
    pub bicriteria_set_size: usize,
    pub subsets_enumerated: u64,
    #[serde(serialize_with = "numfmt::ser_cost")]
    pub gamma_star: f64,
    #[serde(serialize_with = "numfmt::ser_cost_opt")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_opt: Option<f64>,
    pub epsilon_requested: f64,
    pub epsilon_internal: f64,
    pub rng_seed: u64,
    /// Seconds per stage; the only nondeterministic part of the report.
    pub wall_times: BTreeMap<&'static str, f64>,
}

/// Report plus the artifacts a caller may want to dump: the LP text, the
/// final centers, and the amplification runs with their traces.
#[derive(Clone, Debug)]
pub struct Solved {
    pub report: SolveReport,
    pub centers: CenterSet,
    pub lp_text: String,
    pub amplified: AmplifyOutcome,
    /// The disjoint-group working copy; rounding traces index into this.
    pub split: Instance,
}

pub fn solve(inst: &Instance, opts: &SolveOptions) -> Result<Solved, Error> {
    if !(opts.epsilon > 0.0 && opts.epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {} must lie in (0, 1]",
            opts.epsilon
        )));
    }
    let total_clock = Instant::now();
    let mut wall_times = BTreeMap::new();

    let clock = Instant::now();
    let split = split_overlapping_groups(inst);
    wall_times.insert("split", clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let model = build_model(&split)?;
    let frac = solve_model(&model)?;
    let lp_text = write_lp_text(&model);
    wall_times.insert("lp", clock.elapsed().as_secs_f64());

    let eps_internal = internal_epsilon(opts.epsilon, inst.z());
    let clock = Instant::now();
    let amplified = amplify(&split, &frac, eps_internal, opts.seed, opts.workers)?;
    wall_times.insert("amplify", clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let search = subset_search(
        &split,
        &amplified.centers,
        inst.k(),
        opts.enum_cap,
        opts.workers,
    )?;
    wall_times.insert("subset_search", clock.elapsed().as_secs_f64());

    // Report costs against the caller's instance, not the split copy; the
    // two agree because copies sit on their originals.
    let centers = CenterSet::new(inst, search.centers.indices().iter().copied())?;
    let fc = fair_cost(inst, &centers)?;

    let oracle_opt = match binomial(inst.n_facilities(), inst.k()) {
        Some(total) if total <= opts.oracle_cap => {
            let clock = Instant::now();
            let opt = oracle::brute_force_fair(inst, inst.k(), opts.oracle_cap, opts.workers)?;
            wall_times.insert("oracle", clock.elapsed().as_secs_f64());
            Some(opt.cost)
        }
        _ => None,
    };
    wall_times.insert("total", total_clock.elapsed().as_secs_f64());

    let report = SolveReport {
        solution: centers.ids(inst).iter().map(|s| s.to_string()).collect(),
        fair_cost: fc.max,
        per_group_costs: fc.per_group.clone(),
        argmax_group: fc.argmax_group,
        bicriteria_set_size: amplified.centers.len(),
        subsets_enumerated: search.enumerated,
        gamma_star: frac.gamma,
        oracle_opt,
        epsilon_requested: opts.epsilon,
        epsilon_internal: eps_internal,
        rng_seed: opts.seed,
        wall_times,
    };
    Ok(Solved {
        report,
        centers,
        lp_text,
        amplified,
        split,
    })
}

/// Bicriteria report: the amplified center set itself, before any subset
/// search, with its size and fair cost.
#[derive(Clone, Debug, Serialize)]
pub struct BicriteriaReport {
    pub centers: Vec<String>,
    pub set_size: usize,
    #[serde(serialize_with = "numfmt::ser_cost")]
    pub fair_cost: f64,
    #[serde(serialize_with = "numfmt::ser_cost")]
    pub gamma_star: f64,
    pub runs: usize,
    pub iterations_per_run: usize,
    pub epsilon: f64,
    pub rng_seed: u64,
    pub wall_times: BTreeMap<&'static str, f64>,
}

#[derive(Clone, Debug)]
pub struct Bicriteria {
    pub report: BicriteriaReport,
    pub centers: CenterSet,
    pub lp_text: String,
    pub amplified: AmplifyOutcome,
    /// The disjoint-group working copy; rounding traces index into this.
    pub split: Instance,
}

/// The bicriteria stage alone: open the amplified set at the requested
/// epsilon (no internal rescale) and report it.
pub fn bicriteria(inst: &Instance, opts: &SolveOptions) -> Result<Bicriteria, Error> {
    if !(opts.epsilon > 0.0 && opts.epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {} must lie in (0, 1]",
            opts.epsilon
        )));
    }
    let total_clock = Instant::now();
    let mut wall_times = BTreeMap::new();

    let clock = Instant::now();
    let split = split_overlapping_groups(inst);
    wall_times.insert("split", clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let model = build_model(&split)?;
    let frac = solve_model(&model)?;
    let lp_text = write_lp_text(&model);
    wall_times.insert("lp", clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let amplified = amplify(&split, &frac, opts.epsilon, opts.seed, opts.workers)?;
    wall_times.insert("amplify", clock.elapsed().as_secs_f64());

    let centers = CenterSet::new(inst, amplified.centers.indices().iter().copied())?;
    let fc = fair_cost(inst, &centers)?;
    wall_times.insert("total", total_clock.elapsed().as_secs_f64());

    let report = BicriteriaReport {
        centers: centers.ids(inst).iter().map(|s| s.to_string()).collect(),
        set_size: centers.len(),
        fair_cost: fc.max,
        gamma_star: frac.gamma,
        runs: amplified.runs.len(),
        iterations_per_run: amplified.iterations_per_run,
        epsilon: opts.epsilon,
        rng_seed: opts.seed,
        wall_times,
    };
    Ok(Bicriteria {
        report,
        centers,
        lp_text,
        amplified,
        split,
    })
}
