//! Single-swap local search on the weight-summed objective.
//!
//! This is the workhorse fallback: it ignores the per-group maximum and
//! minimizes the plain weighted sum of powered distances. The solution it
//! returns backs up the randomized rounding (points the sampling pass left
//! unassigned get handed to these centers) and doubles as a comparison
//! baseline on its own.

use crate::cost::{fair_cost, pow_z, unconstrained_cost, FairCost};
use crate::error::Error;
use crate::instance::{CenterSet, Instance};

pub const DEFAULT_MAX_SWAP_ROUNDS: usize = 1000;

/// A swap must beat the incumbent by this relative margin to be taken;
/// blocks limit-cycling on near-ties.
pub const DEFAULT_IMPROVEMENT_THRESHOLD: f64 = 1e-4;

/// Locality-gap constant of single-swap search for the summed objective:
/// 5 at power 1, 25 at power 2, and a conservative `3^z * 5` otherwise.
pub fn local_search_factor(z: f64) -> f64 {
    if z == 1.0 {
        5.0
    } else if z == 2.0 {
        25.0
    } else {
        pow_z(3.0, z) * 5.0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BaselineConfig {
    pub max_swap_rounds: usize,
    pub improvement_threshold: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            max_swap_rounds: DEFAULT_MAX_SWAP_ROUNDS,
            improvement_threshold: DEFAULT_IMPROVEMENT_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BaselineOutcome {
    pub centers: CenterSet,
    pub unconstrained: f64,
    pub fair: FairCost,
    pub swaps: usize,
    pub rounds: usize,
}

/// Greedy farthest-point seed: start from the id-smallest facility, then
/// repeatedly add the facility farthest from the chosen set. Ties go to the
/// smaller id, so the seed is a pure function of the instance.
fn farthest_point_seed(inst: &Instance, k: usize) -> Vec<usize> {
    let order = inst.facilities_by_rank();
    let mut chosen = vec![order[0]];
    while chosen.len() < k {
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for &f in order {
            if chosen.contains(&f) {
                continue;
            }
            let d = chosen
                .iter()
                .map(|&c| inst.dist_ff(f, c))
                .fold(f64::INFINITY, f64::min);
            if d > best_d {
                best_d = d;
                best = f;
            }
        }
        chosen.push(best);
    }
    chosen
}

/// Best-improvement single-swap local search for `k` centers.
pub fn local_search(inst: &Instance, k: usize, config: &BaselineConfig) -> Result<BaselineOutcome, Error> {
    if k == 0 || k > inst.n_facilities() {
        return Err(Error::InvalidParameter(format!(
            "cannot place {k} centers among {} facilities",
            inst.n_facilities()
        )));
    }
    let mut current = farthest_point_seed(inst, k);
    let mut cur_cost = unconstrained_cost(inst, &CenterSet::new(inst, current.iter().copied())?)?;
    let mut swaps = 0;
    let mut rounds = 0;

    let order = inst.facilities_by_rank();
    while rounds < config.max_swap_rounds {
        rounds += 1;
        let mut best_swap: Option<(usize, usize, f64)> = None;
        // Scan (out, in) in rank order on both coordinates so the chosen
        // swap never depends on iteration incidentals.
        for &out in order {
            let out_pos = match current.iter().position(|&c| c == out) {
                Some(pos) => pos,
                None => continue,
            };
            for &inc in order {
                if current.contains(&inc) {
                    continue;
                }
                let mut cand = current.clone();
                cand[out_pos] = inc;
                let cost = unconstrained_cost(inst, &CenterSet::new(inst, cand)?)?;
                if best_swap.is_none_or(|(_, _, c)| cost < c) {
                    best_swap = Some((out_pos, inc, cost));
                }
            }
        }
        match best_swap {
            Some((pos, inc, cost)) if cost < cur_cost * (1.0 - config.improvement_threshold) => {
                current[pos] = inc;
                cur_cost = cost;
                swaps += 1;
            }
            _ => break,
        }
    }

    let centers = CenterSet::new(inst, current)?;
    let fair = fair_cost(inst, &centers)?;
    Ok(BaselineOutcome {
        unconstrained: unconstrained_cost(inst, &centers)?,
        centers,
        fair,
        swaps,
        rounds,
    })
}

/// Local search at the instance's own `k`.
pub fn solve(inst: &Instance) -> Result<BaselineOutcome, Error> {
    local_search(inst, inst.k(), &BaselineConfig::default())
}
