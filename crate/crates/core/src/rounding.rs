//! Randomized rounding of the fractional relaxation, plus the statistical
//! harnesses that check its behavior against closed-form laws.
//!
//! One round has two phases. Phase 1 repeats `t = ceil(k ln(2 c n / eps))`
//! times: sample a facility with probability `y_f / k`, then independently
//! hand each still-unassigned point `p` to it with probability
//! `x_{f,p} / y_f`. Any one iteration assigns an unassigned point with
//! probability exactly `1/k`, so survival decays as `(1 - 1/k)^i`. Phase 2
//! sends the survivors to the deterministic local-search fallback centers.
//! The returned set is everything sampled plus the fallback, at most
//! `t + k` facilities.
//!
//! `amplify` repeats the round `r = ceil(8 ln n / eps)` times on derived
//! seeds and unions the results, trading set size for a high-probability
//! cost guarantee.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baseline;
use crate::cost::group_cost;
use crate::error::Error;
use crate::instance::{CenterSet, Instance};
use crate::lp::{build_model, check_feasibility, FractionalSolution};

/// Fewest trials any statistical estimate will accept.
pub const MIN_TRIALS: usize = 100;

/// Residual at which a caller-supplied fractional solution is rejected.
const FRAC_RESIDUAL_TOL: f64 = 1e-6;

/// Derive the seed for stream `stream` from a master seed: splitmix64-style
/// finalizer over `seed xor (stream * golden)`. Fixed for reproducibility;
/// documented so traces can be replayed stream by stream.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut x = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// The sampling constant `c`: the fallback's approximation factor, floored
/// at 1 so the iteration count can never shrink below `k ln(2n/eps)`.
pub fn sampling_constant(z: f64) -> f64 {
    baseline::local_search_factor(z).max(1.0)
}

/// Phase-1 iteration count `ceil(k ln(2 c n / eps))` for an n-element
/// instance.
pub fn phase1_iterations(k: usize, z: f64, n_elements: usize, epsilon: f64) -> usize {
    let c = sampling_constant(z);
    let t = (k as f64) * (2.0 * c * n_elements as f64 / epsilon).ln();
    t.ceil() as usize
}

/// Amplification run count `ceil(8 ln n / eps)`.
pub fn amplification_runs(n_elements: usize, epsilon: f64) -> usize {
    (8.0 * (n_elements as f64).ln() / epsilon).ceil() as usize
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// Facility sampled this iteration (instance index).
    pub facility: usize,
    /// Points newly assigned to it, in index order.
    pub assigned: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct RoundingTrace {
    pub iterations: Vec<IterationRecord>,
    /// Unassigned-point count after each iteration; nonincreasing.
    pub unassigned_after: Vec<usize>,
    /// Points the sampling pass never reached, in index order.
    pub phase2_points: Vec<usize>,
    pub phase2_centers: CenterSet,
}

#[derive(Clone, Debug)]
pub struct RoundedRun {
    pub centers: CenterSet,
    pub trace: RoundingTrace,
}

/// Everything a round needs, computed once per fractional solution so
/// repeated runs only pay for their own randomness.
struct Prepared<'a> {
    inst: &'a Instance,
    /// Cumulative `y_f / k` over the declared facility order.
    cdf: Vec<f64>,
    /// Highest-index facility with positive mass; absorbs any tail draw.
    last_positive: usize,
    /// `x_{f,p} / y_f`, facility-major, with x renormalized per point and
    /// the ratio clamped into [0, 1].
    share: Vec<f64>,
    iterations: usize,
    fallback: CenterSet,
}

fn prepare<'a>(
    inst: &'a Instance,
    frac: &FractionalSolution,
    epsilon: f64,
) -> Result<Prepared<'a>, Error> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} must lie in (0, 1]"
        )));
    }
    let model = build_model(inst)?;
    let residual = check_feasibility(&model, frac);
    if residual.max() > FRAC_RESIDUAL_TOL {
        return Err(Error::InvalidParameter(format!(
            "fractional solution violates the relaxation (residual {})",
            residual.max()
        )));
    }

    let k = inst.k() as f64;
    let mass: f64 = frac.y.iter().sum::<f64>() / k;
    assert!(
        (mass - 1.0).abs() <= 1e-5,
        "sampling weights sum to {mass}, not 1"
    );
    let n_f = inst.n_facilities();
    let n_p = inst.n_points();
    let mut cdf = Vec::with_capacity(n_f);
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (f, &y) in frac.y.iter().enumerate() {
        if y > 0.0 {
            last_positive = f;
        }
        cum += y / k;
        cdf.push(cum);
    }

    let mut share = vec![0.0; n_f * n_p];
    for p in 0..n_p {
        let total: f64 = (0..n_f).map(|f| frac.x[f * n_p + p]).sum();
        if total <= 0.0 {
            continue;
        }
        for f in 0..n_f {
            if frac.y[f] > 0.0 {
                share[f * n_p + p] = (frac.x[f * n_p + p] / total / frac.y[f]).min(1.0);
            }
        }
    }

    Ok(Prepared {
        inst,
        cdf,
        last_positive,
        share,
        iterations: phase1_iterations(inst.k(), inst.z(), inst.n_elements(), epsilon),
        fallback: baseline::solve(inst)?.centers,
    })
}

fn round_prepared(prep: &Prepared, seed: u64) -> RoundedRun {
    let n_p = prep.inst.n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assigned = vec![false; n_p];
    let mut remaining = n_p;
    let mut sampled = Vec::with_capacity(prep.iterations);
    let mut iterations = Vec::with_capacity(prep.iterations);
    let mut unassigned_after = Vec::with_capacity(prep.iterations);

    for _ in 0..prep.iterations {
        let u = rng.gen::<f64>();
        let f = prep
            .cdf
            .partition_point(|&c| c <= u)
            .min(prep.last_positive);
        sampled.push(f);
        let mut newly = Vec::new();
        for (p, done) in assigned.iter_mut().enumerate() {
            if !*done && rng.gen::<f64>() < prep.share[f * n_p + p] {
                *done = true;
                remaining -= 1;
                newly.push(p);
            }
        }
        iterations.push(IterationRecord {
            facility: f,
            assigned: newly,
        });
        unassigned_after.push(remaining);
    }

    let phase2_points: Vec<usize> = (0..n_p).filter(|&p| !assigned[p]).collect();
    let sampled = CenterSet::new(prep.inst, sampled).expect("sampled facilities are valid indices");
    let centers = CenterSet::union(prep.inst, &[sampled, prep.fallback.clone()])
        .expect("union of nonempty sets");
    RoundedRun {
        centers,
        trace: RoundingTrace {
            iterations,
            unassigned_after,
            phase2_points,
            phase2_centers: prep.fallback.clone(),
        },
    }
}

/// One full round against a feasible fractional solution.
pub fn randomized_round(
    inst: &Instance,
    frac: &FractionalSolution,
    epsilon: f64,
    seed: u64,
) -> Result<RoundedRun, Error> {
    let prep = prepare(inst, frac, epsilon)?;
    Ok(round_prepared(&prep, seed))
}

#[derive(Clone, Debug)]
pub struct AmplifyOutcome {
    /// Union of every run's center set.
    pub centers: CenterSet,
    pub runs: Vec<RoundedRun>,
    pub iterations_per_run: usize,
}

/// Repeat the round on seeds `mix_seed(seed, 0..r)` and union the center
/// sets. Runs are independent, so workers only affect wall time: results
/// are reassembled in run order and the union is order-free anyway.
pub fn amplify(
    inst: &Instance,
    frac: &FractionalSolution,
    epsilon: f64,
    seed: u64,
    workers: usize,
) -> Result<AmplifyOutcome, Error> {
    let prep = prepare(inst, frac, epsilon)?;
    let r = amplification_runs(inst.n_elements(), epsilon);
    let runs = run_streams(&prep, seed, r, workers, |run| run);
    let mut parts: Vec<CenterSet> = runs.iter().map(|r| r.centers.clone()).collect();
    parts.push(prep.fallback.clone());
    let centers = CenterSet::union(inst, &parts)?;
    Ok(AmplifyOutcome {
        centers,
        iterations_per_run: prep.iterations,
        runs,
    })
}

/// Execute `count` independent rounds, mapping each through `finish`,
/// chunked contiguously across workers and returned in stream order.
fn run_streams<T: Send>(
    prep: &Prepared,
    seed: u64,
    count: usize,
    workers: usize,
    finish: impl Fn(RoundedRun) -> T + Sync,
) -> Vec<T> {
    let workers = workers.max(1).min(count.max(1));
    if workers == 1 {
        return (0..count)
            .map(|i| finish(round_prepared(prep, mix_seed(seed, i as u64))))
            .collect();
    }
    let base = count / workers;
    let extra = count % workers;
    let mut out = Vec::with_capacity(count);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        let mut start = 0;
        for w in 0..workers {
            let len = base + usize::from(w < extra);
            let finish = &finish;
            let prep_ref = &*prep;
            handles.push(scope.spawn(move || {
                (start..start + len)
                    .map(|i| finish(round_prepared(prep_ref, mix_seed(seed, i as u64))))
                    .collect::<Vec<T>>()
            }));
            start += len;
        }
        for h in handles {
            out.extend(h.join().expect("rounding worker panicked"));
        }
    });
    out
}

#[derive(Clone, Debug)]
pub struct GroupExpectation {
    pub trials: usize,
    /// Per-group mean cost of a single round's center set.
    pub mean: Vec<f64>,
    /// Standard error of each mean.
    pub stderr: Vec<f64>,
}

/// Monte Carlo estimate of each group's expected cost under one round.
/// Per-trial cost rows are reduced in trial order regardless of worker
/// count, so the floating-point result is worker-independent.
pub fn estimate_group_expectation(
    inst: &Instance,
    frac: &FractionalSolution,
    epsilon: f64,
    n_trials: usize,
    seed: u64,
    workers: usize,
) -> Result<GroupExpectation, Error> {
    if n_trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_TRIALS} trials, got {n_trials}"
        )));
    }
    let prep = prepare(inst, frac, epsilon)?;
    let n_groups = inst.n_groups();
    let rows: Vec<Vec<f64>> = run_streams(&prep, seed, n_trials, workers, |run| {
        (0..n_groups)
            .map(|j| group_cost(inst, &run.centers, j).expect("valid group"))
            .collect()
    });

    let t = n_trials as f64;
    let mut mean = vec![0.0; n_groups];
    for row in &rows {
        for (m, &c) in mean.iter_mut().zip(row) {
            *m += c;
        }
    }
    for m in &mut mean {
        *m /= t;
    }
    let mut stderr = vec![0.0; n_groups];
    for row in &rows {
        for ((s, &c), &m) in stderr.iter_mut().zip(row).zip(&mean) {
            *s += (c - m) * (c - m);
        }
    }
    for s in &mut stderr {
        *s = (*s / (t * (t - 1.0))).sqrt();
    }
    Ok(GroupExpectation {
        trials: n_trials,
        mean,
        stderr,
    })
}

#[derive(Clone, Debug)]
pub struct SurvivalStats {
    pub checkpoints: Vec<usize>,
    pub trials: usize,
    /// `(1 - 1/k)^i` per checkpoint.
    pub expected: Vec<f64>,
    /// Binomial standard error at the expected rate.
    pub stderr: Vec<f64>,
    /// Observed survival fraction, per checkpoint then per point.
    pub observed: Vec<Vec<f64>>,
}

impl SurvivalStats {
    /// Largest |observed - expected| over all checkpoints and points,
    /// measured in standard errors.
    pub fn worst_sigma(&self) -> f64 {
        let mut worst = 0.0f64;
        for (ci, row) in self.observed.iter().enumerate() {
            for &obs in row {
                worst = worst.max((obs - self.expected[ci]).abs() / self.stderr[ci]);
            }
        }
        worst
    }
}

/// Measure how often each point is still unassigned after `i` phase-1
/// iterations, for each checkpoint `i`, against the closed form
/// `(1 - 1/k)^i`.
pub fn survival_statistics(
    inst: &Instance,
    frac: &FractionalSolution,
    epsilon: f64,
    checkpoints: &[usize],
    n_trials: usize,
    seed: u64,
) -> Result<SurvivalStats, Error> {
    if n_trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_TRIALS} trials, got {n_trials}"
        )));
    }
    let prep = prepare(inst, frac, epsilon)?;
    if checkpoints.is_empty() {
        return Err(Error::InvalidParameter("no checkpoints given".into()));
    }
    if let Some(&bad) = checkpoints.iter().find(|&&i| i == 0 || i > prep.iterations) {
        return Err(Error::InvalidParameter(format!(
            "checkpoint {bad} outside 1..={} phase-1 iterations",
            prep.iterations
        )));
    }

    let n_p = inst.n_points();
    let mut counts = vec![vec![0u64; n_p]; checkpoints.len()];
    for trial in 0..n_trials {
        let run = round_prepared(&prep, mix_seed(seed, trial as u64));
        let mut assigned_at = vec![usize::MAX; n_p];
        for (i, rec) in run.trace.iterations.iter().enumerate() {
            for &p in &rec.assigned {
                assigned_at[p] = i;
            }
        }
        for (ci, &cp) in checkpoints.iter().enumerate() {
            for p in 0..n_p {
                // Survived checkpoint cp = not assigned in iterations 0..cp.
                if assigned_at[p] >= cp {
                    counts[ci][p] += 1;
                }
            }
        }
    }

    let q = 1.0 - 1.0 / inst.k() as f64;
    let t = n_trials as f64;
    let expected: Vec<f64> = checkpoints.iter().map(|&i| q.powi(i as i32)).collect();
    let stderr: Vec<f64> = expected
        .iter()
        .map(|&e| (e * (1.0 - e) / t).sqrt().max(f64::MIN_POSITIVE))
        .collect();
    let observed = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / t).collect())
        .collect();
    Ok(SurvivalStats {
        checkpoints: checkpoints.to_vec(),
        trials: n_trials,
        expected,
        stderr,
        observed,
    })
}
