//! Command-line front end: file I/O, seeding, and JSON reports for the
//! solver, baseline, oracle, generator, and diagnostic modules.
//!
//! Exit codes: 0 success, 1 input error, 2 resource cap exceeded. Reports
//! are written whole or not at all; a failed command leaves no partial
//! output behind. Costs appear as 12-significant-digit decimal strings so
//! reports diff cleanly across platforms.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fairclust_core::generators::{self, SetCoverageInstance};
use fairclust_core::instance::split_overlapping_groups;
use fairclust_core::lp::{build_model, solve_model};
use fairclust_core::metric::{validate_metric, MetricReport};
use fairclust_core::numfmt::cost_string;
use fairclust_core::rounding::{self, AmplifyOutcome};
use fairclust_core::solver::{self, SolveOptions};
use fairclust_core::{baseline, oracle, Error, Instance, MetricCheck};

#[derive(Parser)]
#[command(
    name = "fairclust",
    version,
    about = "Socially fair clustering: LP-guided rounding with subset search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pick k centers minimizing the worst group's cost.
    Solve(SolveArgs),
    /// Stop after amplification and report the whole oversized center set.
    Bicriteria(BicriteriaArgs),
    /// Local-search baseline for the plain (group-blind) objective.
    Baseline(BaselineArgs),
    /// Exact fair optimum by enumerating every k-subset of facilities.
    Oracle(OracleArgs),
    /// Generate instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Check the metric axioms and report every violation found.
    Validate(ValidateArgs),
    /// Sampling diagnostics: survival fractions and per-group expected
    /// costs of a single rounding pass.
    Stats(StatsArgs),
}

#[derive(Args)]
struct InstanceOpts {
    /// Instance JSON file.
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Override the instance's cost exponent z.
    #[arg(long)]
    z: Option<f64>,
    /// Trust the metric; skip symmetry/triangle validation on load.
    #[arg(long)]
    skip_metric_check: bool,
}

#[derive(Args)]
struct RunOpts {
    /// RNG seed for randomized stages.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel stages; never changes the output.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct OutputOpt {
    /// Write the report to this file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceOpts,
    /// Accuracy knob; smaller is tighter and slower.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[command(flatten)]
    run: RunOpts,
    /// Refuse to scan more than this many subsets in the final search.
    #[arg(long, default_value_t = solver::DEFAULT_ENUM_CAP)]
    enum_cap: u64,
    /// Attach the exact optimum when enumeration fits under this cap.
    #[arg(long, default_value_t = oracle::DEFAULT_ORACLE_CAP)]
    oracle_cap: u64,
    /// Also write the relaxation in LP text format.
    #[arg(long, value_name = "FILE")]
    dump_lp: Option<PathBuf>,
    /// Also write per-run rounding traces as JSON.
    #[arg(long, value_name = "FILE")]
    dump_trace: Option<PathBuf>,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct BicriteriaArgs {
    #[command(flatten)]
    inst: InstanceOpts,
    /// Accuracy knob; smaller is tighter and slower.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[command(flatten)]
    run: RunOpts,
    /// Also write the relaxation in LP text format.
    #[arg(long, value_name = "FILE")]
    dump_lp: Option<PathBuf>,
    /// Also write per-run rounding traces as JSON.
    #[arg(long, value_name = "FILE")]
    dump_trace: Option<PathBuf>,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    inst: InstanceOpts,
    #[command(flatten)]
    run: RunOpts,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    inst: InstanceOpts,
    /// Refuse to enumerate more than this many subsets.
    #[arg(long, default_value_t = oracle::DEFAULT_ORACLE_CAP)]
    oracle_cap: u64,
    #[command(flatten)]
    run: RunOpts,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct ValidateArgs {
    /// Instance JSON file; loaded without any metric checks.
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Override the cost exponent z before checking powered chains.
    #[arg(long)]
    z: Option<f64>,
    #[command(flatten)]
    run: RunOpts,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    inst: InstanceOpts,
    /// Accuracy knob used to size the sampling pass.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Monte Carlo trials per statistic.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[command(flatten)]
    run: RunOpts,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Uniform random points and facilities in a unit box, with disjoint
    /// random groups.
    Euclidean(GenEuclideanArgs),
    /// Reduce a set-coverage question to a clustering instance whose
    /// optimum is 1 exactly when the answer is yes.
    SetcoverReduce(GenSetcoverArgs),
    /// Rewrite an instance so every point forms its own unit-weight group.
    Singleton(GenSingletonArgs),
}

#[derive(Args)]
struct GenEuclideanArgs {
    /// Number of points.
    #[arg(long)]
    points: usize,
    /// Number of facilities.
    #[arg(long)]
    facilities: usize,
    /// Coordinate dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Number of groups; every group gets at least one point.
    #[arg(long)]
    groups: usize,
    /// Centers to open.
    #[arg(long)]
    k: usize,
    /// Cost exponent.
    #[arg(long, default_value_t = 1.0)]
    z: f64,
    /// Smallest point weight.
    #[arg(long, default_value_t = 0.5)]
    weight_min: f64,
    /// Largest point weight.
    #[arg(long, default_value_t = 2.0)]
    weight_max: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Accepted for interface uniformity; generation is single-threaded.
    #[arg(long, default_value_t = 1)]
    #[allow(dead_code)]
    workers: usize,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct GenSetcoverArgs {
    /// Set-coverage JSON file: {"universe": [..], "sets": [[..], ..], "k": n}.
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Cost exponent for the produced instance.
    #[arg(long, default_value_t = 1.0)]
    z: f64,
    /// Accepted for interface uniformity; generation is single-threaded.
    #[arg(long, default_value_t = 1)]
    #[allow(dead_code)]
    workers: usize,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct GenSingletonArgs {
    /// Instance JSON file.
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Trust the metric; skip symmetry/triangle validation on load.
    #[arg(long)]
    skip_metric_check: bool,
    /// Accepted for interface uniformity; generation is single-threaded.
    #[arg(long, default_value_t = 1)]
    #[allow(dead_code)]
    workers: usize,
    #[command(flatten)]
    output: OutputOpt,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            err.print().expect("usage output");
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(if err.is_resource_limit() { 2 } else { 1 });
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bicriteria(a) => cmd_bicriteria(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Gen(g) => match g {
            GenCommand::Euclidean(a) => cmd_gen_euclidean(a),
            GenCommand::SetcoverReduce(a) => cmd_gen_setcover(a),
            GenCommand::Singleton(a) => cmd_gen_singleton(a),
        },
        Command::Validate(a) => cmd_validate(a),
        Command::Stats(a) => cmd_stats(a),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_file(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Stamp the real file name into parse errors, which otherwise carry the
/// placeholder path the core parser uses for in-memory input.
fn with_path(path: &Path, err: Error) -> Error {
    match err {
        Error::Json { source, .. } => Error::Json {
            path: path.display().to_string(),
            source,
        },
        other => other,
    }
}

fn load_instance(opts: &InstanceOpts) -> Result<Instance, Error> {
    let text = read_file(&opts.instance)?;
    let check = if opts.skip_metric_check {
        MetricCheck::Skip
    } else {
        MetricCheck::Validate
    };
    let inst =
        Instance::from_json_str(&text, check).map_err(|e| with_path(&opts.instance, e))?;
    match opts.z {
        Some(z) => inst.with_z(z),
        None => Ok(inst),
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn emit(output: &OutputOpt, text: &str) -> Result<(), Error> {
    match &output.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn id_strings(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

#[derive(Serialize)]
struct TraceIteration {
    facility: String,
    assigned: Vec<String>,
}

#[derive(Serialize)]
struct TraceRun {
    centers: Vec<String>,
    iterations: Vec<TraceIteration>,
    unassigned_after: Vec<usize>,
    phase2_points: Vec<String>,
    phase2_centers: Vec<String>,
}

#[derive(Serialize)]
struct TraceDump {
    /// Accuracy the sampling pass actually ran at (after any internal
    /// rescale), not necessarily the command-line value.
    epsilon: f64,
    rng_seed: u64,
    iterations_per_run: usize,
    runs: Vec<TraceRun>,
}

/// Traces name points of the disjoint-group working copy, so split copies
/// show up under their derived ids.
fn trace_dump(split: &Instance, amp: &AmplifyOutcome, epsilon: f64, seed: u64) -> TraceDump {
    let runs = amp
        .runs
        .iter()
        .map(|run| TraceRun {
            centers: id_strings(&run.centers.ids(split)),
            iterations: run
                .trace
                .iterations
                .iter()
                .map(|it| TraceIteration {
                    facility: split.facility_id(it.facility).to_string(),
                    assigned: it
                        .assigned
                        .iter()
                        .map(|&p| split.point_id(p).to_string())
                        .collect(),
                })
                .collect(),
            unassigned_after: run.trace.unassigned_after.clone(),
            phase2_points: run
                .trace
                .phase2_points
                .iter()
                .map(|&p| split.point_id(p).to_string())
                .collect(),
            phase2_centers: id_strings(&run.trace.phase2_centers.ids(split)),
        })
        .collect();
    TraceDump {
        epsilon,
        rng_seed: seed,
        iterations_per_run: amp.iterations_per_run,
        runs,
    }
}

fn cmd_solve(a: SolveArgs) -> Result<(), Error> {
    let inst = load_instance(&a.inst)?;
    let opts = SolveOptions {
        epsilon: a.epsilon,
        seed: a.run.seed,
        workers: a.run.workers.max(1),
        enum_cap: a.enum_cap,
        oracle_cap: a.oracle_cap,
    };
    let solved = solver::solve(&inst, &opts)?;
    if let Some(path) = &a.dump_lp {
        write_file(path, &solved.lp_text)?;
    }
    if let Some(path) = &a.dump_trace {
        let eps = solver::internal_epsilon(a.epsilon, inst.z());
        let dump = trace_dump(&solved.split, &solved.amplified, eps, a.run.seed);
        write_file(path, &pretty(&dump))?;
    }
    emit(&a.output, &pretty(&solved.report))
}

fn cmd_bicriteria(a: BicriteriaArgs) -> Result<(), Error> {
    let inst = load_instance(&a.inst)?;
    let opts = SolveOptions {
        epsilon: a.epsilon,
        seed: a.run.seed,
        workers: a.run.workers.max(1),
        ..SolveOptions::default()
    };
    let out = solver::bicriteria(&inst, &opts)?;
    if let Some(path) = &a.dump_lp {
        write_file(path, &out.lp_text)?;
    }
    if let Some(path) = &a.dump_trace {
        let dump = trace_dump(&out.split, &out.amplified, a.epsilon, a.run.seed);
        write_file(path, &pretty(&dump))?;
    }
    emit(&a.output, &pretty(&out.report))
}

#[derive(Serialize)]
struct BaselineReport {
    centers: Vec<String>,
    unconstrained_cost: String,
    fair_cost: String,
    per_group_costs: Vec<String>,
    argmax_group: usize,
    swaps: usize,
    rounds: usize,
}

fn cmd_baseline(a: BaselineArgs) -> Result<(), Error> {
    let inst = load_instance(&a.inst)?;
    let out = baseline::solve(&inst)?;
    let report = BaselineReport {
        centers: id_strings(&out.centers.ids(&inst)),
        unconstrained_cost: cost_string(out.unconstrained),
        fair_cost: cost_string(out.fair.max),
        per_group_costs: out.fair.per_group.iter().copied().map(cost_string).collect(),
        argmax_group: out.fair.argmax_group,
        swaps: out.swaps,
        rounds: out.rounds,
    };
    emit(&a.output, &pretty(&report))
}

#[derive(Serialize)]
struct OracleReport {
    opt_cost: String,
    opt_set: Vec<String>,
    enumerated: u64,
}

fn cmd_oracle(a: OracleArgs) -> Result<(), Error> {
    let inst = load_instance(&a.inst)?;
    let res = oracle::brute_force_fair(&inst, inst.k(), a.oracle_cap, a.run.workers.max(1))?;
    let report = OracleReport {
        opt_cost: cost_string(res.cost),
        opt_set: id_strings(&res.centers.ids(&inst)),
        enumerated: res.subsets_scanned,
    };
    emit(&a.output, &pretty(&report))
}

fn cmd_gen_euclidean(a: GenEuclideanArgs) -> Result<(), Error> {
    let inst = generators::random_euclidean(
        a.points,
        a.facilities,
        a.dim,
        a.groups,
        a.k,
        a.z,
        (a.weight_min, a.weight_max),
        a.seed,
    )?;
    emit(&a.output, &inst.to_json_string())
}

fn cmd_gen_setcover(a: GenSetcoverArgs) -> Result<(), Error> {
    let text = read_file(&a.instance)?;
    let sc =
        SetCoverageInstance::from_json_str(&text).map_err(|e| with_path(&a.instance, e))?;
    let inst = generators::reduce_set_coverage(&sc, a.z)?;
    emit(&a.output, &inst.to_json_string())
}

fn cmd_gen_singleton(a: GenSingletonArgs) -> Result<(), Error> {
    let inst = load_instance(&InstanceOpts {
        instance: a.instance.clone(),
        z: None,
        skip_metric_check: a.skip_metric_check,
    })?;
    let out = generators::singleton_groups(&inst)?;
    emit(&a.output, &out.to_json_string())
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    clean: bool,
    summary: String,
    #[serde(flatten)]
    detail: &'a MetricReport,
}

fn cmd_validate(a: ValidateArgs) -> Result<(), Error> {
    let text = read_file(&a.instance)?;
    let inst = Instance::from_json_str(&text, MetricCheck::Skip)
        .map_err(|e| with_path(&a.instance, e))?;
    let inst = match a.z {
        Some(z) => inst.with_z(z)?,
        None => inst,
    };
    let detail = validate_metric(&inst);
    // Violations are the command's subject matter, not a failure: report
    // them and exit 0. Only unreadable input is an error here.
    let report = ValidateReport {
        clean: detail.is_clean(),
        summary: detail.summary(),
        detail: &detail,
    };
    emit(&a.output, &pretty(&report))
}

#[derive(Serialize)]
struct SurvivalSection {
    checkpoints: Vec<usize>,
    expected_fraction: Vec<String>,
    stderr: Vec<String>,
    /// Point ids of the disjoint-group working copy, aligning the inner
    /// axis of `observed`.
    points: Vec<String>,
    observed: Vec<Vec<String>>,
    worst_sigma: String,
}

#[derive(Serialize)]
struct ExpectationSection {
    groups: Vec<String>,
    mean: Vec<String>,
    stderr: Vec<String>,
}

#[derive(Serialize)]
struct StatsReport {
    trials: usize,
    epsilon: f64,
    rng_seed: u64,
    iterations_per_run: usize,
    gamma_star: String,
    survival: SurvivalSection,
    group_cost: ExpectationSection,
}

fn cmd_stats(a: StatsArgs) -> Result<(), Error> {
    let inst = load_instance(&a.inst)?;
    let split = split_overlapping_groups(&inst);
    let model = build_model(&split)?;
    let frac = solve_model(&model)?;

    let t = rounding::phase1_iterations(split.k(), split.z(), split.n_elements(), a.epsilon);
    let checkpoints: Vec<usize> = [1, 2, 5].into_iter().filter(|&i| i <= t).collect();
    let workers = a.run.workers.max(1);
    let surv =
        rounding::survival_statistics(&split, &frac, a.epsilon, &checkpoints, a.trials, a.run.seed)?;
    let expect =
        rounding::estimate_group_expectation(&split, &frac, a.epsilon, a.trials, a.run.seed, workers)?;

    let strings = |xs: &[f64]| xs.iter().copied().map(cost_string).collect::<Vec<_>>();
    let report = StatsReport {
        trials: a.trials,
        epsilon: a.epsilon,
        rng_seed: a.run.seed,
        iterations_per_run: t,
        gamma_star: cost_string(frac.gamma),
        survival: SurvivalSection {
            checkpoints: surv.checkpoints.clone(),
            expected_fraction: strings(&surv.expected),
            stderr: strings(&surv.stderr),
            points: (0..split.n_points())
                .map(|p| split.point_id(p).to_string())
                .collect(),
            observed: surv.observed.iter().map(|row| strings(row)).collect(),
            worst_sigma: cost_string(surv.worst_sigma()),
        },
        group_cost: ExpectationSection {
            groups: split.groups().iter().map(|g| g.name.clone()).collect(),
            mean: strings(&expect.mean),
            stderr: strings(&expect.stderr),
        },
    };
    emit(&a.output, &pretty(&report))
}
