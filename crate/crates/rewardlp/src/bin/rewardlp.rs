//! Command-line front end: model generation, single reward solves from
//! files, the three-arm counterexample, and the benchmark sweep.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 a solve or
//! sweep run failed, 3 internal error (I/O, worker pool).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rewardlp::baselines::{run_bandit_counterexample, BanditConfig, BaselineError};
use rewardlp::data::{EmpiricalEstimates, FeedbackDataset, FeedbackMode, TrajectoryDataset};
use rewardlp::experiment::{
    error_curves_svg, random_mdp, results_to_csv, run_sweep, summarize, ExperimentConfig,
};
use rewardlp::irl::{build_irl_set, solve_reward_gap_lp, IrlError, RelaxationConfig, XMode};
use rewardlp::lp::LpStatus;
use rewardlp::mdp::{occupancy_of_policy, Policy, TabularMdp};
use rewardlp::rlhf::{
    build_hf_set, build_integrated_set, select_reward, HfMode, ObjectiveKind, RlhfError,
};

#[derive(Parser)]
#[command(
    name = "rewardlp",
    version,
    about = "Linear-programming toolkit for offline reward learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabular MDP utilities.
    Mdp {
        #[command(subcommand)]
        op: MdpOp,
    },
    /// Reward learning from demonstration trajectories.
    Irl {
        #[command(subcommand)]
        op: IrlOp,
    },
    /// Reward learning from preference feedback.
    Rlhf {
        #[command(subcommand)]
        op: RlhfOp,
    },
    /// Reward learning from demonstrations and feedback together.
    Integrate {
        #[command(subcommand)]
        op: IntegrateOp,
    },
    /// Three-arm counterexample where the feasibility LP finds the best arm
    /// but the likelihood baselines do not.
    Bandit(BanditArgs),
    /// Benchmark sweep over random MDPs with CSV and SVG output.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum MdpOp {
    /// Generate a random MDP (uniform-normalized dynamics, near-tied
    /// rewards) as JSON.
    Gen(MdpGenArgs),
}

#[derive(Args)]
struct MdpGenArgs {
    #[arg(long, default_value_t = 10)]
    states: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum IrlOp {
    /// Build the demonstration polyhedron from a trajectory file and
    /// maximize the reward gap against a comparison occupancy.
    Run(IrlRunArgs),
}

#[derive(Args)]
struct IrlRunArgs {
    /// MDP JSON file (dynamics and initial distribution).
    #[arg(long)]
    mdp: PathBuf,
    /// Demonstration trajectories, one JSON object per line.
    #[arg(long)]
    data: PathBuf,
    /// Trajectories estimating the comparison occupancy; the exact uniform
    /// policy occupancy is used when omitted.
    #[arg(long)]
    sub_data: Option<PathBuf>,
    /// Duality-gap slack; defaults to 0.01/sqrt(N) over the data size.
    #[arg(long)]
    eps_g: Option<f64>,
    /// Importance-ratio radius of the polyhedron.
    #[arg(long, default_value_t = 100.0)]
    b: f64,
    /// Failure probability of the concentration levels.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Override for the flow-constraint slack.
    #[arg(long)]
    eps_x: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RlhfOp {
    /// Build the feedback polyhedron from a query file and pick a reward.
    Run(RlhfRunArgs),
}

#[derive(Args)]
struct RlhfRunArgs {
    #[arg(long)]
    mdp: PathBuf,
    /// Labeled trajectory pairs, one JSON object per line; discrete or
    /// continuous labels are detected from the file.
    #[arg(long)]
    queries: PathBuf,
    /// Per-query error slack (negative values force a margin).
    #[arg(long, default_value_t = -0.01, allow_hyphen_values = true)]
    eps_r: f64,
    /// Label weight for continuous feedback.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum IntegrateOp {
    /// Intersect the demonstration polyhedron with feedback rows and
    /// maximize the reward gap over the result.
    Run(IntegrateRunArgs),
}

#[derive(Args)]
struct IntegrateRunArgs {
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    sub_data: Option<PathBuf>,
    /// Duality-gap slack; defaults to 0.01/sqrt(N) over the data size.
    #[arg(long)]
    eps_g: Option<f64>,
    /// Per-query error slack; defaults to 0.01/sqrt(N) over the data size.
    #[arg(long, allow_hyphen_values = true)]
    eps_r: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    b: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Label weight for continuous feedback.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    eps_x: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BanditArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    queries: usize,
    /// Probability of sampling the (a1, a2) pair; the rest goes to (a2, a3).
    #[arg(long, default_value_t = 0.995)]
    mass12: f64,
    #[arg(long, default_value_t = -0.01, allow_hyphen_values = true)]
    eps_r: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Sweep configuration in TOML; every key optional, defaults to the
    /// standard benchmark.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for results.csv and the SVG error curves.
    #[arg(long)]
    out: PathBuf,
    /// Overrides base_seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; the global default pool when omitted.
    #[arg(long)]
    jobs: Option<usize>,
    /// Record measured wall times instead of zeros (output is then no
    /// longer byte-reproducible).
    #[arg(long, default_value_t = false)]
    timings: bool,
}

enum CliError {
    /// Bad flags, unreadable or invalid input files: exit 1.
    Config(String),
    /// A solve or at least one sweep run failed: exit 2.
    RunFailed(String),
    /// I/O or worker-pool failure: exit 3.
    Internal(String),
}

impl CliError {
    fn report(&self) -> (u8, &str) {
        match self {
            CliError::Config(m) => (1, m),
            CliError::RunFailed(m) => (2, m),
            CliError::Internal(m) => (3, m),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_mdp(path: &Path) -> Result<TabularMdp, CliError> {
    TabularMdp::from_json(&read_file(path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_trajectories(path: &Path, mdp: &TabularMdp) -> Result<TrajectoryDataset, CliError> {
    TrajectoryDataset::from_jsonl(&read_file(path)?, mdp.gamma, mdp.n_states, mdp.n_actions)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_queries(path: &Path) -> Result<FeedbackDataset, CliError> {
    FeedbackDataset::from_jsonl(&read_file(path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn irl_error(e: IrlError) -> CliError {
    match e {
        IrlError::Config(m) => CliError::Config(m),
        IrlError::Solve(LpStatus::Infeasible) => {
            CliError::RunFailed("polyhedron is empty (infeasible LP)".into())
        }
        IrlError::Solve(s) => CliError::RunFailed(format!("LP solve failed: {s:?}")),
    }
}

fn rlhf_error(e: RlhfError) -> CliError {
    match e {
        RlhfError::Config(m) => CliError::Config(m),
        RlhfError::ZeroLabel(i, eps) => CliError::Config(format!(
            "query {i} carries a zero label, unsatisfiable at eps_r {eps}"
        )),
        RlhfError::Solve(LpStatus::Infeasible) => {
            CliError::RunFailed("polyhedron is empty (infeasible LP)".into())
        }
        RlhfError::Solve(s) => CliError::RunFailed(format!("LP solve failed: {s:?}")),
    }
}

fn reward_json(r: &[f64]) -> String {
    let mut text =
        serde_json::to_string_pretty(&serde_json::json!({ "r": r })).expect("serializes");
    text.push('\n');
    text
}

/// Comparison occupancy: estimated from trajectories when a file is given,
/// the exact uniform-policy occupancy otherwise.
fn comparison_occupancy(
    sub_data: &Option<PathBuf>,
    mdp: &TabularMdp,
) -> Result<Vec<f64>, CliError> {
    match sub_data {
        Some(path) => {
            let ds = load_trajectories(path, mdp)?;
            Ok(rewardlp::data::estimate_occupancy(&ds))
        }
        None => {
            let uniform = Policy::uniform(mdp.n_states, mdp.n_actions);
            occupancy_of_policy(mdp, &uniform)
                .map(|d| d.d)
                .map_err(|e| CliError::RunFailed(format!("uniform occupancy: {e}")))
        }
    }
}

fn cmd_mdp_gen(args: &MdpGenArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig {
        n_states: args.states,
        n_actions: args.actions,
        gamma: args.gamma,
        ..ExperimentConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let mdp = random_mdp(&cfg, &mut ChaCha8Rng::seed_from_u64(args.seed));
    write_output(&args.out, &format!("{}\n", mdp.to_json()))
}

fn cmd_irl_run(args: &IrlRunArgs) -> Result<(), CliError> {
    let mdp = load_mdp(&args.mdp)?;
    let ds = load_trajectories(&args.data, &mdp)?;
    let est = EmpiricalEstimates::from_dataset(&ds);
    let d_sub = comparison_occupancy(&args.sub_data, &mdp)?;
    let eps_g = args.eps_g.unwrap_or(0.01 / (ds.len() as f64).sqrt());
    if eps_g < 0.0 {
        return Err(CliError::Config(format!("eps_g {eps_g} must be nonnegative")));
    }
    let mut rcfg =
        RelaxationConfig::new(args.b, args.delta, eps_g, XMode::default_for(mdp.n_states));
    if let Some(eps_x) = args.eps_x {
        rcfg = rcfg.with_eps_x(eps_x);
    }
    let irl =
        build_irl_set(&est, &mdp.mu0, &rcfg, ds.len(), ds.horizon).map_err(irl_error)?;
    let (r, _, _) = solve_reward_gap_lp(&irl, &est.d_hat, &d_sub).map_err(irl_error)?;
    write_output(&args.out, &reward_json(&r))
}

fn cmd_rlhf_run(args: &RlhfRunArgs) -> Result<(), CliError> {
    let mdp = load_mdp(&args.mdp)?;
    let fb = load_queries(&args.queries)?;
    let mode = match fb.mode {
        FeedbackMode::Discrete => HfMode::Discrete,
        FeedbackMode::Continuous => HfMode::Continuous { c: args.c },
    };
    let hf = build_hf_set(&fb, args.eps_r, mdp.gamma, mdp.n_states, mdp.n_actions, mode)
        .map_err(rlhf_error)?;
    let r = select_reward(&hf.cs, ObjectiveKind::Dummy, mdp.n_sa()).map_err(rlhf_error)?;
    write_output(&args.out, &reward_json(&r))
}

fn cmd_integrate_run(args: &IntegrateRunArgs) -> Result<(), CliError> {
    let mdp = load_mdp(&args.mdp)?;
    let ds = load_trajectories(&args.data, &mdp)?;
    let fb = load_queries(&args.queries)?;
    let est = EmpiricalEstimates::from_dataset(&ds);
    let d_sub = comparison_occupancy(&args.sub_data, &mdp)?;

    let scale = 0.01 / (ds.len() as f64).sqrt();
    let eps_g = args.eps_g.unwrap_or(scale);
    if eps_g < 0.0 {
        return Err(CliError::Config(format!("eps_g {eps_g} must be nonnegative")));
    }
    let eps_r = args.eps_r.unwrap_or(scale);
    let mode = match fb.mode {
        FeedbackMode::Discrete => HfMode::Discrete,
        FeedbackMode::Continuous => HfMode::Continuous { c: args.c },
    };
    let hf = build_hf_set(&fb, eps_r, mdp.gamma, mdp.n_states, mdp.n_actions, mode)
        .map_err(rlhf_error)?;

    let mut rcfg =
        RelaxationConfig::new(args.b, args.delta, eps_g, XMode::default_for(mdp.n_states));
    if let Some(eps_x) = args.eps_x {
        rcfg = rcfg.with_eps_x(eps_x);
    }
    let irl =
        build_irl_set(&est, &mdp.mu0, &rcfg, ds.len(), ds.horizon).map_err(irl_error)?;
    let cs = build_integrated_set(&irl, &hf);
    let r = select_reward(
        &cs,
        ObjectiveKind::RewardGap { d_hat_e: &est.d_hat, d_hat_sub: &d_sub },
        mdp.n_sa(),
    )
    .map_err(rlhf_error)?;
    write_output(&args.out, &reward_json(&r))
}

fn cmd_bandit(args: &BanditArgs) -> Result<(), CliError> {
    if !(args.mass12 > 0.0 && args.mass12 < 1.0) {
        return Err(CliError::Config(format!("mass12 {} outside (0,1)", args.mass12)));
    }
    if args.queries == 0 {
        return Err(CliError::Config("queries must be positive".into()));
    }
    let cfg = BanditConfig {
        mass12: args.mass12,
        n_queries: args.queries,
        eps_r: args.eps_r,
        ..BanditConfig::default()
    };
    let report = run_bandit_counterexample(&cfg, args.seed).map_err(|e| match e {
        BaselineError::Config(m) => CliError::Config(m),
        other => CliError::RunFailed(other.to_string()),
    })?;
    write_output(&args.out, &format!("{}\n", report.to_json()))
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_toml(&read_file(path)?)
            .map_err(|e| CliError::Config(e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }

    let sweep = || run_sweep(&cfg, args.timings);
    let results = match args.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Internal(format!("worker pool: {e}")))?;
            pool.install(sweep)
        }
        None => sweep(),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", args.out.display())))?;
    let write = |name: &str, text: &str| {
        let path = args.out.join(name);
        fs::write(&path, text)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
    };
    write("results.csv", &results_to_csv(&results))?;

    let summary = summarize(&results);
    let irl_rows: Vec<_> =
        summary.iter().filter(|r| r.algorithm.uses_demonstrations()).cloned().collect();
    let hf_rows: Vec<_> =
        summary.iter().filter(|r| !r.algorithm.uses_demonstrations()).cloned().collect();
    if !irl_rows.is_empty() {
        write("irl_errors.svg", &error_curves_svg(&irl_rows, "Learning from demonstrations"))?;
    }
    if !hf_rows.is_empty() {
        write("rlhf_errors.svg", &error_curves_svg(&hf_rows, "Learning from feedback"))?;
    }

    println!("{:<10} {:>6} {:>8} {:>8} {:>5} {:>7}", "algorithm", "N", "mean", "std", "ok", "failed");
    for row in &summary {
        println!(
            "{:<10} {:>6} {:>8.4} {:>8.4} {:>5} {:>7}",
            row.algorithm.name(),
            row.n,
            row.mean,
            row.std,
            row.n_ok,
            row.n_failed
        );
    }

    let failed = results.iter().filter(|r| r.status != rewardlp::experiment::RunStatus::Ok).count();
    if failed > 0 {
        return Err(CliError::RunFailed(format!("{failed} of {} runs failed", results.len())));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Mdp { op: MdpOp::Gen(args) } => cmd_mdp_gen(args),
        Command::Irl { op: IrlOp::Run(args) } => cmd_irl_run(args),
        Command::Rlhf { op: RlhfOp::Run(args) } => cmd_rlhf_run(args),
        Command::Integrate { op: IntegrateOp::Run(args) } => cmd_integrate_run(args),
        Command::Bandit(args) => cmd_bandit(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, message) = e.report();
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
