//! Benchmark harness: seeded sweeps of the reward-learning algorithms over
//! random tabular MDPs, with deterministic CSV and SVG output.
//!
//! Each run draws a fresh MDP (uniform-random `μ0` and `P`, near-tied true
//! rewards), builds an expert that mixes the optimal policy with a
//! suboptimal one, samples offline data, and scores the learned reward by
//! `‖d*(r_true) − d*(r̂)‖₁ ∈ [0, 2]` — the L¹ distance between optimal
//! occupancy measures, zero exactly when the learned reward induces the
//! true optimal policy.
//!
//! Runs are keyed by `(algorithm, N, run_id)`. All algorithms at the same
//! `(N, run_id)` share one *instance*: purpose-split RNG streams (model,
//! demonstrations, comparison rollouts, labels) are derived from the
//! instance seed, so paired algorithms see identical data and sweeps are
//! reproducible byte-for-byte from `(config, base_seed)` alone.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{mle_btl_fit, pessimistic_policy, MleConfig, ParamSpace};
use crate::data::{
    estimate_occupancy, generate_feedback, sample_dataset, sample_query_pairs,
    vectorize_trajectory, EmpiricalEstimates, FeedbackModel, Trajectory,
};
use crate::irl::{build_irl_set, solve_reward_gap_lp, IrlError, RelaxationConfig, XMode};
use crate::lp::LpStatus;
use crate::mdp::{
    l1_occupancy_error, occupancy_of_policy, solve_mdp_dual, MdpError, Policy, TabularMdp,
};
use crate::rlhf::{build_hf_set, build_integrated_set, select_reward, HfMode, ObjectiveKind, RlhfError};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The optimal policy came back mixed at a state, so no single
    /// suboptimal alternative action exists there. The vertex solver makes
    /// this unreachable in practice; the guard keeps it loud if it ever
    /// happens.
    #[error("optimal policy is mixed at state {0}")]
    MixedOptimal(usize),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Algorithms the sweep can run. The first four learn from demonstrations
/// (optionally tightened by preference feedback); the last two learn from
/// preferences alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Reward-gap LP over the demonstration polyhedron, moderate `ε_g`.
    #[serde(rename = "LP-IRL-1")]
    LpIrl1,
    /// Same as `LP-IRL-1` with a tighter `ε_g`.
    #[serde(rename = "LP-IRL-2")]
    LpIrl2,
    /// Demonstration polyhedron intersected with discrete-feedback rows.
    #[serde(rename = "LP-IRL-D")]
    LpIrlD,
    /// Demonstration polyhedron intersected with continuous-feedback rows.
    #[serde(rename = "LP-IRL-C")]
    LpIrlC,
    /// Feedback polyhedron alone, solved with a dummy objective.
    #[serde(rename = "LP-HF")]
    LpHf,
    /// Pessimistic maximum-likelihood baseline over the same feedback.
    #[serde(rename = "MLE-HF")]
    MleHf,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LpIrl1 => "LP-IRL-1",
            Algorithm::LpIrl2 => "LP-IRL-2",
            Algorithm::LpIrlD => "LP-IRL-D",
            Algorithm::LpIrlC => "LP-IRL-C",
            Algorithm::LpHf => "LP-HF",
            Algorithm::MleHf => "MLE-HF",
        }
    }

    /// Whether the algorithm consumes expert demonstrations.
    pub fn uses_demonstrations(self) -> bool {
        matches!(
            self,
            Algorithm::LpIrl1 | Algorithm::LpIrl2 | Algorithm::LpIrlD | Algorithm::LpIrlC
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one run; failures are reported, never dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Infeasible,
    NumericFailure,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Infeasible => "infeasible",
            RunStatus::NumericFailure => "numeric_failure",
        }
    }
}

/// One row of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub n: usize,
    pub run_id: usize,
    /// Instance seed; shared by every algorithm at the same `(N, run_id)`.
    pub seed: u64,
    /// `‖d*(r_true) − d*(r̂)‖₁`, absent when the run failed.
    pub l1_error: Option<f64>,
    pub status: RunStatus,
    /// Zero unless the sweep was asked to measure timings, so that default
    /// output is byte-identical across machines and repetitions.
    pub wall_time_ms: u64,
}

/// Sweep configuration. Every field has a default matching the benchmark
/// setup (ten states, two near-tied actions, γ = 0.95, horizon 20), so an
/// empty TOML document loads the standard experiment.
///
/// The relaxation levels that shrink with the sample budget are stored as
/// scale factors: the per-run level is `scale/√N`. `eps_r_lp_hf` is an
/// absolute level (its strictly negative default forces a separating
/// margin, which is what lets the feedback LP beat the likelihood fit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub horizon: usize,
    /// Sample budgets to sweep (trajectories per run).
    pub n_grid: Vec<usize>,
    /// Independent runs per `(algorithm, N)` cell.
    pub runs: usize,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Importance-ratio radius of the demonstration polyhedron.
    pub b: f64,
    /// Failure probability of the concentration levels.
    pub delta: f64,
    /// `ε_g` scale for LP-IRL-1 and LP-IRL-D.
    pub eps_g_scale_moderate: f64,
    /// `ε_g` scale for LP-IRL-2.
    pub eps_g_scale_tight: f64,
    /// `ε_g` scale for LP-IRL-C.
    pub eps_g_scale_continuous: f64,
    /// `ε_r` scale for LP-IRL-D and LP-IRL-C.
    pub eps_r_scale_integrated: f64,
    /// Absolute `ε_r` for LP-HF.
    pub eps_r_lp_hf: f64,
    /// Range factor of the continuous evaluator: `y ~ U[0, scale·gap]`.
    pub continuous_scale: f64,
    /// Label weight `c` in the continuous feedback error. The demonstration
    /// rows cap how much positive reward the gap inequality admits (the cap
    /// shrinks with `ε_g/ε_x`), so `c` must keep the required margins
    /// `c·y − ε_r` inside that budget or the intersection is empty and every
    /// run reports `infeasible`. The default leaves roughly a 5× margin at
    /// each sample size in the default grid.
    pub continuous_c: f64,
    pub mle_step_size: f64,
    pub mle_max_iters: usize,
    /// Radius of the zero-sum likelihood parameter ball (only 1 is
    /// implemented; the fit projects onto the unit ball).
    pub mle_b: f64,
    /// Ridge added to the query covariance before inverting.
    pub lambda: f64,
    /// Weight of the pessimism penalty in the baseline's policy score. The
    /// default is the dimension-scaled confidence width `√(|S||A| + ln(1/δ))`
    /// of the standard 10×2 configuration.
    pub c_pess: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_states: 10,
            n_actions: 2,
            gamma: 0.95,
            horizon: 20,
            n_grid: vec![10, 50, 200, 1000],
            runs: 200,
            base_seed: 0,
            algorithms: vec![
                Algorithm::LpIrl1,
                Algorithm::LpIrl2,
                Algorithm::LpIrlD,
                Algorithm::LpIrlC,
                Algorithm::LpHf,
                Algorithm::MleHf,
            ],
            b: 100.0,
            delta: 0.1,
            eps_g_scale_moderate: 0.01,
            eps_g_scale_tight: 0.001,
            eps_g_scale_continuous: 0.1,
            eps_r_scale_integrated: 0.01,
            eps_r_lp_hf: -0.01,
            continuous_scale: 0.2,
            continuous_c: 0.01,
            mle_step_size: 0.01,
            mle_max_iters: 100_000,
            mle_b: 1.0,
            lambda: 0.1,
            c_pess: (20.0 + 10.0_f64.ln()).sqrt(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML document; missing keys take defaults,
    /// unknown keys are rejected.
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| ExperimentError::Config(format!("TOML parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::Config(msg));
        if self.n_states == 0 {
            return fail("n_states must be positive".into());
        }
        if self.n_actions < 2 {
            return fail("n_actions must be at least 2 (the expert mixes in a suboptimal action)".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma {} outside (0,1)", self.gamma));
        }
        if self.horizon == 0 {
            return fail("horizon must be positive".into());
        }
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n == 0) {
            return fail("n_grid must list positive sample sizes".into());
        }
        let mut sorted = self.n_grid.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.n_grid.len() {
            return fail("n_grid must not contain duplicates".into());
        }
        if self.runs == 0 {
            return fail("runs must be positive".into());
        }
        if self.algorithms.is_empty() {
            return fail("no algorithms selected".into());
        }
        if self.algorithms.iter().any(|a| a.uses_demonstrations()) && self.n_states > 20 {
            return fail(format!(
                "demonstration algorithms span 2^n_states sign vectors; n_states {} > 20",
                self.n_states
            ));
        }
        if self.algorithms.contains(&Algorithm::MleHf) {
            let policies = (self.n_actions as f64).powi(self.n_states as i32);
            if policies > (1u64 << 14) as f64 {
                return fail(format!(
                    "MLE-HF enumerates n_actions^n_states deterministic policies; {policies} is too many"
                ));
            }
        }
        if self.b < 1.0 {
            return fail(format!("b {} must be at least 1", self.b));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta {} outside (0,1)", self.delta));
        }
        for (name, v) in [
            ("eps_g_scale_moderate", self.eps_g_scale_moderate),
            ("eps_g_scale_tight", self.eps_g_scale_tight),
            ("eps_g_scale_continuous", self.eps_g_scale_continuous),
            ("eps_r_scale_integrated", self.eps_r_scale_integrated),
            ("continuous_c", self.continuous_c),
            ("c_pess", self.c_pess),
        ] {
            if v < 0.0 {
                return fail(format!("{name} {v} must be nonnegative"));
            }
        }
        for (name, v) in [
            ("continuous_scale", self.continuous_scale),
            ("mle_step_size", self.mle_step_size),
            ("lambda", self.lambda),
        ] {
            if v <= 0.0 {
                return fail(format!("{name} {v} must be positive"));
            }
        }
        if self.mle_b != 1.0 {
            return fail(format!(
                "mle_b {} must be 1.0 (the likelihood parameter space is the zero-sum unit ball)",
                self.mle_b
            ));
        }
        if self.mle_max_iters == 0 {
            return fail("mle_max_iters must be positive".into());
        }
        Ok(())
    }

    /// Copy restricted to the given algorithm subset, preserving order.
    fn restricted_to(&self, keep: impl Fn(Algorithm) -> bool) -> ExperimentConfig {
        let mut cfg = self.clone();
        cfg.algorithms.retain(|&a| keep(a));
        cfg
    }
}

/// Draws an MDP with uniform-[0,1]-normalized `μ0` and transition rows and
/// the near-tied true reward `r(s, a_i) = 1 − 0.1·i` (floored at −1).
///
/// Draw order is part of the determinism contract: `μ0` first, then the
/// transition rows in `(s, a)` order.
pub fn random_mdp(cfg: &ExperimentConfig, rng: &mut impl Rng) -> TabularMdp {
    let normalize = |v: &mut Vec<f64>| {
        let s: f64 = v.iter().sum();
        for x in v.iter_mut() {
            *x /= s;
        }
    };
    let mut mu0: Vec<f64> = (0..cfg.n_states).map(|_| rng.random::<f64>()).collect();
    normalize(&mut mu0);
    let p: Vec<Vec<Vec<f64>>> = (0..cfg.n_states)
        .map(|_| {
            (0..cfg.n_actions)
                .map(|_| {
                    let mut row: Vec<f64> =
                        (0..cfg.n_states).map(|_| rng.random::<f64>()).collect();
                    normalize(&mut row);
                    row
                })
                .collect()
        })
        .collect();
    let r: Vec<f64> = (0..cfg.n_states)
        .flat_map(|_| (0..cfg.n_actions).map(|a| (1.0 - 0.1 * a as f64).max(-1.0)))
        .collect();
    TabularMdp {
        n_states: cfg.n_states,
        n_actions: cfg.n_actions,
        gamma: cfg.gamma,
        mu0,
        p,
        r: Some(r),
    }
}

/// Builds the demonstration policy: a 0.52/0.48 mixture of the optimal
/// deterministic policy (from the occupancy LP's vertex) and the
/// "next action over" alternative, which is suboptimal because actions are
/// ordered by decreasing true reward.
pub fn build_expert(mdp: &TabularMdp) -> Result<Policy, ExperimentError> {
    let r_true = mdp
        .r
        .as_ref()
        .ok_or_else(|| ExperimentError::Config("MDP carries no true reward".into()))?;
    let d_star = solve_mdp_dual(mdp, r_true)?;

    // A vertex puts positive mass on exactly one action per reachable
    // state; two clearly positive actions would mean a mixed optimum.
    const MASS_TOL: f64 = 1e-9;
    let mut star = Vec::with_capacity(mdp.n_states);
    for s in 0..mdp.n_states {
        let row = &d_star.d[s * mdp.n_actions..(s + 1) * mdp.n_actions];
        let positive: Vec<usize> =
            (0..mdp.n_actions).filter(|&a| row[a] > MASS_TOL).collect();
        match positive.len() {
            // Unreachable state: any action is compatible with optimality.
            0 => star.push(0),
            1 => star.push(positive[0]),
            _ => return Err(ExperimentError::MixedOptimal(s)),
        }
    }
    let pi_star = Policy::deterministic(&star, mdp.n_actions);
    let alt: Vec<usize> = star.iter().map(|&a| (a + 1) % mdp.n_actions).collect();
    let pi_alt = Policy::deterministic(&alt, mdp.n_actions);
    Ok(pi_star.mixture(&pi_alt, 0.52))
}

/// Purpose indices of the per-instance RNG streams.
const STREAM_MODEL: u64 = 0;
const STREAM_DEMOS: u64 = 1;
const STREAM_ROLLOUTS: u64 = 2;
const STREAM_LABELS: u64 = 3;

fn stream_rng(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

fn irl_failure(e: IrlError) -> RunStatus {
    match e {
        IrlError::Solve(LpStatus::Infeasible) => RunStatus::Infeasible,
        _ => RunStatus::NumericFailure,
    }
}

fn rlhf_failure(e: RlhfError) -> RunStatus {
    match e {
        RlhfError::Solve(LpStatus::Infeasible) => RunStatus::Infeasible,
        _ => RunStatus::NumericFailure,
    }
}

/// Expert/exploratory trajectory split: two thirds of the budget
/// demonstrates, the remainder explores under the uniform policy.
fn split_budget(n: usize) -> (usize, usize) {
    let n_e = (2 * n).div_ceil(3);
    (n_e, n - n_e)
}

fn score(mdp: &TabularMdp, r_true: &[f64], r_hat: &[f64]) -> Result<f64, RunStatus> {
    l1_occupancy_error(mdp, r_true, r_hat)
        .map(|e| e.clamp(0.0, 2.0))
        .map_err(|_| RunStatus::NumericFailure)
}

/// Demonstration-only run (LP-IRL-1/2): build the polyhedron from the
/// expert trajectories and maximize the reward gap against the uniform
/// policy's estimated occupancy.
fn run_demo_lp(
    cfg: &ExperimentConfig,
    mdp: &TabularMdp,
    pi_e: &Policy,
    n: usize,
    seed: u64,
    eps_g_scale: f64,
) -> Result<f64, RunStatus> {
    let r_true = mdp.r.as_ref().expect("reward set by random_mdp");
    let (n_e, n_u) = split_budget(n);
    let ds_e = sample_dataset(mdp, pi_e, cfg.horizon, n_e, &mut stream_rng(seed, STREAM_DEMOS));
    let est = EmpiricalEstimates::from_dataset(&ds_e);
    let d_sub = if n_u > 0 {
        let uniform = Policy::uniform(mdp.n_states, mdp.n_actions);
        let ds_u =
            sample_dataset(mdp, &uniform, cfg.horizon, n_u, &mut stream_rng(seed, STREAM_ROLLOUTS));
        estimate_occupancy(&ds_u)
    } else {
        vec![0.0; mdp.n_sa()]
    };
    let eps_g = eps_g_scale / (n as f64).sqrt();
    let rcfg = RelaxationConfig::new(cfg.b, cfg.delta, eps_g, XMode::SignVectors);
    let irl = build_irl_set(&est, &mdp.mu0, &rcfg, n_e, cfg.horizon).map_err(irl_failure)?;
    let (r_hat, _, _) = solve_reward_gap_lp(&irl, &est.d_hat, &d_sub).map_err(irl_failure)?;
    score(mdp, r_true, &r_hat)
}

/// Integrated run (LP-IRL-D/C): the demonstration polyhedron is tightened
/// by feedback rows built from queries over the exploratory trajectories.
fn run_integrated_lp(
    cfg: &ExperimentConfig,
    mdp: &TabularMdp,
    pi_e: &Policy,
    n: usize,
    seed: u64,
    eps_g_scale: f64,
    continuous: bool,
) -> Result<f64, RunStatus> {
    let r_true = mdp.r.as_ref().expect("reward set by random_mdp");
    let (n_e, n_u) = split_budget(n);
    let ds_e = sample_dataset(mdp, pi_e, cfg.horizon, n_e, &mut stream_rng(seed, STREAM_DEMOS));
    let est = EmpiricalEstimates::from_dataset(&ds_e);

    let uniform = Policy::uniform(mdp.n_states, mdp.n_actions);
    let (d_sub, pairs) = if n_u > 0 {
        let ds_u =
            sample_dataset(mdp, &uniform, cfg.horizon, n_u, &mut stream_rng(seed, STREAM_ROLLOUTS));
        let pairs: Vec<(Trajectory, Trajectory)> = ds_u
            .trajectories
            .chunks_exact(2)
            .map(|pair| (pair[0].clone(), pair[1].clone()))
            .collect();
        (estimate_occupancy(&ds_u), pairs)
    } else {
        (vec![0.0; mdp.n_sa()], Vec::new())
    };

    let (model, mode) = if continuous {
        (
            FeedbackModel::ContinuousUniform { scale: cfg.continuous_scale },
            HfMode::Continuous { c: cfg.continuous_c },
        )
    } else {
        (FeedbackModel::Btl, HfMode::Discrete)
    };
    let fb = generate_feedback(
        &pairs,
        r_true,
        cfg.gamma,
        mdp.n_states,
        mdp.n_actions,
        model,
        &mut stream_rng(seed, STREAM_LABELS),
    );
    let eps_r = cfg.eps_r_scale_integrated / (n as f64).sqrt();
    let hf = build_hf_set(&fb, eps_r, cfg.gamma, mdp.n_states, mdp.n_actions, mode)
        .map_err(rlhf_failure)?;

    let eps_g = eps_g_scale / (n as f64).sqrt();
    let rcfg = RelaxationConfig::new(cfg.b, cfg.delta, eps_g, XMode::SignVectors);
    let irl = build_irl_set(&est, &mdp.mu0, &rcfg, n_e, cfg.horizon).map_err(irl_failure)?;
    let cs = build_integrated_set(&irl, &hf);
    let r_hat = select_reward(
        &cs,
        ObjectiveKind::RewardGap { d_hat_e: &est.d_hat, d_hat_sub: &d_sub },
        mdp.n_sa(),
    )
    .map_err(rlhf_failure)?;
    score(mdp, r_true, &r_hat)
}

/// Pairs the sample budget into greedy-labeled queries shared by the two
/// feedback-only algorithms.
fn feedback_queries(
    cfg: &ExperimentConfig,
    mdp: &TabularMdp,
    n: usize,
    seed: u64,
) -> crate::data::FeedbackDataset {
    let r_true = mdp.r.as_ref().expect("reward set by random_mdp");
    let uniform = Policy::uniform(mdp.n_states, mdp.n_actions);
    let pairs = sample_query_pairs(
        mdp,
        &uniform,
        cfg.horizon,
        n / 2,
        &mut stream_rng(seed, STREAM_ROLLOUTS),
    );
    generate_feedback(
        &pairs,
        r_true,
        cfg.gamma,
        mdp.n_states,
        mdp.n_actions,
        FeedbackModel::Greedy,
        &mut stream_rng(seed, STREAM_LABELS),
    )
}

/// Feedback-only LP run: a strictly negative `ε_r` forces every comparison
/// to hold with a margin, and any point of the resulting polyhedron is
/// taken (dummy objective).
fn run_feedback_lp(
    cfg: &ExperimentConfig,
    mdp: &TabularMdp,
    n: usize,
    seed: u64,
) -> Result<f64, RunStatus> {
    let r_true = mdp.r.as_ref().expect("reward set by random_mdp");
    let fb = feedback_queries(cfg, mdp, n, seed);
    let hf = build_hf_set(
        &fb,
        cfg.eps_r_lp_hf,
        cfg.gamma,
        mdp.n_states,
        mdp.n_actions,
        HfMode::Discrete,
    )
    .map_err(rlhf_failure)?;
    let r_hat = select_reward(&hf.cs, ObjectiveKind::Dummy, mdp.n_sa()).map_err(rlhf_failure)?;
    score(mdp, r_true, &r_hat)
}

/// Pessimistic likelihood baseline: fit the logistic choice model over the
/// same queries, then pick the deterministic policy maximizing the fitted
/// score minus a coverage penalty; the error is measured at that policy's
/// occupancy.
fn run_mle_baseline(
    cfg: &ExperimentConfig,
    mdp: &TabularMdp,
    n: usize,
    seed: u64,
) -> Result<f64, RunStatus> {
    let r_true = mdp.r.as_ref().expect("reward set by random_mdp");
    let fb = feedback_queries(cfg, mdp, n, seed);
    let mle_cfg = MleConfig {
        step_size: cfg.mle_step_size,
        max_iters: cfg.mle_max_iters,
        param_space: ParamSpace::SimplexBall,
        lambda: cfg.lambda,
        c_pess: cfg.c_pess,
    };
    let fit = mle_btl_fit(&fb, cfg.gamma, mdp.n_states, mdp.n_actions, &mle_cfg);

    // Winner-minus-loser embedding gap of each query, the covariance
    // features of the pessimism penalty.
    let features: Vec<Vec<f64>> = fb
        .queries
        .iter()
        .map(|q| {
            let psi1 = vectorize_trajectory(&q.traj1, cfg.gamma, mdp.n_states, mdp.n_actions);
            let psi2 = vectorize_trajectory(&q.traj2, cfg.gamma, mdp.n_states, mdp.n_actions);
            match q.y {
                crate::data::Label::Discrete(2) => {
                    psi2.iter().zip(&psi1).map(|(b, a)| b - a).collect()
                }
                _ => psi1.iter().zip(&psi2).map(|(a, b)| a - b).collect(),
            }
        })
        .collect();

    // Candidate directions: occupancies of every deterministic policy,
    // enumerated with state 0 as the least-significant digit.
    let n_policies = mdp.n_actions.pow(mdp.n_states as u32);
    let mut candidates = Vec::with_capacity(n_policies);
    for idx in 0..n_policies {
        let mut rem = idx;
        let actions: Vec<usize> = (0..mdp.n_states)
            .map(|_| {
                let a = rem % mdp.n_actions;
                rem /= mdp.n_actions;
                a
            })
            .collect();
        let pi = Policy::deterministic(&actions, mdp.n_actions);
        let d = occupancy_of_policy(mdp, &pi).map_err(|_| RunStatus::NumericFailure)?;
        candidates.push(d.d);
    }
    let best = pessimistic_policy(&fit.theta, &candidates, &features, cfg.lambda, cfg.c_pess)
        .map_err(|_| RunStatus::NumericFailure)?;

    let d_true = solve_mdp_dual(mdp, r_true).map_err(|_| RunStatus::NumericFailure)?;
    let err: f64 =
        d_true.d.iter().zip(&candidates[best]).map(|(a, b)| (a - b).abs()).sum();
    Ok(err.clamp(0.0, 2.0))
}

fn execute_run(cfg: &ExperimentConfig, alg: Algorithm, n: usize, seed: u64) -> Result<f64, RunStatus> {
    let mdp = random_mdp(cfg, &mut stream_rng(seed, STREAM_MODEL));
    match alg {
        Algorithm::LpIrl1 | Algorithm::LpIrl2 | Algorithm::LpIrlD | Algorithm::LpIrlC => {
            let pi_e = build_expert(&mdp).map_err(|_| RunStatus::NumericFailure)?;
            match alg {
                Algorithm::LpIrl1 => {
                    run_demo_lp(cfg, &mdp, &pi_e, n, seed, cfg.eps_g_scale_moderate)
                }
                Algorithm::LpIrl2 => run_demo_lp(cfg, &mdp, &pi_e, n, seed, cfg.eps_g_scale_tight),
                Algorithm::LpIrlD => {
                    run_integrated_lp(cfg, &mdp, &pi_e, n, seed, cfg.eps_g_scale_moderate, false)
                }
                Algorithm::LpIrlC => {
                    run_integrated_lp(cfg, &mdp, &pi_e, n, seed, cfg.eps_g_scale_continuous, true)
                }
                _ => unreachable!(),
            }
        }
        Algorithm::LpHf => run_feedback_lp(cfg, &mdp, n, seed),
        Algorithm::MleHf => run_mle_baseline(cfg, &mdp, n, seed),
    }
}

fn run_single(
    cfg: &ExperimentConfig,
    alg: Algorithm,
    n_index: usize,
    run_id: usize,
    timings: bool,
) -> RunResult {
    let n = cfg.n_grid[n_index];
    let instance = (run_id * cfg.n_grid.len() + n_index) as u64;
    let seed = cfg.base_seed.wrapping_add(instance);
    let start = Instant::now();
    let outcome = execute_run(cfg, alg, n, seed);
    let wall_time_ms = if timings { start.elapsed().as_millis() as u64 } else { 0 };
    match outcome {
        Ok(err) => RunResult {
            algorithm: alg,
            n,
            run_id,
            seed,
            l1_error: Some(err),
            status: RunStatus::Ok,
            wall_time_ms,
        },
        Err(status) => RunResult {
            algorithm: alg,
            n,
            run_id,
            seed,
            l1_error: None,
            status,
            wall_time_ms,
        },
    }
}

/// Runs the full sweep: every `(algorithm, N, run_id)` cell in that nesting
/// order, executed on the global worker pool but gathered deterministically.
/// With `timings` false (the default everywhere) the output is
/// byte-reproducible from `(config, base_seed)`.
pub fn run_sweep(cfg: &ExperimentConfig, timings: bool) -> Result<Vec<RunResult>, ExperimentError> {
    cfg.validate()?;
    let mut keys = Vec::with_capacity(cfg.algorithms.len() * cfg.n_grid.len() * cfg.runs);
    for &alg in &cfg.algorithms {
        for n_index in 0..cfg.n_grid.len() {
            for run_id in 0..cfg.runs {
                keys.push((alg, n_index, run_id));
            }
        }
    }
    Ok(keys
        .into_par_iter()
        .map(|(alg, n_index, run_id)| run_single(cfg, alg, n_index, run_id, timings))
        .collect())
}

/// Sweep restricted to the demonstration-based algorithms in the config.
pub fn run_irl_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>, ExperimentError> {
    run_sweep(&cfg.restricted_to(|a| a.uses_demonstrations()), false)
}

/// Sweep restricted to the feedback-only algorithms in the config.
pub fn run_rlhf_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>, ExperimentError> {
    run_sweep(&cfg.restricted_to(|a| !a.uses_demonstrations()), false)
}

/// Per-`(algorithm, N)` error statistics; population standard deviation.
#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub n: usize,
    /// Mean over successful runs; NaN when none succeeded.
    pub mean: f64,
    /// Population standard deviation over successful runs.
    pub std: f64,
    pub n_ok: usize,
    pub n_failed: usize,
}

/// Groups results by `(algorithm, N)` in order of first appearance; failed
/// runs are excluded from the statistics and counted separately.
pub fn summarize(results: &[RunResult]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Algorithm, usize)> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut failed: Vec<usize> = Vec::new();
    for r in results {
        let key = (r.algorithm, r.n);
        let slot = match keys.iter().position(|&k| k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                values.push(Vec::new());
                failed.push(0);
                keys.len() - 1
            }
        };
        match r.l1_error {
            Some(e) => values[slot].push(e),
            None => failed[slot] += 1,
        }
    }
    keys.iter()
        .zip(&values)
        .zip(&failed)
        .map(|((&(algorithm, n), vals), &n_failed)| {
            let n_ok = vals.len();
            let (mean, std) = if n_ok == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = vals.iter().sum::<f64>() / n_ok as f64;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n_ok as f64;
                (mean, var.sqrt())
            };
            SummaryRow { algorithm, n, mean, std, n_ok, n_failed }
        })
        .collect()
}

/// Renders results as CSV with the exact header
/// `algorithm,N,run_id,seed,l1_error,status,wall_time_ms`. Failed runs
/// write `NaN` in the error column.
pub fn results_to_csv(results: &[RunResult]) -> String {
    let mut out = String::from("algorithm,N,run_id,seed,l1_error,status,wall_time_ms\n");
    for r in results {
        let err = match r.l1_error {
            Some(e) => format!("{e}"),
            None => "NaN".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.algorithm,
            r.n,
            r.run_id,
            r.seed,
            err,
            r.status.name(),
            r.wall_time_ms
        ));
    }
    out
}

const SVG_PALETTE: [&str; 6] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders mean-error curves (one per algorithm, log-scaled sample axis,
/// ±std whiskers) as a self-contained SVG document. Output is a pure
/// function of the summary rows.
pub fn error_curves_svg(summary: &[SummaryRow], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 56.0;
    const RIGHT: f64 = 612.0;
    const TOP: f64 = 44.0;
    const BOTTOM: f64 = 372.0;

    let mut ns: Vec<usize> = Vec::new();
    let mut algs: Vec<Algorithm> = Vec::new();
    for row in summary {
        if !ns.contains(&row.n) {
            ns.push(row.n);
        }
        if !algs.contains(&row.algorithm) {
            algs.push(row.algorithm);
        }
    }
    ns.sort_unstable();
    let (lo, hi) = match (ns.first(), ns.last()) {
        (Some(&a), Some(&b)) if a != b => ((a as f64).ln(), (b as f64).ln()),
        _ => (0.0, 1.0),
    };
    let x_of = |n: usize| {
        if ns.len() <= 1 {
            (LEFT + RIGHT) / 2.0
        } else {
            LEFT + (RIGHT - LEFT) * ((n as f64).ln() - lo) / (hi - lo)
        }
    };
    let y_of = |e: f64| BOTTOM - (BOTTOM - TOP) * (e.clamp(0.0, 2.0) / 2.0);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>\n\
         <text x=\"{:.2}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n",
        (LEFT + RIGHT) / 2.0
    );

    // Horizontal gridlines and labels at fixed error levels.
    for i in 0..=4 {
        let e = 0.5 * i as f64;
        let y = y_of(e);
        s.push_str(&format!(
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{RIGHT}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" \
             text-anchor=\"end\">{e:.1}</text>\n",
            LEFT - 8.0,
            y + 4.0
        ));
    }
    // Sample-size ticks.
    for &n in &ns {
        let x = x_of(n);
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{BOTTOM}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#999999\"/>\n\
             <text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{n}</text>\n",
            BOTTOM + 5.0,
            BOTTOM + 20.0
        ));
    }
    // Axes and axis titles.
    s.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" stroke=\"#333333\"/>\n\
         <line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" stroke=\"#333333\"/>\n\
         <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">sample size N</text>\n\
         <text x=\"16\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.2})\">L1 error</text>\n",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 38.0,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    ));

    for (i, &alg) in algs.iter().enumerate() {
        let color = SVG_PALETTE[i % SVG_PALETTE.len()];
        let rows: Vec<&SummaryRow> = ns
            .iter()
            .filter_map(|&n| {
                summary.iter().find(|r| r.algorithm == alg && r.n == n && r.n_ok > 0)
            })
            .collect();
        if !rows.is_empty() {
            let points: Vec<String> = rows
                .iter()
                .map(|r| format!("{:.2},{:.2}", x_of(r.n), y_of(r.mean)))
                .collect();
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                points.join(" ")
            ));
            for r in &rows {
                let x = x_of(r.n);
                let (y_lo, y_hi) = (y_of(r.mean - r.std), y_of(r.mean + r.std));
                s.push_str(&format!(
                    "<line x1=\"{x:.2}\" y1=\"{y_hi:.2}\" x2=\"{x:.2}\" y2=\"{y_lo:.2}\" \
                     stroke=\"{color}\" stroke-width=\"1\"/>\n\
                     <circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                    y_of(r.mean)
                ));
            }
        }
        // Legend entry (drawn even when every run failed, with a note).
        let ly = TOP + 8.0 + 16.0 * i as f64;
        let note = if rows.is_empty() { " (no successful runs)" } else { "" };
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"1.8\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{alg}{note}</text>\n",
            RIGHT - 140.0,
            RIGHT - 118.0,
            RIGHT - 112.0,
            ly + 4.0
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            n_states: 3,
            n_grid: vec![6],
            runs: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_config_values() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.n_states, 10);
        assert_eq!(cfg.n_actions, 2);
        assert_eq!(cfg.gamma, 0.95);
        assert_eq!(cfg.horizon, 20);
        assert_eq!(cfg.n_grid, vec![10, 50, 200, 1000]);
        assert_eq!(cfg.runs, 200);
        assert_eq!(cfg.algorithms.len(), 6);
        assert_eq!(cfg.b, 100.0);
        assert_eq!(cfg.delta, 0.1);
        assert_eq!(cfg.eps_g_scale_moderate, 0.01);
        assert_eq!(cfg.eps_g_scale_tight, 0.001);
        assert_eq!(cfg.eps_g_scale_continuous, 0.1);
        assert_eq!(cfg.eps_r_scale_integrated, 0.01);
        assert_eq!(cfg.eps_r_lp_hf, -0.01);
        assert_eq!(cfg.continuous_scale, 0.2);
        assert_eq!(cfg.continuous_c, 0.01);
        assert_eq!(cfg.mle_step_size, 0.01);
        assert_eq!(cfg.mle_max_iters, 100_000);
        assert_eq!(cfg.mle_b, 1.0);
        assert_eq!(cfg.lambda, 0.1);
        assert_eq!(cfg.c_pess, (20.0 + 10.0_f64.ln()).sqrt());
        cfg.validate().unwrap();
        // An empty document loads the full default configuration.
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn config_toml_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_grid = vec![5, 25];
        cfg.base_seed = 77;
        cfg.algorithms = vec![Algorithm::LpHf, Algorithm::LpIrl1];
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
        assert!(text.contains("\"LP-HF\""));
    }

    #[test]
    fn invalid_configs_rejected() {
        let cases: Vec<Box<dyn Fn(&mut ExperimentConfig)>> = vec![
            Box::new(|c| c.gamma = 1.2),
            Box::new(|c| c.runs = 0),
            Box::new(|c| c.n_grid = vec![]),
            Box::new(|c| c.n_grid = vec![10, 10]),
            Box::new(|c| c.n_actions = 1),
            Box::new(|c| c.b = 0.5),
            Box::new(|c| c.lambda = 0.0),
            Box::new(|c| c.mle_b = 2.0),
            Box::new(|c| c.algorithms = vec![]),
        ];
        for mutate in cases {
            let mut cfg = ExperimentConfig::default();
            mutate(&mut cfg);
            assert!(cfg.validate().is_err());
        }
        assert!(ExperimentConfig::from_toml("no_such_key = 3").is_err());
        assert!(ExperimentConfig::from_toml("algorithms = [\"LP-XYZ\"]").is_err());
    }

    #[test]
    fn random_mdp_valid_and_deterministic() {
        let cfg = ExperimentConfig::default();
        let mdp = random_mdp(&cfg, &mut stream_rng(3, STREAM_MODEL));
        mdp.validate().unwrap();
        let r = mdp.r.as_ref().unwrap();
        for s in 0..cfg.n_states {
            assert_eq!(r[mdp.sa(s, 0)], 1.0);
            assert_eq!(r[mdp.sa(s, 1)], 0.9);
        }
        let again = random_mdp(&cfg, &mut stream_rng(3, STREAM_MODEL));
        assert_eq!(mdp, again);
        let other = random_mdp(&cfg, &mut stream_rng(4, STREAM_MODEL));
        assert_ne!(mdp, other);
    }

    #[test]
    fn expert_mixes_optimal_and_alternative() {
        let cfg = ExperimentConfig::default();
        let mdp = random_mdp(&cfg, &mut stream_rng(5, STREAM_MODEL));
        let pi_e = build_expert(&mdp).unwrap();
        let d_star = solve_mdp_dual(&mdp, mdp.r.as_ref().unwrap()).unwrap();
        for s in 0..cfg.n_states {
            let mut row = pi_e.pi[s].clone();
            row.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert_close(row[0], 0.52, 1e-12);
            assert_close(row[1], 0.48, 1e-12);
            // The heavier action is the optimal one.
            let a_star = (0..cfg.n_actions)
                .max_by(|&a, &b| {
                    d_star.d[mdp.sa(s, a)].partial_cmp(&d_star.d[mdp.sa(s, b)]).unwrap()
                })
                .unwrap();
            assert_close(pi_e.pi[s][a_star], 0.52, 1e-12);
        }
        // The expert's occupancy favors the optimal action in every state.
        let d_e = occupancy_of_policy(&mdp, &pi_e).unwrap();
        for s in 0..cfg.n_states {
            let a_star = if pi_e.pi[s][0] > pi_e.pi[s][1] { 0 } else { 1 };
            assert!(d_e.d[mdp.sa(s, a_star)] > d_e.d[mdp.sa(s, 1 - a_star)]);
        }
    }

    #[test]
    fn single_run_smoke() {
        let cfg = ExperimentConfig {
            n_grid: vec![10],
            runs: 1,
            algorithms: vec![Algorithm::LpIrl1],
            ..ExperimentConfig::default()
        };
        let results = run_irl_experiment(&cfg).unwrap();
        assert_eq!(results.len(), 1);
        let r = &results[0];
        assert_eq!(r.algorithm, Algorithm::LpIrl1);
        assert_eq!(r.n, 10);
        assert_eq!(r.run_id, 0);
        assert_eq!(r.status, RunStatus::Ok);
        let err = r.l1_error.unwrap();
        assert!((0.0..=2.0).contains(&err), "error {err} outside [0,2]");
    }

    #[test]
    fn every_algorithm_produces_rows() {
        let cfg = ExperimentConfig { n_grid: vec![6], runs: 2, ..ExperimentConfig::default() };
        let results = run_sweep(&cfg, false).unwrap();
        assert_eq!(results.len(), 12);
        // Rows come back in (algorithm, N, run) order.
        let mut k = 0;
        for &alg in &cfg.algorithms {
            for run_id in 0..cfg.runs {
                assert_eq!(results[k].algorithm, alg);
                assert_eq!(results[k].run_id, run_id);
                k += 1;
            }
        }
        for r in &results {
            assert_eq!(r.l1_error.is_none(), r.status != RunStatus::Ok);
            if let Some(e) = r.l1_error {
                assert!((0.0..=2.0).contains(&e));
            }
        }
    }

    #[test]
    fn paired_algorithms_share_instance_seeds() {
        let cfg = ExperimentConfig {
            n_grid: vec![6, 9],
            runs: 2,
            algorithms: vec![Algorithm::LpHf, Algorithm::MleHf],
            n_states: 3,
            ..ExperimentConfig::default()
        };
        let results = run_sweep(&cfg, false).unwrap();
        let seed_of = |alg: Algorithm, n: usize, run_id: usize| {
            results
                .iter()
                .find(|r| r.algorithm == alg && r.n == n && r.run_id == run_id)
                .unwrap()
                .seed
        };
        for &n in &cfg.n_grid {
            for run_id in 0..cfg.runs {
                assert_eq!(
                    seed_of(Algorithm::LpHf, n, run_id),
                    seed_of(Algorithm::MleHf, n, run_id)
                );
            }
        }
        // Distinct instances get distinct seeds.
        assert_ne!(seed_of(Algorithm::LpHf, 6, 0), seed_of(Algorithm::LpHf, 9, 0));
        assert_ne!(seed_of(Algorithm::LpHf, 6, 0), seed_of(Algorithm::LpHf, 6, 1));
    }

    #[test]
    fn summary_statistics_basics() {
        let row = |err: Option<f64>, status: RunStatus| RunResult {
            algorithm: Algorithm::LpHf,
            n: 10,
            run_id: 0,
            seed: 0,
            l1_error: err,
            status,
            wall_time_ms: 0,
        };
        let single = summarize(&[row(Some(1.25), RunStatus::Ok)]);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].mean, 1.25);
        assert_eq!(single[0].std, 0.0);
        assert_eq!((single[0].n_ok, single[0].n_failed), (1, 0));

        let pair = summarize(&[row(Some(0.0), RunStatus::Ok), row(Some(2.0), RunStatus::Ok)]);
        assert_eq!(pair[0].mean, 1.0);
        assert_eq!(pair[0].std, 1.0);

        let with_failures = summarize(&[
            row(Some(1.0), RunStatus::Ok),
            row(None, RunStatus::Infeasible),
            row(None, RunStatus::NumericFailure),
        ]);
        assert_eq!(with_failures[0].mean, 1.0);
        assert_eq!((with_failures[0].n_ok, with_failures[0].n_failed), (1, 2));

        let none = summarize(&[row(None, RunStatus::Infeasible)]);
        assert!(none[0].mean.is_nan());
    }

    #[test]
    fn summary_matches_two_pass_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let results: Vec<RunResult> = (0..40)
            .map(|i| RunResult {
                algorithm: Algorithm::LpIrl1,
                n: 50,
                run_id: i,
                seed: i as u64,
                l1_error: Some(rng.random_range(0.0..2.0)),
                status: RunStatus::Ok,
                wall_time_ms: 0,
            })
            .collect();
        let summary = summarize(&results);
        let vals: Vec<f64> = results.iter().map(|r| r.l1_error.unwrap()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert_close(summary[0].mean, mean, 1e-12);
        assert_close(summary[0].std, var.sqrt(), 1e-12);
    }

    #[test]
    fn csv_header_and_determinism() {
        let cfg = ExperimentConfig {
            algorithms: vec![Algorithm::LpHf],
            ..tiny_config()
        };
        let a = results_to_csv(&run_sweep(&cfg, false).unwrap());
        let b = results_to_csv(&run_sweep(&cfg, false).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("algorithm,N,run_id,seed,l1_error,status,wall_time_ms\n"));
        assert_eq!(a.lines().count(), 1 + 2);
    }

    #[test]
    fn csv_row_formatting() {
        let results = vec![
            RunResult {
                algorithm: Algorithm::LpHf,
                n: 10,
                run_id: 0,
                seed: 42,
                l1_error: Some(1.5),
                status: RunStatus::Ok,
                wall_time_ms: 0,
            },
            RunResult {
                algorithm: Algorithm::MleHf,
                n: 50,
                run_id: 3,
                seed: 7,
                l1_error: None,
                status: RunStatus::NumericFailure,
                wall_time_ms: 12,
            },
        ];
        let csv = results_to_csv(&results);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "LP-HF,10,0,42,1.5,ok,0");
        assert_eq!(lines[2], "MLE-HF,50,3,7,NaN,numeric_failure,12");
    }

    #[test]
    fn svg_curves_wellformed() {
        let summary = vec![
            SummaryRow {
                algorithm: Algorithm::LpHf,
                n: 10,
                mean: 1.2,
                std: 0.3,
                n_ok: 5,
                n_failed: 0,
            },
            SummaryRow {
                algorithm: Algorithm::LpHf,
                n: 100,
                mean: 0.4,
                std: 0.1,
                n_ok: 5,
                n_failed: 0,
            },
            SummaryRow {
                algorithm: Algorithm::MleHf,
                n: 10,
                mean: f64::NAN,
                std: f64::NAN,
                n_ok: 0,
                n_failed: 5,
            },
        ];
        let svg = error_curves_svg(&summary, "feedback benchmark");
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("LP-HF"));
        assert!(svg.contains("MLE-HF (no successful runs)"));
        assert!(svg.contains("feedback benchmark"));
        // Deterministic rendering.
        assert_eq!(svg, error_curves_svg(&summary, "feedback benchmark"));
    }
}
