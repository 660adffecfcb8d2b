//! Maximum-likelihood and pessimistic baselines for preference data, plus
//! the three-arm bandit study where both baselines pick the wrong arm while
//! the constraint-set approach does not.
//!
//! The failure mode is query imbalance: when almost every comparison probes
//! (a1, a2) and only a handful probe (a2, a3), the fitted utility ranks `a2`
//! above `a3` even though every (a2, a3) query said otherwise, and the
//! pessimism penalty only reinforces that choice. A strict-margin constraint
//! set instead turns each (a2, a3) answer into the hard row
//! `r(a2) ≤ r(a3) + ε_r`, so a single such query pins the right order.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::data::{FeedbackDataset, FeedbackMode, Label, Trajectory};
use crate::linalg::{dot, solve_dense};
use crate::rlhf::{select_reward, ObjectiveKind};

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("covariance singular along the requested direction: {0}")]
    Singular(String),
    #[error("constraint-set solve failed: {0}")]
    Lp(#[from] crate::rlhf::RlhfError),
}

/// Parameter space for the likelihood fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamSpace {
    /// Zero-sum unit ball `{θ : 1ᵀθ = 0, ‖θ‖₂ ≤ 1}`.
    SimplexBall,
    /// Sup-norm box `‖θ‖∞ ≤ B`.
    Box(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct MleConfig {
    pub step_size: f64,
    pub max_iters: usize,
    pub param_space: ParamSpace,
    /// Ridge added to the query covariance before inverting.
    pub lambda: f64,
    /// Weight of the pessimism penalty in the policy score.
    pub c_pess: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        MleConfig {
            step_size: 0.01,
            max_iters: 100_000,
            param_space: ParamSpace::SimplexBall,
            lambda: 0.1,
            c_pess: 1.0,
        }
    }
}

/// Result of the projected-gradient likelihood fit.
#[derive(Clone, Debug)]
pub struct MleFit {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the last projected step; reported when not converged.
    pub final_step_norm: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn project(theta: &mut [f64], space: ParamSpace) {
    match space {
        ParamSpace::SimplexBall => {
            // Hyperplane first, then ball scaling — exact for a ball centered
            // on the hyperplane.
            let mean = theta.iter().sum::<f64>() / theta.len() as f64;
            for t in theta.iter_mut() {
                *t -= mean;
            }
            let norm = dot(theta, theta).sqrt();
            if norm > 1.0 {
                for t in theta.iter_mut() {
                    *t /= norm;
                }
            }
        }
        ParamSpace::Box(b) => {
            for t in theta.iter_mut() {
                *t = t.clamp(-b, b);
            }
        }
    }
}

/// Winner-minus-loser embedding gap of each query, grouped by exact value
/// with multiplicities. Deterministic order (keys are bit patterns).
fn grouped_gaps(
    ds: &FeedbackDataset,
    gamma: f64,
    n_states: usize,
    n_actions: usize,
) -> Vec<(Vec<f64>, f64)> {
    assert_eq!(ds.mode, FeedbackMode::Discrete, "likelihood fit needs discrete labels");
    let mut groups: BTreeMap<Vec<u64>, (Vec<f64>, f64)> = BTreeMap::new();
    for q in &ds.queries {
        let psi1 = crate::data::vectorize_trajectory(&q.traj1, gamma, n_states, n_actions);
        let psi2 = crate::data::vectorize_trajectory(&q.traj2, gamma, n_states, n_actions);
        let z: Vec<f64> = match q.y {
            Label::Discrete(1) => psi1.iter().zip(&psi2).map(|(a, b)| a - b).collect(),
            Label::Discrete(2) => psi2.iter().zip(&psi1).map(|(b, a)| b - a).collect(),
            other => panic!("unexpected label {other:?} in a discrete dataset"),
        };
        let key: Vec<u64> = z.iter().map(|v| v.to_bits()).collect();
        groups.entry(key).or_insert_with(|| (z, 0.0)).1 += 1.0;
    }
    groups.into_values().collect()
}

/// Mean log-likelihood of discrete labels under the logistic choice model:
/// `(1/N)·Σ log σ(θ·z_n)` with `z_n` the winner-minus-loser gap.
pub fn btl_log_likelihood(
    ds: &FeedbackDataset,
    gamma: f64,
    n_states: usize,
    n_actions: usize,
    theta: &[f64],
) -> f64 {
    let groups = grouped_gaps(ds, gamma, n_states, n_actions);
    let n: f64 = groups.iter().map(|(_, m)| m).sum();
    if n == 0.0 {
        return 0.0;
    }
    groups.iter().map(|(z, m)| m * sigmoid(dot(theta, z)).ln()).sum::<f64>() / n
}

/// Fits the logistic choice model by projected gradient ascent on the mean
/// log-likelihood, stopping when the projected step shrinks below 1e−6.
pub fn mle_btl_fit(
    ds: &FeedbackDataset,
    gamma: f64,
    n_states: usize,
    n_actions: usize,
    cfg: &MleConfig,
) -> MleFit {
    let dim = n_states * n_actions;
    let mut theta = vec![0.0; dim];
    let groups = grouped_gaps(ds, gamma, n_states, n_actions);
    let n: f64 = groups.iter().map(|(_, m)| m).sum();
    if n == 0.0 {
        return MleFit { theta, iterations: 0, converged: true, final_step_norm: 0.0 };
    }

    let mut step_norm = f64::INFINITY;
    for iter in 0..cfg.max_iters {
        let mut grad = vec![0.0; dim];
        for (z, m) in &groups {
            let weight = m * (1.0 - sigmoid(dot(&theta, z))) / n;
            for (g, zi) in grad.iter_mut().zip(z) {
                *g += weight * zi;
            }
        }
        let mut next: Vec<f64> =
            theta.iter().zip(&grad).map(|(t, g)| t + cfg.step_size * g).collect();
        project(&mut next, cfg.param_space);
        step_norm = next
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        theta = next;
        if step_norm <= 1e-6 {
            return MleFit { theta, iterations: iter + 1, converged: true, final_step_norm: step_norm };
        }
    }
    MleFit { theta, iterations: cfg.max_iters, converged: false, final_step_norm: step_norm }
}

/// Ellipsoidal uncertainty of a direction under the query covariance:
/// `‖dir‖²_{(Σ+λI)⁻¹}` with `Σ = (1/N)·Σ_n z_n z_nᵀ` over the query gaps.
pub fn pessimistic_penalty(
    features: &[Vec<f64>],
    lambda: f64,
    direction: &[f64],
) -> Result<f64, BaselineError> {
    let dim = direction.len();
    let mut cov = vec![vec![0.0; dim]; dim];
    let n = features.len().max(1) as f64;
    for z in features {
        assert_eq!(z.len(), dim, "feature dimension mismatch");
        for i in 0..dim {
            for j in 0..dim {
                cov[i][j] += z[i] * z[j] / n;
            }
        }
    }
    for (i, row) in cov.iter_mut().enumerate() {
        row[i] += lambda;
    }
    let x = solve_dense(&cov, direction, 1e-12).ok_or_else(|| {
        BaselineError::Singular("regularized covariance not invertible; increase lambda".into())
    })?;
    Ok(dot(direction, &x))
}

/// Penalized argmax over candidate directions: maximizes
/// `θ·dir − c_pess·√(‖dir‖²_{(Σ+λI)⁻¹})`, ties to the lowest index.
pub fn pessimistic_policy(
    theta: &[f64],
    candidate_directions: &[Vec<f64>],
    features: &[Vec<f64>],
    lambda: f64,
    c_pess: f64,
) -> Result<usize, BaselineError> {
    assert!(!candidate_directions.is_empty());
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, dir) in candidate_directions.iter().enumerate() {
        let penalty = pessimistic_penalty(features, lambda, dir)?;
        let score = dot(theta, dir) - c_pess * penalty.sqrt();
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    Ok(best)
}

/// Query-pair counts of one sampled bandit dataset.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct BanditInstance {
    pub n12: usize,
    pub n23: usize,
    pub n31: usize,
}

/// Knobs of the imbalanced-query bandit study.
#[derive(Clone, Copy, Debug)]
pub struct BanditConfig {
    /// Probability a query compares (a1, a2); the remainder compares (a2, a3).
    pub mass12: f64,
    pub n_queries: usize,
    /// Strict margin for the constraint-set policy.
    pub eps_r: f64,
    pub mle: MleConfig,
    /// True utilities; must be increasing so a3 is the best arm.
    pub r_true: [f64; 3],
}

impl Default for BanditConfig {
    fn default() -> Self {
        BanditConfig {
            mass12: 0.995,
            n_queries: 2000,
            eps_r: -0.01,
            mle: MleConfig::default(),
            r_true: [0.0, 0.5, 1.0],
        }
    }
}

/// Outcome of one bandit run; arms are reported as `"a1"`.."`a3"`.
#[derive(Clone, Debug, Serialize)]
pub struct BanditReport {
    pub pi_star: String,
    pub pi_lp: String,
    pub pi_mle: String,
    pub pi_pe: String,
    pub counts: BanditInstance,
    pub seed: u64,
    /// True when no (a2, a3) query was drawn, leaving the constraint set
    /// unable to order those arms; rerun with another seed.
    pub resample_needed: bool,
}

impl BanditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The headline pattern: constraint set right, both baselines on a2.
    pub fn matches_expected_pattern(&self) -> bool {
        self.pi_star == "a3" && self.pi_lp == "a3" && self.pi_mle == "a2" && self.pi_pe == "a2"
    }
}

fn arm_name(i: usize) -> String {
    format!("a{}", i + 1)
}

fn arm_trajectory(arm: usize) -> Trajectory {
    Trajectory { states: vec![0, 0], actions: vec![arm] }
}

/// Runs the full comparison on one seeded dataset: heavily imbalanced greedy
/// queries, then the constraint-set, likelihood, and pessimistic policies.
pub fn run_bandit_counterexample(cfg: &BanditConfig, seed: u64) -> Result<BanditReport, BaselineError> {
    use rand::{Rng, SeedableRng};
    assert!(cfg.r_true[0] < cfg.r_true[1] && cfg.r_true[1] < cfg.r_true[2]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let gamma = 0.5; // single-step trajectories: the discount is inert

    let mut counts = BanditInstance::default();
    let pairs: Vec<(Trajectory, Trajectory)> = (0..cfg.n_queries)
        .map(|_| {
            if rng.random::<f64>() < cfg.mass12 {
                counts.n12 += 1;
                (arm_trajectory(0), arm_trajectory(1))
            } else {
                counts.n23 += 1;
                (arm_trajectory(1), arm_trajectory(2))
            }
        })
        .collect();
    let ds = crate::data::generate_feedback(
        &pairs,
        &cfg.r_true,
        gamma,
        1,
        3,
        crate::data::FeedbackModel::Greedy,
        &mut rng,
    );
    let resample_needed = counts.n23 == 0;

    // Constraint-set policy: every greedy answer becomes a strict-margin
    // row. Duplicate queries tighten nothing, so the solver sees one row per
    // distinct comparison instead of one per query — the same polyhedron.
    let mut cs = crate::lp::ConstraintSystem::new(3);
    cs.name_vars((0..3).map(|a| format!("r_{}", arm_name(a))));
    for (z, _) in grouped_gaps(&ds, gamma, 1, 3) {
        cs.add_ineq(z.iter().map(|v| -v).collect(), cfg.eps_r);
    }
    for i in 0..3 {
        cs.set_bounds(i, -1.0, 1.0);
    }
    let r = select_reward(&cs, ObjectiveKind::Dummy, 3)?;
    let pi_lp = argmax_lowest(&r);

    // Likelihood policy.
    let fit = mle_btl_fit(&ds, gamma, 1, 3, &cfg.mle);
    let pi_mle = argmax_lowest(&fit.theta);

    // Pessimistic policy over the arm indicators.
    let features: Vec<Vec<f64>> = grouped_gaps(&ds, gamma, 1, 3)
        .into_iter()
        .flat_map(|(z, m)| std::iter::repeat_n(z, m as usize))
        .collect();
    let directions: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            let mut e = vec![0.0; 3];
            e[a] = 1.0;
            e
        })
        .collect();
    let pi_pe =
        pessimistic_policy(&fit.theta, &directions, &features, cfg.mle.lambda, cfg.mle.c_pess)?;

    Ok(BanditReport {
        pi_star: arm_name(argmax_lowest(&cfg.r_true)),
        pi_lp: arm_name(pi_lp),
        pi_mle: arm_name(pi_mle),
        pi_pe: arm_name(pi_pe),
        counts,
        seed,
        resample_needed,
    })
}

fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
