//! Constraint sets aligned with pairwise human feedback, and their
//! intersection with the demonstration polyhedron.
//!
//! Each labeled query contributes one linear constraint on the reward: the
//! margin violation `L` (discrete labels) or `L′` (continuous labels) must
//! stay below a level `ε_r`. Negative `ε_r` demands a strict margin on every
//! query — useful when the evaluator is known to be noiseless — at the price
//! of possible infeasibility, which is reported, never masked.

use crate::data::{FeedbackDataset, FeedbackMode, FeedbackQuery, Label, Trajectory};
use crate::irl::IrlRewardSet;
use crate::lp::{optimize_over, ConstraintSystem, LpStatus};

#[derive(Debug, thiserror::Error)]
pub enum RlhfError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(
        "query {0} carries a zero continuous label, unsatisfiable with negative margin {1}"
    )]
    ZeroLabel(usize, f64),
    #[error("LP solve failed: {0:?}")]
    Solve(LpStatus),
}

/// Margin violation of one labeled query under a candidate reward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackError {
    pub value: f64,
}

/// Labeling mode of a feedback constraint set; continuous labels carry a
/// margin scale `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HfMode {
    Discrete,
    Continuous { c: f64 },
}

/// The feedback polyhedron: one row per query plus the box `−1 ≤ r ≤ 1`.
#[derive(Clone, Debug)]
pub struct HfRewardSet {
    /// Constraints over `r ∈ R^{|S||A|}`.
    pub cs: ConstraintSystem,
    pub eps_r: f64,
    pub mode: HfMode,
}

/// Margin violation of a single query: for discrete labels
/// `L = r·(ψ² − ψ¹)` when `y = 1` and `r·(ψ¹ − ψ²)` when `y = 2`; for
/// continuous labels the reported margin is charged first,
/// `L′ = c·y + r·(ψ² − ψ¹)` for `y > 0`, `−c·y + r·(ψ¹ − ψ²)` for `y < 0`,
/// and `0` at `y = 0`.
#[allow(clippy::too_many_arguments)]
pub fn feedback_error(
    tau1: &Trajectory,
    tau2: &Trajectory,
    y: Label,
    r: &[f64],
    gamma: f64,
    n_states: usize,
    n_actions: usize,
    c: f64,
) -> f64 {
    assert_eq!(tau1.horizon(), tau2.horizon(), "equal-horizon trajectories required");
    let psi1 = crate::data::vectorize_trajectory(tau1, gamma, n_states, n_actions);
    let psi2 = crate::data::vectorize_trajectory(tau2, gamma, n_states, n_actions);
    let gap_21: f64 = r.iter().zip(psi2.iter().zip(&psi1)).map(|(ri, (b, a))| ri * (b - a)).sum();
    let gap_12: f64 = r.iter().zip(psi1.iter().zip(&psi2)).map(|(ri, (a, b))| ri * (a - b)).sum();
    match y {
        Label::Discrete(1) => gap_21,
        Label::Discrete(2) => gap_12,
        Label::Discrete(other) => panic!("discrete label must be 1 or 2, got {other}"),
        Label::Continuous(v) if v > 0.0 => c * v + gap_21,
        Label::Continuous(v) if v < 0.0 => -c * v + gap_12,
        Label::Continuous(_) => 0.0,
    }
}

/// Margin violations for every query in a dataset.
pub fn per_query_errors(
    ds: &FeedbackDataset,
    r: &[f64],
    gamma: f64,
    n_states: usize,
    n_actions: usize,
    c: f64,
) -> Vec<FeedbackError> {
    ds.queries
        .iter()
        .map(|q| FeedbackError {
            value: feedback_error(&q.traj1, &q.traj2, q.y, r, gamma, n_states, n_actions, c),
        })
        .collect()
}

/// Row coefficients and right-hand side encoding `L ≤ ε_r` for one query;
/// `None` for the vacuous zero-label row.
fn query_row(
    q: &FeedbackQuery,
    eps_r: f64,
    gamma: f64,
    n_states: usize,
    n_actions: usize,
    c: f64,
) -> Option<(Vec<f64>, f64)> {
    let psi1 = crate::data::vectorize_trajectory(&q.traj1, gamma, n_states, n_actions);
    let psi2 = crate::data::vectorize_trajectory(&q.traj2, gamma, n_states, n_actions);
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    match q.y {
        Label::Discrete(1) => Some((diff(&psi2, &psi1), eps_r)),
        Label::Discrete(2) => Some((diff(&psi1, &psi2), eps_r)),
        Label::Discrete(other) => panic!("discrete label must be 1 or 2, got {other}"),
        Label::Continuous(v) if v > 0.0 => Some((diff(&psi2, &psi1), eps_r - c * v)),
        Label::Continuous(v) if v < 0.0 => Some((diff(&psi1, &psi2), eps_r + c * v)),
        Label::Continuous(_) => None,
    }
}

/// Builds the feedback polyhedron `{r : L ≤ ε_r per query, −1 ≤ r ≤ 1}`.
///
/// Zero continuous labels yield the vacuous row `0 ≤ ε_r`: dropped when
/// `ε_r ≥ 0`, rejected as unsatisfiable when `ε_r < 0`.
pub fn build_hf_set(
    ds: &FeedbackDataset,
    eps_r: f64,
    gamma: f64,
    n_states: usize,
    n_actions: usize,
    mode: HfMode,
) -> Result<HfRewardSet, RlhfError> {
    let mode_matches = matches!(
        (ds.mode, mode),
        (FeedbackMode::Discrete, HfMode::Discrete)
            | (FeedbackMode::Continuous, HfMode::Continuous { .. })
    );
    if !mode_matches {
        return Err(RlhfError::Config(format!(
            "dataset mode {:?} does not match set mode {mode:?}",
            ds.mode
        )));
    }
    let c = match mode {
        HfMode::Discrete => 0.0,
        HfMode::Continuous { c } => c,
    };

    let n_sa = n_states * n_actions;
    let mut cs = ConstraintSystem::new(n_sa);
    cs.name_vars(
        (0..n_states).flat_map(|s| (0..n_actions).map(move |a| format!("r_{s}_{a}"))),
    );
    for (i, q) in ds.queries.iter().enumerate() {
        match query_row(q, eps_r, gamma, n_states, n_actions, c) {
            Some((row, rhs)) => cs.add_ineq(row, rhs),
            None if eps_r >= 0.0 => {}
            None => return Err(RlhfError::ZeroLabel(i, eps_r)),
        }
    }
    for i in 0..n_sa {
        cs.set_bounds(i, -1.0, 1.0);
    }
    Ok(HfRewardSet { cs, eps_r, mode })
}

/// Fraction of unseen queries whose margin violation reaches `ε_r`. For a
/// reward trained on `N_q` i.i.d. queries this stays below
/// `√(log(1/δ)/(2·N_q))` with probability at least `1−δ`.
pub fn generalization_check(
    r: &[f64],
    unseen: &FeedbackDataset,
    eps_r: f64,
    gamma: f64,
    n_states: usize,
    n_actions: usize,
    c: f64,
) -> f64 {
    if unseen.queries.is_empty() {
        return 0.0;
    }
    let violated = per_query_errors(unseen, r, gamma, n_states, n_actions, c)
        .iter()
        .filter(|e| e.value >= eps_r)
        .count();
    violated as f64 / unseen.queries.len() as f64
}

/// Intersects the demonstration polyhedron with a feedback set over stacked
/// variables `(r, u, v)`, coupling them by `u(s,a) = d̂_e(s,a)·r(s,a)`.
pub fn build_integrated_set(irl: &IrlRewardSet, hf: &HfRewardSet) -> ConstraintSystem {
    let n_sa = irl.n_sa();
    assert_eq!(hf.cs.n_vars(), n_sa, "feedback set indexes the same (s,a) space");
    let n_uv = irl.cs.n_vars();

    let mut cs = ConstraintSystem::new(n_sa + n_uv);
    cs.name_vars(hf.cs.names.iter().cloned().chain(irl.cs.names.iter().cloned()));

    for (row, &rhs) in hf.cs.a_ineq.iter().zip(&hf.cs.b_ineq) {
        let mut full = row.clone();
        full.resize(n_sa + n_uv, 0.0);
        cs.add_ineq(full, rhs);
    }
    let shift = |row: &[f64]| {
        let mut out = vec![0.0; n_sa];
        out.extend_from_slice(row);
        out
    };
    for (row, &rhs) in irl.cs.a_ineq.iter().zip(&irl.cs.b_ineq) {
        cs.add_ineq(shift(row), rhs);
    }
    for (row, &rhs) in irl.cs.a_eq.iter().zip(&irl.cs.b_eq) {
        cs.add_eq(shift(row), rhs);
    }
    for sa in 0..n_sa {
        let mut row = vec![0.0; n_sa + n_uv];
        row[sa] = -irl.est.d_hat[sa];
        row[n_sa + sa] = 1.0;
        cs.add_eq(row, 0.0);
    }
    for i in 0..n_sa {
        cs.set_bounds(i, hf.cs.lower[i], hf.cs.upper[i]);
    }
    for i in 0..n_uv {
        cs.set_bounds(n_sa + i, irl.cs.lower[i], irl.cs.upper[i]);
    }
    cs
}

/// Objective used to pick one reward out of a constraint set.
#[derive(Clone, Copy, Debug)]
pub enum ObjectiveKind<'a> {
    /// Maximize `rᵀ(d̂_e − d̂_sub)` over the leading reward block.
    RewardGap { d_hat_e: &'a [f64], d_hat_sub: &'a [f64] },
    /// All-zero objective: returns whichever vertex the deterministic
    /// pivoting lands on.
    Dummy,
}

/// Solves for a reward in a set whose first `n_r` variables are the reward.
pub fn select_reward(
    cs: &ConstraintSystem,
    kind: ObjectiveKind,
    n_r: usize,
) -> Result<Vec<f64>, RlhfError> {
    assert!(n_r <= cs.n_vars());
    let mut objective = vec![0.0; cs.n_vars()];
    if let ObjectiveKind::RewardGap { d_hat_e, d_hat_sub } = kind {
        assert_eq!(d_hat_e.len(), n_r);
        assert_eq!(d_hat_sub.len(), n_r);
        for i in 0..n_r {
            objective[i] = d_hat_e[i] - d_hat_sub[i];
        }
    }
    let sol = optimize_over(cs, &objective);
    if sol.status != LpStatus::Optimal {
        return Err(RlhfError::Solve(sol.status));
    }
    Ok(sol.x[..n_r].to_vec())
}
