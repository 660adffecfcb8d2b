//! Offline dataset simulation and the empirical estimators built from it:
//! finite-horizon trajectories, the discounted occupancy estimate `d̂_e`, its
//! transition-resolved refinement `d̂′_e`, the empirical flow matrix `K_D`,
//! trajectory vectorization `ψ`, and simulated pairwise feedback under
//! Bradley-Terry, greedy, and continuous-uniform evaluators.
//!
//! Everything that consumes randomness takes an explicit RNG handle;
//! experiment workers hand each run its own counter-seeded stream, so all
//! datasets are exactly reproducible from a recorded 64-bit seed.
//!
//! Datasets serialize as JSON lines — one trajectory or one query per line,
//! with field names `states`, `actions`, and `y`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mdp::{Policy, TabularMdp};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
}

/// One finite-horizon rollout: `H+1` states and `H` actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    fn validate(&self, n_states: usize, n_actions: usize) -> Result<(), DataError> {
        if self.states.len() != self.actions.len() + 1 {
            return Err(DataError::Inconsistent(format!(
                "{} states for {} actions",
                self.states.len(),
                self.actions.len()
            )));
        }
        if self.states.iter().any(|&s| s >= n_states)
            || self.actions.iter().any(|&a| a >= n_actions)
        {
            return Err(DataError::Inconsistent("index out of range".into()));
        }
        Ok(())
    }
}

/// A demonstration dataset: `N` equal-horizon trajectories plus the discount
/// and dimensions the estimators need.
#[derive(Clone, Debug)]
pub struct TrajectoryDataset {
    pub trajectories: Vec<Trajectory>,
    pub gamma: f64,
    pub horizon: usize,
    pub n_states: usize,
    pub n_actions: usize,
}

impl TrajectoryDataset {
    pub fn new(
        trajectories: Vec<Trajectory>,
        gamma: f64,
        n_states: usize,
        n_actions: usize,
    ) -> Result<Self, DataError> {
        let horizon = trajectories
            .first()
            .map(Trajectory::horizon)
            .ok_or_else(|| DataError::Inconsistent("empty dataset".into()))?;
        for t in &trajectories {
            t.validate(n_states, n_actions)?;
            if t.horizon() != horizon {
                return Err(DataError::Inconsistent("mixed horizons".into()));
            }
        }
        Ok(TrajectoryDataset { trajectories, gamma, horizon, n_states, n_actions })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// One `{"states": [...], "actions": [...]}` object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.trajectories {
            out.push_str(&serde_json::to_string(t).expect("trajectory serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(
        text: &str,
        gamma: f64,
        n_states: usize,
        n_actions: usize,
    ) -> Result<Self, DataError> {
        let trajectories = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| DataError::Parse(e.to_string())))
            .collect::<Result<Vec<Trajectory>, _>>()?;
        TrajectoryDataset::new(trajectories, gamma, n_states, n_actions)
    }
}

/// Pairwise preference label: discrete (`1` = first trajectory preferred,
/// `2` = second) or a continuous reward-gap report in [−1, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Discrete(u8),
    Continuous(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeedbackMode {
    Discrete,
    Continuous,
}

/// One comparison query: two trajectories and the evaluator's label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "QueryLine", into = "QueryLine")]
pub struct FeedbackQuery {
    pub traj1: Trajectory,
    pub traj2: Trajectory,
    pub y: Label,
}

/// External JSONL shape of a query: the two trajectories' state and action
/// lists are stacked under shared `states`/`actions` keys.
#[derive(Serialize, Deserialize)]
struct QueryLine {
    states: [Vec<usize>; 2],
    actions: [Vec<usize>; 2],
    y: Label,
}

impl From<QueryLine> for FeedbackQuery {
    fn from(line: QueryLine) -> Self {
        let [s1, s2] = line.states;
        let [a1, a2] = line.actions;
        FeedbackQuery {
            traj1: Trajectory { states: s1, actions: a1 },
            traj2: Trajectory { states: s2, actions: a2 },
            y: line.y,
        }
    }
}

impl From<FeedbackQuery> for QueryLine {
    fn from(q: FeedbackQuery) -> Self {
        QueryLine {
            states: [q.traj1.states, q.traj2.states],
            actions: [q.traj1.actions, q.traj2.actions],
            y: q.y,
        }
    }
}

/// A preference dataset in a single labeling mode.
#[derive(Clone, Debug)]
pub struct FeedbackDataset {
    pub queries: Vec<FeedbackQuery>,
    pub mode: FeedbackMode,
}

impl FeedbackDataset {
    pub fn new(queries: Vec<FeedbackQuery>, mode: FeedbackMode) -> Result<Self, DataError> {
        for q in &queries {
            match (mode, q.y) {
                (FeedbackMode::Discrete, Label::Discrete(1 | 2)) => {}
                (FeedbackMode::Continuous, Label::Continuous(v)) if (-1.0..=1.0).contains(&v) => {}
                _ => {
                    return Err(DataError::Inconsistent(format!(
                        "label {:?} invalid for {mode:?} mode",
                        q.y
                    )))
                }
            }
        }
        Ok(FeedbackDataset { queries, mode })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for q in &self.queries {
            out.push_str(&serde_json::to_string(q).expect("query serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses queries and infers the mode from the labels (which must not mix).
    pub fn from_jsonl(text: &str) -> Result<Self, DataError> {
        let queries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| DataError::Parse(e.to_string())))
            .collect::<Result<Vec<FeedbackQuery>, _>>()?;
        let mode = match queries.first() {
            Some(FeedbackQuery { y: Label::Discrete(_), .. }) => FeedbackMode::Discrete,
            Some(FeedbackQuery { y: Label::Continuous(_), .. }) => FeedbackMode::Continuous,
            None => return Err(DataError::Inconsistent("empty dataset".into())),
        };
        FeedbackDataset::new(queries, mode)
    }
}

/// Empirical estimates from one trajectory dataset: `d̂_e` over `(s,a)`,
/// `d̂′_e` over `(s,a,s′)`, and the flow matrix
/// `K_D(s′,(s,a)) = d̂_e(s,a)·1{s=s′} − γ·d̂′_e(s,a,s′)`.
#[derive(Clone, Debug)]
pub struct EmpiricalEstimates {
    pub d_hat: Vec<f64>,
    /// Flattened `(s,a,s′)`: index `(s·|A| + a)·|S| + s′`.
    pub d_prime_hat: Vec<f64>,
    pub k_d: Vec<Vec<f64>>,
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
}

impl EmpiricalEstimates {
    pub fn from_dataset(ds: &TrajectoryDataset) -> Self {
        let d_hat = estimate_occupancy(ds);
        let d_prime_hat = estimate_transition_occupancy(ds);
        let k_d = build_k_d(&d_hat, &d_prime_hat, ds.gamma, ds.n_states, ds.n_actions);
        EmpiricalEstimates {
            d_hat,
            d_prime_hat,
            k_d,
            n_states: ds.n_states,
            n_actions: ds.n_actions,
            gamma: ds.gamma,
        }
    }
}

/// Draws an index from a probability vector by inverse-CDF walk.
pub(crate) fn draw_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Rolls out `H` steps: `s0 ~ μ0`, `a_h ~ π(s_h)`, `s_{h+1} ~ P(·|s_h,a_h)`.
pub fn sample_trajectory(
    mdp: &TabularMdp,
    pi: &Policy,
    horizon: usize,
    rng: &mut impl Rng,
) -> Trajectory {
    assert!(horizon >= 1, "horizon must be at least 1");
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut s = draw_categorical(&mdp.mu0, rng);
    states.push(s);
    for _ in 0..horizon {
        let a = draw_categorical(&pi.pi[s], rng);
        actions.push(a);
        s = draw_categorical(&mdp.p[s][a], rng);
        states.push(s);
    }
    Trajectory { states, actions }
}

/// Samples `n` i.i.d. trajectories into a dataset.
pub fn sample_dataset(
    mdp: &TabularMdp,
    pi: &Policy,
    horizon: usize,
    n: usize,
    rng: &mut impl Rng,
) -> TrajectoryDataset {
    let trajectories = (0..n).map(|_| sample_trajectory(mdp, pi, horizon, rng)).collect();
    TrajectoryDataset {
        trajectories,
        gamma: mdp.gamma,
        horizon,
        n_states: mdp.n_states,
        n_actions: mdp.n_actions,
    }
}

/// `d̂_e(s,a) = (1−γ)·(1/N)·Σ_{h<H} γ^h·N_h(s,a)`; sums to `1−γ^H`.
pub fn estimate_occupancy(ds: &TrajectoryDataset) -> Vec<f64> {
    let mut d = vec![0.0; ds.n_states * ds.n_actions];
    for t in &ds.trajectories {
        let mut disc = 1.0;
        for (s, a) in t.states.iter().zip(&t.actions) {
            d[s * ds.n_actions + a] += disc;
            disc *= ds.gamma;
        }
    }
    let scale = (1.0 - ds.gamma) / ds.len() as f64;
    for v in d.iter_mut() {
        *v *= scale;
    }
    d
}

/// `d̂′_e(s,a,s′) = (1−γ)·(1/N)·Σ_{h<H} γ^h·N_h(s,a,s′)`; marginalizing over
/// `s′` recovers [`estimate_occupancy`].
pub fn estimate_transition_occupancy(ds: &TrajectoryDataset) -> Vec<f64> {
    let n = ds.n_states;
    let mut d = vec![0.0; n * ds.n_actions * n];
    for t in &ds.trajectories {
        let mut disc = 1.0;
        for (h, a) in t.actions.iter().enumerate() {
            let (s, sp) = (t.states[h], t.states[h + 1]);
            d[(s * ds.n_actions + a) * n + sp] += disc;
            disc *= ds.gamma;
        }
    }
    let scale = (1.0 - ds.gamma) / ds.len() as f64;
    for v in d.iter_mut() {
        *v *= scale;
    }
    d
}

/// `K_D(s′,(s,a)) = d̂_e(s,a)·1{s=s′} − γ·d̂′_e(s,a,s′)` — the empirical
/// analogue of the flow matrix `M` after importance rescaling.
pub fn build_k_d(
    d_hat: &[f64],
    d_prime_hat: &[f64],
    gamma: f64,
    n_states: usize,
    n_actions: usize,
) -> Vec<Vec<f64>> {
    let n_sa = n_states * n_actions;
    assert_eq!(d_hat.len(), n_sa);
    assert_eq!(d_prime_hat.len(), n_sa * n_states);
    let mut k = vec![vec![0.0; n_sa]; n_states];
    for s in 0..n_states {
        for a in 0..n_actions {
            let col = s * n_actions + a;
            for sp in 0..n_states {
                let indicator = if sp == s { d_hat[col] } else { 0.0 };
                k[sp][col] = indicator - gamma * d_prime_hat[col * n_states + sp];
            }
        }
    }
    k
}

/// Discounted indicator embedding `ψ(s,a) = Σ_h γ^h·1{(s_h,a_h)=(s,a)}`, so
/// cumulative trajectory reward is the inner product `r·ψ`. Sums to
/// `(1−γ^H)/(1−γ)`.
pub fn vectorize_trajectory(
    tau: &Trajectory,
    gamma: f64,
    n_states: usize,
    n_actions: usize,
) -> Vec<f64> {
    let mut psi = vec![0.0; n_states * n_actions];
    let mut disc = 1.0;
    for (s, a) in tau.states.iter().zip(&tau.actions) {
        psi[s * n_actions + a] += disc;
        disc *= gamma;
    }
    psi
}

/// Simulated preference evaluator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeedbackModel {
    /// `P(y=1) = σ(r_true·(ψ¹−ψ²))` — the Bradley-Terry-Luce model.
    Btl,
    /// `y = 1` iff `r_true·ψ¹ ≥ r_true·ψ²`; ties resolve to `y = 1`.
    Greedy,
    /// `y ~ U[0, scale·r_true·(ψ¹−ψ²)]` (endpoints swapped for negative
    /// gaps), clamped to [−1, 1].
    ContinuousUniform { scale: f64 },
}

/// Labels trajectory pairs with the chosen evaluator under `r_true`.
pub fn generate_feedback(
    pairs: &[(Trajectory, Trajectory)],
    r_true: &[f64],
    gamma: f64,
    n_states: usize,
    n_actions: usize,
    model: FeedbackModel,
    rng: &mut impl Rng,
) -> FeedbackDataset {
    let mode = match model {
        FeedbackModel::ContinuousUniform { .. } => FeedbackMode::Continuous,
        _ => FeedbackMode::Discrete,
    };
    let queries = pairs
        .iter()
        .map(|(t1, t2)| {
            assert_eq!(t1.horizon(), t2.horizon(), "equal-horizon pairs required");
            let psi1 = vectorize_trajectory(t1, gamma, n_states, n_actions);
            let psi2 = vectorize_trajectory(t2, gamma, n_states, n_actions);
            let gap: f64 =
                r_true.iter().zip(psi1.iter().zip(&psi2)).map(|(r, (a, b))| r * (a - b)).sum();
            let y = match model {
                FeedbackModel::Btl => {
                    let p1 = 1.0 / (1.0 + (-gap).exp());
                    Label::Discrete(if rng.random::<f64>() < p1 { 1 } else { 2 })
                }
                FeedbackModel::Greedy => Label::Discrete(if gap >= 0.0 { 1 } else { 2 }),
                FeedbackModel::ContinuousUniform { scale } => {
                    let bound = scale * gap;
                    let (lo, hi) = if bound >= 0.0 { (0.0, bound) } else { (bound, 0.0) };
                    let y = if lo == hi { 0.0 } else { rng.random_range(lo..hi) };
                    Label::Continuous(y.clamp(-1.0, 1.0))
                }
            };
            FeedbackQuery { traj1: t1.clone(), traj2: t2.clone(), y }
        })
        .collect();
    FeedbackDataset { queries, mode }
}

/// Draws `2·n_q` independent rollouts under the query policy and pairs them
/// consecutively.
pub fn sample_query_pairs(
    mdp: &TabularMdp,
    mu_policy: &Policy,
    horizon: usize,
    n_q: usize,
    rng: &mut impl Rng,
) -> Vec<(Trajectory, Trajectory)> {
    (0..n_q)
        .map(|_| {
            let t1 = sample_trajectory(mdp, mu_policy, horizon, rng);
            let t2 = sample_trajectory(mdp, mu_policy, horizon, rng);
            (t1, t2)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::build_m;
    use crate::mdp::occupancy_of_policy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn random_mdp(n_states: usize, n_actions: usize, gamma: f64, rng: &mut ChaCha8Rng) -> TabularMdp {
        let normalize = |v: &mut Vec<f64>| {
            let s: f64 = v.iter().sum();
            for x in v.iter_mut() {
                *x /= s;
            }
        };
        let mut mu0: Vec<f64> = (0..n_states).map(|_| rng.random::<f64>()).collect();
        normalize(&mut mu0);
        let p = (0..n_states)
            .map(|_| {
                (0..n_actions)
                    .map(|_| {
                        let mut row: Vec<f64> = (0..n_states).map(|_| rng.random::<f64>()).collect();
                        normalize(&mut row);
                        row
                    })
                    .collect()
            })
            .collect();
        TabularMdp { n_states, n_actions, gamma, mu0, p, r: None }
    }

    fn single_state_mdp(gamma: f64) -> TabularMdp {
        TabularMdp {
            n_states: 1,
            n_actions: 1,
            gamma,
            mu0: vec![1.0],
            p: vec![vec![vec![1.0]]],
            r: None,
        }
    }

    #[test]
    fn rollout_on_deterministic_single_state() {
        let mdp = single_state_mdp(0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = sample_trajectory(&mdp, &Policy::uniform(1, 1), 5, &mut rng);
        assert_eq!(t.states, vec![0; 6]);
        assert_eq!(t.actions, vec![0; 5]);
    }

    #[test]
    fn deterministic_chain_has_unique_rollout() {
        // Two states that deterministically swap under the only action.
        let mdp = TabularMdp {
            n_states: 2,
            n_actions: 1,
            gamma: 0.9,
            mu0: vec![1.0, 0.0],
            p: vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]],
            r: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = sample_trajectory(&mdp, &Policy::uniform(2, 1), 4, &mut rng);
        assert_eq!(t.states, vec![0, 1, 0, 1, 0]);
    }

    /// State-visit frequencies across many rollouts must match the exact
    /// chain marginals m_{h+1} = P_πᵀ·m_h within 3σ per (h, s) cell.
    #[test]
    fn rollout_marginals_match_matrix_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mdp = random_mdp(3, 2, 0.9, &mut rng);
        let pi = Policy::uniform(3, 2);
        let horizon = 3;
        let n = 100_000usize;

        // Exact marginals under the uniform policy.
        let mut marginals = vec![mdp.mu0.clone()];
        for h in 0..horizon {
            let prev = &marginals[h];
            let mut next = vec![0.0; 3];
            for s in 0..3 {
                for a in 0..2 {
                    for sp in 0..3 {
                        next[sp] += prev[s] * pi.pi[s][a] * mdp.p[s][a][sp];
                    }
                }
            }
            marginals.push(next);
        }

        let mut counts = vec![vec![0usize; 3]; horizon + 1];
        for _ in 0..n {
            let t = sample_trajectory(&mdp, &pi, horizon, &mut rng);
            for (h, &s) in t.states.iter().enumerate() {
                counts[h][s] += 1;
            }
        }
        for h in 0..=horizon {
            for s in 0..3 {
                let p = marginals[h][s];
                let freq = counts[h][s] as f64 / n as f64;
                let sigma = (p * (1.0 - p) / n as f64).sqrt();
                assert!(
                    (freq - p).abs() <= 3.0 * sigma + 1e-9,
                    "h={h} s={s}: {freq} vs {p}"
                );
            }
        }
    }

    #[test]
    fn occupancy_estimate_hand_computed() {
        // γ=0.5, H=2, single trajectory (s0=0,a0=0) → (s1=1,a1=1) → s2=0.
        let tau = Trajectory { states: vec![0, 1, 0], actions: vec![0, 1] };
        let ds = TrajectoryDataset::new(vec![tau], 0.5, 2, 2).unwrap();
        let d = estimate_occupancy(&ds);
        assert_eq!(d[0], 0.5); // (s=0,a=0): (1−γ)·γ⁰
        assert_eq!(d[3], 0.25); // (s=1,a=1): (1−γ)·γ¹
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], 0.0);
        assert_close(d.iter().sum::<f64>(), 1.0 - 0.5f64.powi(2), 1e-15);
    }

    #[test]
    fn occupancy_estimate_invariant_under_duplication() {
        let tau = Trajectory { states: vec![0, 1, 0], actions: vec![0, 1] };
        let one = TrajectoryDataset::new(vec![tau.clone()], 0.5, 2, 2).unwrap();
        let many = TrajectoryDataset::new(vec![tau; 7], 0.5, 2, 2).unwrap();
        assert_eq!(estimate_occupancy(&one), estimate_occupancy(&many));
    }

    /// Large-sample estimate vs. the exact horizon-truncated occupancy
    /// d_e^H(s,a) = (1−γ)·Σ_{h<H} γ^h·m_h(s)·π(a|s).
    #[test]
    fn occupancy_estimate_converges_to_truncated_occupancy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mdp = random_mdp(3, 2, 0.9, &mut rng);
        let pi = Policy::uniform(3, 2).mixture(&Policy::deterministic(&[0, 1, 0], 2), 0.5);
        let horizon = 10;

        let mut marginal = mdp.mu0.clone();
        let mut d_exact = vec![0.0; 6];
        let mut disc = 1.0;
        for _ in 0..horizon {
            for s in 0..3 {
                for a in 0..2 {
                    d_exact[s * 2 + a] += (1.0 - mdp.gamma) * disc * marginal[s] * pi.pi[s][a];
                }
            }
            let mut next = vec![0.0; 3];
            for s in 0..3 {
                for a in 0..2 {
                    for sp in 0..3 {
                        next[sp] += marginal[s] * pi.pi[s][a] * mdp.p[s][a][sp];
                    }
                }
            }
            marginal = next;
            disc *= mdp.gamma;
        }

        let ds = sample_dataset(&mdp, &pi, horizon, 100_000, &mut rng);
        let d_hat = estimate_occupancy(&ds);
        for (est, exact) in d_hat.iter().zip(&d_exact) {
            assert!((est - exact).abs() <= 0.01, "{est} vs {exact}");
        }
    }

    #[test]
    fn transition_estimate_hand_computed() {
        let tau = Trajectory { states: vec![0, 1, 0], actions: vec![0, 1] };
        let ds = TrajectoryDataset::new(vec![tau], 0.5, 2, 2).unwrap();
        let dp = estimate_transition_occupancy(&ds);
        // (s=0,a=0,s′=1) at index (0·2+0)·2+1 = 1; (s=1,a=1,s′=0) at (1·2+1)·2+0 = 6.
        assert_eq!(dp[1], 0.5);
        assert_eq!(dp[6], 0.25);
        assert_eq!(dp.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn transition_estimate_respects_deterministic_successors() {
        let mdp = TabularMdp {
            n_states: 2,
            n_actions: 1,
            gamma: 0.9,
            mu0: vec![1.0, 0.0],
            p: vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]],
            r: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ds = sample_dataset(&mdp, &Policy::uniform(2, 1), 6, 50, &mut rng);
        let dp = estimate_transition_occupancy(&ds);
        // Only s=0→s′=1 and s=1→s′=0 can carry mass.
        assert_eq!(dp[(0) * 2 + 0], 0.0);
        assert!(dp[(0) * 2 + 1] > 0.0);
        assert!(dp[(1 * 1 + 0) * 2 + 0] > 0.0);
        assert_eq!(dp[(1 * 1 + 0) * 2 + 1], 0.0);
    }

    #[test]
    fn transition_estimate_marginalizes_to_occupancy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mdp = random_mdp(4, 2, 0.95, &mut rng);
        let ds = sample_dataset(&mdp, &Policy::uniform(4, 2), 15, 200, &mut rng);
        let d = estimate_occupancy(&ds);
        let dp = estimate_transition_occupancy(&ds);
        for sa in 0..8 {
            let marginal: f64 = (0..4).map(|sp| dp[sa * 4 + sp]).sum();
            assert_close(marginal, d[sa], 1e-13);
        }
    }

    #[test]
    fn normalizations_hold_to_twelve_digits() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mdp = random_mdp(5, 3, 0.95, &mut rng);
        let horizon = 20;
        let ds = sample_dataset(&mdp, &Policy::uniform(5, 3), horizon, 1000, &mut rng);
        let d = estimate_occupancy(&ds);
        let expected = 1.0 - mdp.gamma.powi(horizon as i32);
        assert_close(d.iter().sum::<f64>(), expected, 1e-12);
        for t in &ds.trajectories {
            let psi = vectorize_trajectory(t, mdp.gamma, 5, 3);
            assert_close(psi.iter().sum::<f64>(), expected / (1.0 - mdp.gamma), 1e-12);
        }
    }

    #[test]
    fn k_d_single_support_pair() {
        // All mass 0.5 on (s=0,a=0) with deterministic transition to state 1.
        let d_hat = vec![0.5, 0.0];
        let mut d_prime = vec![0.0; 4];
        d_prime[1] = 0.5; // (s=0,a=0,s′=1)
        let k = build_k_d(&d_hat, &d_prime, 0.5, 2, 1);
        assert_eq!(k[0][0], 0.5);
        assert_eq!(k[1][0], -0.25);
    }

    #[test]
    fn k_d_zero_estimates_zero_matrix() {
        let k = build_k_d(&[0.0; 4], &[0.0; 8], 0.9, 2, 2);
        assert!(k.iter().all(|row| row.iter().all(|&v| v == 0.0)));
    }

    /// With the exact d_e and d′_e(s,a,s′) = d_e(s,a)·P(s′|s,a) substituted,
    /// K·w_d must reproduce M·d for any nonnegative d.
    #[test]
    fn k_d_with_exact_estimates_matches_flow_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mdp = random_mdp(3, 2, 0.85, &mut rng);
        let pi = Policy::uniform(3, 2);
        let d_e = occupancy_of_policy(&mdp, &pi).unwrap();
        let mut d_prime = vec![0.0; 3 * 2 * 3];
        for s in 0..3 {
            for a in 0..2 {
                for sp in 0..3 {
                    d_prime[(s * 2 + a) * 3 + sp] = d_e.d[s * 2 + a] * mdp.p[s][a][sp];
                }
            }
        }
        let k = build_k_d(&d_e.d, &d_prime, mdp.gamma, 3, 2);
        let m = build_m(&mdp);
        let d: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..0.4)).collect();
        let w: Vec<f64> = d.iter().zip(&d_e.d).map(|(n, de)| n / de).collect();
        for sp in 0..3 {
            let kw: f64 = k[sp].iter().zip(&w).map(|(a, b)| a * b).sum();
            let md: f64 = m[sp].iter().zip(&d).map(|(a, b)| a * b).sum();
            assert_close(kw, md, 1e-10);
        }
    }

    #[test]
    fn vectorization_hand_computed() {
        let tau = Trajectory { states: vec![0, 1, 0], actions: vec![0, 1] };
        let psi = vectorize_trajectory(&tau, 0.5, 2, 2);
        assert_eq!(psi[0], 1.0);
        assert_eq!(psi[3], 0.5);
    }

    #[test]
    fn vectorization_repeated_pair_geometric_sum() {
        let h = 12;
        let gamma = 0.8;
        let tau = Trajectory { states: vec![0; h + 1], actions: vec![0; h] };
        let psi = vectorize_trajectory(&tau, gamma, 1, 1);
        assert_close(psi[0], (1.0 - gamma.powi(h as i32)) / (1.0 - gamma), 1e-12);
    }

    #[test]
    fn vectorization_reproduces_discounted_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mdp = random_mdp(4, 3, 0.9, &mut rng);
        let r: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..20 {
            let tau = sample_trajectory(&mdp, &Policy::uniform(4, 3), 15, &mut rng);
            let psi = vectorize_trajectory(&tau, mdp.gamma, 4, 3);
            let via_psi: f64 = r.iter().zip(&psi).map(|(a, b)| a * b).sum();
            let mut direct = 0.0;
            let mut disc = 1.0;
            for (s, a) in tau.states.iter().zip(&tau.actions) {
                direct += disc * r[s * 3 + a];
                disc *= mdp.gamma;
            }
            assert_close(via_psi, direct, 1e-12);
        }
    }

    #[test]
    fn greedy_feedback_prefers_better_trajectory_and_breaks_ties_up() {
        let better = Trajectory { states: vec![0, 0], actions: vec![0] };
        let worse = Trajectory { states: vec![0, 0], actions: vec![1] };
        let r = vec![1.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ds = generate_feedback(
            &[(better.clone(), worse.clone()), (worse.clone(), better.clone())],
            &r,
            0.9,
            1,
            2,
            FeedbackModel::Greedy,
            &mut rng,
        );
        assert_eq!(ds.queries[0].y, Label::Discrete(1));
        assert_eq!(ds.queries[1].y, Label::Discrete(2));
        // Identical trajectories tie; the tie resolves to y = 1.
        let ds = generate_feedback(
            &[(better.clone(), better.clone())],
            &r,
            0.9,
            1,
            2,
            FeedbackModel::Greedy,
            &mut rng,
        );
        assert_eq!(ds.queries[0].y, Label::Discrete(1));
    }

    #[test]
    fn btl_feedback_matches_sigmoid() {
        // One-state, two-action MDP: trajectory pairs with a known ψ-gap.
        let t_a = Trajectory { states: vec![0, 0, 0], actions: vec![0, 0] };
        let t_b = Trajectory { states: vec![0, 0, 0], actions: vec![1, 1] };
        let gamma = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for (r0, expected_gap) in [(0.0, 0.0), (0.4, 0.6)] {
            let r = vec![r0, 0.0];
            let n = 10_000;
            let pairs: Vec<_> = (0..n).map(|_| (t_a.clone(), t_b.clone())).collect();
            let ds =
                generate_feedback(&pairs, &r, gamma, 1, 2, FeedbackModel::Btl, &mut rng);
            let ones = ds.queries.iter().filter(|q| q.y == Label::Discrete(1)).count();
            let p_hat = ones as f64 / n as f64;
            // ψ-gap is r0·(1+γ) = 1.5·r0.
            let gap = r[0] * 1.5;
            assert_close(gap, expected_gap, 1e-12);
            let p = 1.0 / (1.0 + (-gap).exp());
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((p_hat - p).abs() <= 3.0 * sigma, "{p_hat} vs {p}");
        }
    }

    #[test]
    fn continuous_feedback_stays_in_scaled_interval() {
        let t_a = Trajectory { states: vec![0, 0, 0], actions: vec![0, 0] };
        let t_b = Trajectory { states: vec![0, 0, 0], actions: vec![1, 1] };
        let r = vec![1.0, -1.0];
        let gamma = 0.5;
        let gap = 2.0 * 1.5; // r·(ψ¹−ψ²) = (1−(−1))·(1+γ)
        let scale = 0.2;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pairs: Vec<_> = (0..500)
            .map(|i| if i % 2 == 0 { (t_a.clone(), t_b.clone()) } else { (t_b.clone(), t_a.clone()) })
            .collect();
        let ds = generate_feedback(
            &pairs,
            &r,
            gamma,
            1,
            2,
            FeedbackModel::ContinuousUniform { scale },
            &mut rng,
        );
        assert_eq!(ds.mode, FeedbackMode::Continuous);
        for (i, q) in ds.queries.iter().enumerate() {
            let Label::Continuous(y) = q.y else { panic!("continuous label expected") };
            if i % 2 == 0 {
                assert!((0.0..=scale * gap).contains(&y), "y={y}");
            } else {
                assert!((-scale * gap..=0.0).contains(&y), "y={y}");
            }
        }
    }

    #[test]
    fn query_pair_edge_cases() {
        let mdp = single_state_mdp(0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        assert!(sample_query_pairs(&mdp, &Policy::uniform(1, 1), 3, 0, &mut rng).is_empty());
        let pairs = sample_query_pairs(&mdp, &Policy::uniform(1, 1), 3, 5, &mut rng);
        for (a, b) in &pairs {
            assert_eq!(a, b, "deterministic rollouts coincide");
        }
    }

    /// Chi-square goodness of fit: the (s0, a0) cell distribution of both
    /// pair members must match the rollout distribution μ0(s)·π(a|s). The
    /// 0.999 quantile comes from the Wilson-Hilferty approximation.
    #[test]
    fn query_pair_marginals_match_rollout_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mdp = random_mdp(3, 2, 0.9, &mut rng);
        let pi = Policy::uniform(3, 2).mixture(&Policy::deterministic(&[1, 1, 0], 2), 0.7);
        let n_q = 20_000;
        let pairs = sample_query_pairs(&mdp, &pi, 2, n_q, &mut rng);

        let chi2_999 = |df: f64| -> f64 {
            let z = 3.090_232_306_167_813; // Φ⁻¹(0.999)
            df * (1.0 - 2.0 / (9.0 * df) + z * (2.0 / (9.0 * df)).sqrt()).powi(3)
        };
        for side in 0..2 {
            let mut counts = vec![0usize; 6];
            for pair in &pairs {
                let t = if side == 0 { &pair.0 } else { &pair.1 };
                counts[t.states[0] * 2 + t.actions[0]] += 1;
            }
            let mut stat = 0.0;
            for s in 0..3 {
                for a in 0..2 {
                    let expect = mdp.mu0[s] * pi.pi[s][a] * n_q as f64;
                    let obs = counts[s * 2 + a] as f64;
                    stat += (obs - expect).powi(2) / expect;
                }
            }
            assert!(stat < chi2_999(5.0), "chi-square stat {stat} too large");
        }
    }

    #[test]
    fn trajectory_jsonl_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mdp = random_mdp(3, 2, 0.9, &mut rng);
        let ds = sample_dataset(&mdp, &Policy::uniform(3, 2), 6, 10, &mut rng);
        let text = ds.to_jsonl();
        assert_eq!(text.lines().count(), 10);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert!(first.get("states").is_some() && first.get("actions").is_some());
        let back = TrajectoryDataset::from_jsonl(&text, 0.9, 3, 2).unwrap();
        assert_eq!(ds.trajectories, back.trajectories);
        assert_eq!(back.horizon, 6);
    }

    #[test]
    fn feedback_jsonl_round_trip_both_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mdp = random_mdp(3, 2, 0.9, &mut rng);
        let r: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pairs = sample_query_pairs(&mdp, &Policy::uniform(3, 2), 4, 8, &mut rng);

        for model in [FeedbackModel::Btl, FeedbackModel::ContinuousUniform { scale: 0.2 }] {
            let ds = generate_feedback(&pairs, &r, 0.9, 3, 2, model, &mut rng);
            let text = ds.to_jsonl();
            let first: serde_json::Value =
                serde_json::from_str(text.lines().next().unwrap()).unwrap();
            for key in ["states", "actions", "y"] {
                assert!(first.get(key).is_some(), "missing key {key}");
            }
            let back = FeedbackDataset::from_jsonl(&text).unwrap();
            assert_eq!(back.mode, ds.mode);
            assert_eq!(back.queries, ds.queries, "labels must round-trip bit-exactly");
        }
    }

    #[test]
    fn dataset_validation_rejects_garbage() {
        assert!(TrajectoryDataset::new(vec![], 0.9, 2, 2).is_err());
        let bad = Trajectory { states: vec![0, 5], actions: vec![0] };
        assert!(TrajectoryDataset::new(vec![bad], 0.9, 2, 2).is_err());
        let q = FeedbackQuery {
            traj1: Trajectory { states: vec![0, 0], actions: vec![0] },
            traj2: Trajectory { states: vec![0, 0], actions: vec![0] },
            y: Label::Discrete(3),
        };
        assert!(FeedbackDataset::new(vec![q], FeedbackMode::Discrete).is_err());
    }
}
