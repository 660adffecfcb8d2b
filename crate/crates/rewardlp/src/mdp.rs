//! Tabular discounted MDPs and their occupancy-measure linear programs.
//!
//! A reward-equipped MDP induces two LPs in exact duality: the primal over
//! state values, `min (1−γ)μ0·v s.t. Mᵀv ≥ r`, and the dual over
//! state-action occupancy measures, `max r·d s.t. M·d = (1−γ)μ0, d ≥ 0`,
//! where `M(s′,(s,a)) = 1{s′=s} − γ·P(s′|s,a)`. Optimal vertices of the dual
//! are occupancies of deterministic policies, which is what lets learned
//! rewards be scored by the L¹ distance between optimal occupancies
//! ([`l1_occupancy_error`], always in [0, 2]).
//!
//! State-action pairs are flattened row-major: index `(s, a) = s·|A| + a`.

use serde::{Deserialize, Serialize};

use crate::linalg::solve_dense;
use crate::lp::{solve_lp, LpProblem, LpStatus};

/// Tolerance for probability-vector validation.
const PROB_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum MdpError {
    #[error("LP solve returned {0:?}")]
    Solve(LpStatus),
    #[error("occupancy linear system is singular")]
    SingularSystem,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// A finite discounted MDP `(S, A, P, γ, μ0)` with an optional reward
/// vector over state-action pairs.
///
/// Serializes to/from JSON as
/// `{n_states, n_actions, gamma, mu0: [...], P: [[[...]]], r: [...]}` with
/// `P[s][a][s′]` row-major; doubles round-trip bit-exactly via the
/// shortest-representation decimal encoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub mu0: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
}

impl TabularMdp {
    /// Number of state-action pairs (the dimension of rewards/occupancies).
    pub fn n_sa(&self) -> usize {
        self.n_states * self.n_actions
    }

    /// Flattened state-action index.
    pub fn sa(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    /// Checks the model invariants: probability rows summing to one, a
    /// discount in (0,1), and rewards (when present) within [−1, 1].
    pub fn validate(&self) -> Result<(), MdpError> {
        let fail = |msg: String| Err(MdpError::InvalidModel(msg));
        if self.n_states == 0 || self.n_actions == 0 {
            return fail("empty state or action space".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma {} outside (0,1)", self.gamma));
        }
        if self.mu0.len() != self.n_states {
            return fail(format!("mu0 length {} != {}", self.mu0.len(), self.n_states));
        }
        if (self.mu0.iter().sum::<f64>() - 1.0).abs() > PROB_TOL
            || self.mu0.iter().any(|&v| v < 0.0)
        {
            return fail("mu0 is not a probability vector".into());
        }
        if self.p.len() != self.n_states
            || self.p.iter().any(|rows| rows.len() != self.n_actions)
        {
            return fail("transition tensor shape mismatch".into());
        }
        for (s, rows) in self.p.iter().enumerate() {
            for (a, row) in rows.iter().enumerate() {
                if row.len() != self.n_states {
                    return fail(format!("P[{s}][{a}] length mismatch"));
                }
                if (row.iter().sum::<f64>() - 1.0).abs() > PROB_TOL
                    || row.iter().any(|&v| v < 0.0)
                {
                    return fail(format!("P[{s}][{a}] is not a probability vector"));
                }
            }
        }
        if let Some(r) = &self.r {
            if r.len() != self.n_sa() {
                return fail(format!("reward length {} != {}", r.len(), self.n_sa()));
            }
            if r.iter().any(|&v| v.abs() > 1.0) {
                return fail("reward entries must lie in [-1, 1]".into());
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("MDP serializes")
    }

    /// Parses and validates an MDP from its JSON form.
    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        let mdp: TabularMdp = serde_json::from_str(text)
            .map_err(|e| MdpError::InvalidModel(format!("JSON parse: {e}")))?;
        mdp.validate()?;
        Ok(mdp)
    }
}

/// A stochastic policy; `pi[s][a]` is the probability of action `a` in `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub pi: Vec<Vec<f64>>,
}

impl Policy {
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Policy { pi: vec![vec![1.0 / n_actions as f64; n_actions]; n_states] }
    }

    /// The deterministic policy taking `actions[s]` in state `s`.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let pi = actions
            .iter()
            .map(|&a| {
                assert!(a < n_actions, "action index out of range");
                let mut row = vec![0.0; n_actions];
                row[a] = 1.0;
                row
            })
            .collect();
        Policy { pi }
    }

    /// Convex mixture `w·self + (1−w)·other`.
    pub fn mixture(&self, other: &Policy, w: f64) -> Policy {
        assert!((0.0..=1.0).contains(&w));
        let pi = self
            .pi
            .iter()
            .zip(&other.pi)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| w * a + (1.0 - w) * b).collect())
            .collect();
        Policy { pi }
    }

    /// Checks rows are probability vectors.
    pub fn validate(&self) -> Result<(), MdpError> {
        for (s, row) in self.pi.iter().enumerate() {
            if (row.iter().sum::<f64>() - 1.0).abs() > PROB_TOL || row.iter().any(|&v| v < 0.0) {
                return Err(MdpError::InvalidModel(format!("policy row {s} not stochastic")));
            }
        }
        Ok(())
    }
}

/// Discounted state-action visitation vector (flattened `(s, a)`); a valid
/// occupancy satisfies `M·d = (1−γ)μ0` and sums to one.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyVector {
    pub d: Vec<f64>,
}

/// Importance ratio `w(s,a) = d(s,a)/d_ref(s,a)`, zero off the reference
/// support.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    pub w: Vec<f64>,
}

/// The `|S| × |S||A|` constraint matrix `M(s′,(s,a)) = 1{s′=s} − γ·P(s′|s,a)`
/// shared by the primal and dual MDP LPs. Every column sums to `1−γ`.
pub fn build_m(mdp: &TabularMdp) -> Vec<Vec<f64>> {
    let n_sa = mdp.n_sa();
    let mut m = vec![vec![0.0; n_sa]; mdp.n_states];
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let col = mdp.sa(s, a);
            for sp in 0..mdp.n_states {
                let indicator = if sp == s { 1.0 } else { 0.0 };
                m[sp][col] = indicator - mdp.gamma * mdp.p[s][a][sp];
            }
        }
    }
    m
}

/// Solves the dual occupancy LP `max r·d s.t. M·d = (1−γ)μ0, d ≥ 0` to a
/// vertex, which is always the occupancy of a deterministic policy. The LP
/// is feasible and bounded for every valid MDP, so only numerical failure
/// can surface as an error.
pub fn solve_mdp_dual(mdp: &TabularMdp, r: &[f64]) -> Result<OccupancyVector, MdpError> {
    let n_sa = mdp.n_sa();
    assert_eq!(r.len(), n_sa, "reward length mismatch");
    let m = build_m(mdp);
    let mut p = LpProblem::new(n_sa);
    p.objective = r.to_vec();
    for (sp, row) in m.into_iter().enumerate() {
        p.a_eq.push(row);
        p.b_eq.push((1.0 - mdp.gamma) * mdp.mu0[sp]);
    }
    p.lower = vec![0.0; n_sa];
    let sol = solve_lp(&p);
    if sol.status != LpStatus::Optimal {
        return Err(MdpError::Solve(sol.status));
    }
    let mut d = sol.x;
    for v in d.iter_mut() {
        // A vertex may carry ±1e-12 dust on its zero coordinates.
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(OccupancyVector { d })
}

/// Solves the primal value LP `min (1−γ)μ0·v s.t. Mᵀv ≥ r`. By strong
/// duality its optimum equals [`solve_mdp_dual`]'s objective.
pub fn solve_mdp_primal(mdp: &TabularMdp, r: &[f64]) -> Result<Vec<f64>, MdpError> {
    let n_sa = mdp.n_sa();
    assert_eq!(r.len(), n_sa, "reward length mismatch");
    let m = build_m(mdp);
    let mut p = LpProblem::new(mdp.n_states);
    // Minimization is expressed as maximizing the negated objective, and
    // Mᵀv ≥ r as −Mᵀv ≤ −r.
    p.objective = mdp.mu0.iter().map(|&mu| -(1.0 - mdp.gamma) * mu).collect();
    for col in 0..n_sa {
        p.a_ineq.push((0..mdp.n_states).map(|sp| -m[sp][col]).collect());
        p.b_ineq.push(-r[col]);
    }
    let sol = solve_lp(&p);
    if sol.status != LpStatus::Optimal {
        return Err(MdpError::Solve(sol.status));
    }
    Ok(sol.x)
}

/// Occupancy measure of a stochastic policy via the dense linear system
/// `(I − γ·P_πᵀ)·ρ = (1−γ)μ0` over state marginals, then `d(s,a) =
/// π(a|s)·ρ(s)`. Exact (up to the solve) for any γ < 1.
pub fn occupancy_of_policy(mdp: &TabularMdp, pi: &Policy) -> Result<OccupancyVector, MdpError> {
    let n = mdp.n_states;
    assert_eq!(pi.pi.len(), n, "policy state count mismatch");
    // System matrix A[s′][s] = 1{s′=s} − γ·Σ_a π(a|s)·P(s′|s,a).
    let mut a = vec![vec![0.0; n]; n];
    for s in 0..n {
        for act in 0..mdp.n_actions {
            let w = pi.pi[s][act];
            if w == 0.0 {
                continue;
            }
            for sp in 0..n {
                a[sp][s] -= mdp.gamma * w * mdp.p[s][act][sp];
            }
        }
        a[s][s] += 1.0;
    }
    let b: Vec<f64> = mdp.mu0.iter().map(|&mu| (1.0 - mdp.gamma) * mu).collect();
    let rho = solve_dense(&a, &b, 1e-13).ok_or(MdpError::SingularSystem)?;
    let mut d = vec![0.0; mdp.n_sa()];
    for s in 0..n {
        for act in 0..mdp.n_actions {
            d[mdp.sa(s, act)] = pi.pi[s][act] * rho[s].max(0.0);
        }
    }
    Ok(OccupancyVector { d })
}

/// The policy proportional to an occupancy vector: `π(a|s) ∝ d(s,a)`,
/// uniform in states with zero marginal.
pub fn greedy_policy_from_occupancy(
    d: &OccupancyVector,
    n_states: usize,
    n_actions: usize,
) -> Policy {
    assert_eq!(d.d.len(), n_states * n_actions, "occupancy length mismatch");
    let mut pi = Vec::with_capacity(n_states);
    for s in 0..n_states {
        let row = &d.d[s * n_actions..(s + 1) * n_actions];
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            pi.push(row.iter().map(|&v| v / total).collect());
        } else {
            pi.push(vec![1.0 / n_actions as f64; n_actions]);
        }
    }
    Policy { pi }
}

/// Componentwise importance ratio `d/d_ref` with the `0/0 = 0` convention:
/// wherever the reference occupancy is zero the ratio is defined as zero.
pub fn weight_ratio(d: &OccupancyVector, d_ref: &OccupancyVector) -> WeightVector {
    assert_eq!(d.d.len(), d_ref.d.len(), "occupancy length mismatch");
    let w = d
        .d
        .iter()
        .zip(&d_ref.d)
        .map(|(&num, &den)| if den > 0.0 { num / den } else { 0.0 })
        .collect();
    WeightVector { w }
}

/// Evaluation metric: `‖d*(r_true) − d*(r_hat)‖₁ ∈ [0, 2]`, both optimal
/// occupancies computed by the same deterministic vertex solver so that
/// reward vectors inducing the same optimal policy score exactly zero.
pub fn l1_occupancy_error(mdp: &TabularMdp, r_true: &[f64], r_hat: &[f64]) -> Result<f64, MdpError> {
    let d_true = solve_mdp_dual(mdp, r_true)?;
    let d_hat = solve_mdp_dual(mdp, r_hat)?;
    Ok(d_true.d.iter().zip(&d_hat.d).map(|(a, b)| (a - b).abs()).sum())
}
