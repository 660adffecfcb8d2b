//! The feasible-reward polyhedron recovered from demonstrations alone.
//!
//! A reward `r` is consistent with near-optimal demonstration data when the
//! dual pair `(u, v)` with `u = d̂_e ∘ r` certifies a small duality gap:
//! `u` plays the role of the reward weighted by the estimated occupancy, and
//! `v ≥ 0` are conic coefficients over a fixed span matrix `X` whose columns
//! have unit sup-norm (so `X v` ranges over candidate dual values while
//! `ε_x·v` prices the statistical error of the estimated flow matrix `K_D`).
//! The polyhedron is
//!
//! ```text
//!   (1−γ)·μ0ᵀXv + ε_xᵀv − 1ᵀu ≤ ε_g        (near-zero duality gap)
//!   u ≤ K_DᵀXv                               (dual feasibility)
//!   v ≥ 0,   −d̂_e ≤ u ≤ d̂_e                (cone + reward box)
//! ```
//!
//! It always contains `(u, v) = (0, 0)`; the reward-gap objective of
//! [`solve_reward_gap_lp`] steers the solver away from that degenerate point
//! by maximizing `rᵀ(d̂_e − d̂_sub)` against a suboptimal baseline occupancy.

use serde::{Deserialize, Serialize};

use crate::data::EmpiricalEstimates;
use crate::linalg::dot;
use crate::lp::{check_feasible, optimize_over, ConstraintSystem, LpStatus};

#[derive(Debug, thiserror::Error)]
pub enum IrlError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("LP solve failed: {0:?}")]
    Solve(LpStatus),
}

/// Choice of span matrix `X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum XMode {
    /// All `2^|S|` sign vectors; the conic hull covers every dual value and
    /// the relaxation behaves like an L¹ penalty. Guarded to `|S| ≤ 20`.
    SignVectors,
    /// Columns of `[I, −I]`: `2|S|` columns, scale-friendly.
    PlusMinusIdentity,
}

impl XMode {
    /// Sign vectors while the column count stays small, `[I, −I]` beyond.
    pub fn default_for(n_states: usize) -> XMode {
        if n_states <= 12 {
            XMode::SignVectors
        } else {
            XMode::PlusMinusIdentity
        }
    }
}

/// Relaxation levels for the demonstration polyhedron.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RelaxationConfig {
    /// Sup-norm radius of the importance-ratio ball the guarantees cover.
    pub b: f64,
    /// Failure probability of the concentration bounds.
    pub delta: f64,
    /// Allowed duality gap.
    pub eps_g: f64,
    pub x_mode: XMode,
    /// Overrides the concentration-derived `ε_x` when set (experiments tune
    /// `ε_g` instead and often want `ε_x` pinned).
    pub eps_x_override: Option<f64>,
}

impl RelaxationConfig {
    pub fn new(b: f64, delta: f64, eps_g: f64, x_mode: XMode) -> Self {
        assert!(b >= 1.0, "radius must be at least 1");
        assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
        assert!(eps_g >= 0.0, "duality-gap slack must be nonnegative");
        RelaxationConfig { b, delta, eps_g, x_mode, eps_x_override: None }
    }

    pub fn with_eps_x(mut self, eps_x: f64) -> Self {
        self.eps_x_override = Some(eps_x);
        self
    }
}

/// The built polyhedron plus everything needed to interpret its points.
#[derive(Clone, Debug)]
pub struct IrlRewardSet {
    /// Constraints over stacked variables `(u ∈ R^{|S||A|}, v ∈ R^{N_x})`.
    pub cs: ConstraintSystem,
    pub est: EmpiricalEstimates,
    /// Span columns, each of length `|S|`.
    pub x: Vec<Vec<f64>>,
    /// Per-column relaxation level (a broadcast scalar).
    pub eps_x: Vec<f64>,
}

impl IrlRewardSet {
    pub fn n_sa(&self) -> usize {
        self.est.n_states * self.est.n_actions
    }
}

/// Builds the span columns for the chosen mode.
pub fn build_x(n_states: usize, mode: XMode) -> Result<Vec<Vec<f64>>, IrlError> {
    match mode {
        XMode::SignVectors => {
            if n_states > 20 {
                return Err(IrlError::Config(format!(
                    "sign-vector span needs 2^{n_states} columns; use PlusMinusIdentity"
                )));
            }
            Ok((0..1usize << n_states)
                .map(|i| {
                    (0..n_states)
                        .map(|k| if (i >> k) & 1 == 1 { 1.0 } else { -1.0 })
                        .collect()
                })
                .collect())
        }
        XMode::PlusMinusIdentity => {
            let mut cols = Vec::with_capacity(2 * n_states);
            for sign in [1.0, -1.0] {
                for k in 0..n_states {
                    let mut col = vec![0.0; n_states];
                    col[k] = sign;
                    cols.push(col);
                }
            }
            Ok(cols)
        }
    }
}

/// Concentration level for the estimated flow matrix: with probability at
/// least `1−δ`, every occupancy whose importance ratio is bounded by `B`
/// satisfies the relaxed flow constraints at this level.
pub fn compute_epsilon_x(
    b: f64,
    gamma: f64,
    horizon: usize,
    n: usize,
    n_sa: usize,
    n_x: usize,
    delta: f64,
) -> f64 {
    let truncation = b * (1.0 + gamma) * gamma.powi(horizon as i32);
    let sampling = b
        * (1.0 + gamma)
        * (1.0 - gamma.powi(horizon as i32))
        * ((2.0 * n_sa as f64 / n as f64) * (2.0 * n_x as f64 / delta).ln()).sqrt();
    truncation + sampling
}

/// Total suboptimality level attached to a recovered reward: with
/// probability at least `1−3δ`, the expert's value under the recovered `r`
/// is within `ε` of every occupancy in the radius-`B` ball.
pub fn suboptimality_epsilon(
    eps_g: f64,
    b: f64,
    gamma: f64,
    horizon: usize,
    n: usize,
    n_sa: usize,
    delta: f64,
) -> f64 {
    let gh = gamma.powi(horizon as i32);
    let nf = n as f64;
    eps_g
        + (1.0 + b) * gh
        + (1.0 - gh) * ((2.0 / nf) * (1.0 / delta).ln()).sqrt()
        + b * (1.0 - gh) * ((2.0 * n_sa as f64 / nf) * (2.0 / delta).ln()).sqrt()
}

/// Assembles the polyhedron from empirical estimates.
pub fn build_irl_set(
    est: &EmpiricalEstimates,
    mu0: &[f64],
    cfg: &RelaxationConfig,
    n: usize,
    horizon: usize,
) -> Result<IrlRewardSet, IrlError> {
    let (n_states, n_actions, gamma) = (est.n_states, est.n_actions, est.gamma);
    let n_sa = n_states * n_actions;
    assert_eq!(mu0.len(), n_states, "initial distribution dimension mismatch");

    let x = build_x(n_states, cfg.x_mode)?;
    let n_x = x.len();
    let eps_scalar = cfg
        .eps_x_override
        .unwrap_or_else(|| compute_epsilon_x(cfg.b, gamma, horizon, n, n_sa, n_x, cfg.delta));
    let eps_x = vec![eps_scalar; n_x];

    let mut cs = ConstraintSystem::new(n_sa + n_x);
    let mut names = Vec::with_capacity(n_sa + n_x);
    for s in 0..n_states {
        for a in 0..n_actions {
            names.push(format!("u_{s}_{a}"));
        }
    }
    names.extend((0..n_x).map(|j| format!("v_{j}")));
    cs.name_vars(names);

    // Duality-gap row: (1−γ)·μ0ᵀXv + ε_xᵀv − 1ᵀu ≤ ε_g.
    let mut gap = vec![-1.0; n_sa];
    gap.extend(x.iter().zip(&eps_x).map(|(col, e)| (1.0 - gamma) * dot(mu0, col) + e));
    cs.add_ineq(gap, cfg.eps_g);

    // Dual feasibility per (s,a): u − (K_DᵀXv) ≤ 0.
    for sa in 0..n_sa {
        let k_col: Vec<f64> = (0..n_states).map(|sp| est.k_d[sp][sa]).collect();
        let mut row = vec![0.0; n_sa + n_x];
        row[sa] = 1.0;
        for (j, col) in x.iter().enumerate() {
            row[n_sa + j] = -dot(&k_col, col);
        }
        cs.add_ineq(row, 0.0);
    }

    // Boxes: |u| ≤ d̂_e pins the reward scale (and zeroes r off-support);
    // v ≥ 0 keeps the span coefficients conic.
    for sa in 0..n_sa {
        cs.set_bounds(sa, -est.d_hat[sa], est.d_hat[sa]);
    }
    for j in 0..n_x {
        cs.set_bounds(n_sa + j, 0.0, f64::INFINITY);
    }

    Ok(IrlRewardSet { cs, est: est.clone(), x, eps_x })
}

/// Recovers the reward from the occupancy-weighted variable: `r = u/d̂_e`
/// componentwise with the convention `0/0 = 0`, clamped to `[−1, 1]` against
/// solver dust.
pub fn extract_reward(u: &[f64], d_hat: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(d_hat)
        .map(|(&ui, &di)| if di == 0.0 { 0.0 } else { (ui / di).clamp(-1.0, 1.0) })
        .collect()
}

/// Maximizes the empirical reward gap `rᵀ(d̂_e − d̂_sub)` over the polyhedron
/// with the coupling `u = d̂_e ∘ r` and box `−1 ≤ r ≤ 1`. Returns the optimal
/// `(r, u, v)`.
pub fn solve_reward_gap_lp(
    irl: &IrlRewardSet,
    d_hat_e: &[f64],
    d_hat_sub: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), IrlError> {
    let n_sa = irl.n_sa();
    assert_eq!(d_hat_e.len(), n_sa);
    assert_eq!(d_hat_sub.len(), n_sa);

    // Stack r in front of the existing (u, v) system.
    let mut cs = ConstraintSystem::new(n_sa + irl.cs.n_vars());
    let names = (0..irl.est.n_states)
        .flat_map(|s| (0..irl.est.n_actions).map(move |a| format!("r_{s}_{a}")))
        .chain(irl.cs.names.iter().cloned())
        .collect::<Vec<_>>();
    cs.name_vars(names);

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
    for i in 0..irl.cs.n_vars() {
        cs.set_bounds(n_sa + i, irl.cs.lower[i], irl.cs.upper[i]);
    }

    // Coupling u(s,a) = d̂_e(s,a)·r(s,a) and the reward box.
    for sa in 0..n_sa {
        let mut row = vec![0.0; cs.n_vars()];
        row[sa] = -d_hat_e[sa];
        row[n_sa + sa] = 1.0;
        cs.add_eq(row, 0.0);
        cs.set_bounds(sa, -1.0, 1.0);
    }

    let mut objective = vec![0.0; cs.n_vars()];
    for sa in 0..n_sa {
        objective[sa] = d_hat_e[sa] - d_hat_sub[sa];
    }
    let sol = optimize_over(&cs, &objective);
    if sol.status != LpStatus::Optimal {
        return Err(IrlError::Solve(sol.status));
    }
    let r = sol.x[..n_sa].to_vec();
    let u = sol.x[n_sa..2 * n_sa].to_vec();
    let v = sol.x[2 * n_sa..].to_vec();
    debug_assert!(check_feasible(&irl.cs, &sol.x[n_sa..], 1e-8));
    Ok((r, u, v))
}
