//! Offline reward learning as linear programming.
//!
//! This crate estimates reward functions for tabular Markov decision
//! processes from two kinds of offline data — expert demonstrations and
//! pairwise trajectory preferences — by building explicit polyhedra of
//! rewards consistent with the data and selecting points from them with a
//! deterministic LP solver. Both data sources share one occupancy-measure
//! formulation, so their constraint sets intersect cleanly.
//!
//! Module map:
//!
//! - [`lp`] — dense two-phase simplex solver and the [`lp::ConstraintSystem`]
//!   polyhedron type every reward set is built on.
//! - [`mdp`] — tabular discounted MDPs, their primal/dual occupancy LPs, and
//!   the L¹ occupancy-error metric used to score learned rewards.
//! - [`data`] — trajectory simulation, empirical occupancy estimators, and
//!   simulated preference feedback (Bradley-Terry, greedy, continuous).
//! - [`irl`] — the feasible-reward polyhedron implied by demonstrations,
//!   its concentration-based relaxation levels, and the reward-gap LP that
//!   avoids degenerate (e.g. all-zero) rewards.
//! - [`rlhf`] — preference-constrained reward sets, their generalization
//!   check, and the demonstration/preference intersection set.
//! - [`baselines`] — maximum-likelihood and pessimistic-MLE comparison
//!   algorithms plus the three-arm bandit instance on which they break.
//! - [`experiment`] — seeded, parallel benchmark sweeps with CSV/SVG output,
//!   driven by the `rewardlp` binary or the `experiment_sweep` example.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod baselines;
pub mod data;
pub mod experiment;
pub mod irl;
mod linalg;
pub mod lp;
pub mod mdp;
pub mod rlhf;
