//! Learn a reward from pairwise trajectory preferences.
//!
//! Rolls out a uniform behavior policy on a random MDP, pairs consecutive
//! rollouts into queries, labels each pair with a greedy evaluator (the
//! higher true discounted return wins), and intersects the per-query margin
//! constraints into a reward polyhedron. A strictly negative margin level
//! `ε_r` forces every feasible reward to separate winners from losers.
//! A held-out query set then estimates how well the selected reward
//! generalizes, next to the distribution-free bound `√(log(1/δ)/(2N_q))`.
//!
//! Run with `cargo run --example rlhf_preferences`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rewardlp::data::{generate_feedback, sample_query_pairs, FeedbackModel};
use rewardlp::experiment::{random_mdp, ExperimentConfig};
use rewardlp::mdp::{l1_occupancy_error, Policy};
use rewardlp::rlhf::{build_hf_set, generalization_check, select_reward, HfMode, ObjectiveKind};

fn main() {
    let cfg = ExperimentConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mdp = random_mdp(&cfg, &mut rng);
    let r_true = mdp.r.clone().expect("random_mdp sets the true reward");
    let mu = Policy::uniform(mdp.n_states, mdp.n_actions);

    let n_q = 250;
    let pairs = sample_query_pairs(&mdp, &mu, cfg.horizon, n_q, &mut rng);
    let fb = generate_feedback(
        &pairs,
        &r_true,
        cfg.gamma,
        mdp.n_states,
        mdp.n_actions,
        FeedbackModel::Greedy,
        &mut rng,
    );
    println!("labeled {} queries with the greedy evaluator", fb.queries.len());

    let eps_r = -0.01;
    let hf = build_hf_set(&fb, eps_r, cfg.gamma, mdp.n_states, mdp.n_actions, HfMode::Discrete)
        .expect("feedback set builds");
    println!(
        "feedback polyhedron: {} margin rows over {} reward coordinates (ε_r = {eps_r})",
        hf.cs.a_ineq.len(),
        hf.cs.n_vars()
    );

    let r_hat = select_reward(&hf.cs, ObjectiveKind::Dummy, mdp.n_sa()).expect("set is nonempty");
    let err = l1_occupancy_error(&mdp, &r_true, &r_hat).expect("both rewards score");
    println!("\noccupancy error ‖d*(r_true) − d*(r̂)‖₁ = {err:.4}  (range [0, 2])");

    // Fresh queries the learner never saw.
    let unseen_pairs = sample_query_pairs(&mdp, &mu, cfg.horizon, 2000, &mut rng);
    let unseen = generate_feedback(
        &unseen_pairs,
        &r_true,
        cfg.gamma,
        mdp.n_states,
        mdp.n_actions,
        FeedbackModel::Greedy,
        &mut rng,
    );
    let violation =
        generalization_check(&r_hat, &unseen, eps_r, cfg.gamma, mdp.n_states, mdp.n_actions, 1.0);
    let delta = 0.1_f64;
    let bound = (delta.recip().ln() / (2.0 * n_q as f64)).sqrt();
    println!("\ngeneralization on 2000 unseen queries:");
    println!("  violation fraction = {violation:.4}");
    println!("  bound √(log(1/δ)/(2N_q)) at δ=0.1 = {bound:.4}");
}
