//! Solve a small tabular MDP through its occupancy-measure dual LP.
//!
//! Builds a three-state chain by hand, solves `max r·d s.t. M·d = (1−γ)μ0,
//! d ≥ 0` for the optimal occupancy measure, reads the optimal policy off
//! the vertex, and cross-checks strong duality against the primal value LP:
//! `(1−γ)·μ0ᵀv*` must equal `rᵀd*`.
//!
//! Run with `cargo run --example solve_mdp`.

use rewardlp::mdp::{
    greedy_policy_from_occupancy, solve_mdp_dual, solve_mdp_primal, TabularMdp,
};

fn main() {
    // A three-state chain. Action 0 drifts back toward state 0, action 1
    // pushes toward state 2, where action 0 earns the only large reward.
    let mdp = TabularMdp {
        n_states: 3,
        n_actions: 2,
        gamma: 0.9,
        mu0: vec![1.0, 0.0, 0.0],
        p: vec![
            vec![vec![0.9, 0.1, 0.0], vec![0.2, 0.8, 0.0]],
            vec![vec![0.7, 0.3, 0.0], vec![0.0, 0.2, 0.8]],
            vec![vec![0.0, 0.1, 0.9], vec![0.3, 0.7, 0.0]],
        ],
        r: None,
    };
    mdp.validate().expect("hand-built model is consistent");

    // r(s, a): staying put is free, pushing costs a little, and sitting in
    // the terminal state pays 1.
    let mut r = vec![0.0; mdp.n_sa()];
    r[mdp.sa(0, 1)] = -0.05;
    r[mdp.sa(1, 1)] = -0.05;
    r[mdp.sa(2, 0)] = 1.0;

    let d = solve_mdp_dual(&mdp, &r).expect("dual LP solves");
    println!("optimal occupancy measure d*(s,a):");
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            println!("  d*({s},{a}) = {:.6}", d.d[mdp.sa(s, a)]);
        }
    }
    let mass: f64 = d.d.iter().sum();
    println!("total mass Σd* = {mass:.12} (an occupancy measure sums to 1)");

    let pi = greedy_policy_from_occupancy(&d, mdp.n_states, mdp.n_actions);
    println!("\ninduced deterministic policy (vertex solutions never mix):");
    for (s, row) in pi.pi.iter().enumerate() {
        let best = row.iter().position(|&p| p > 0.5).unwrap_or(0);
        println!("  state {s}: action {best}");
    }

    let v = solve_mdp_primal(&mdp, &r).expect("primal LP solves");
    println!("\nstate values v*(s): {:?}", v.iter().map(|x| (x * 1e6).round() / 1e6).collect::<Vec<_>>());

    let dual_obj: f64 = r.iter().zip(&d.d).map(|(ri, di)| ri * di).sum();
    let primal_obj: f64 =
        (1.0 - mdp.gamma) * mdp.mu0.iter().zip(&v).map(|(m, vi)| m * vi).sum::<f64>();
    println!("\nstrong duality check:");
    println!("  r·d*           = {dual_obj:.12}");
    println!("  (1−γ)·μ0·v*    = {primal_obj:.12}");
    println!("  gap            = {:.3e}", (dual_obj - primal_obj).abs());
}
