//! Run a miniature version of the benchmark sweep in-process.
//!
//! Configures a short sample-size grid, runs four algorithms over seeded
//! random MDPs in parallel, prints the per-cell error statistics, and writes
//! the same CSV and SVG artifacts the `rewardlp experiment` subcommand
//! emits. Identical configuration and seed always reproduce byte-identical
//! results.
//!
//! Run with `cargo run --release --example experiment_sweep`.

use std::fs;

use rewardlp::experiment::{
    error_curves_svg, results_to_csv, run_sweep, summarize, Algorithm, ExperimentConfig,
};

fn main() {
    let cfg = ExperimentConfig {
        n_grid: vec![10, 50, 200],
        runs: 8,
        algorithms: vec![
            Algorithm::LpIrl1,
            Algorithm::LpIrlD,
            Algorithm::LpHf,
            Algorithm::MleHf,
        ],
        ..ExperimentConfig::default()
    };
    println!("sweeping N ∈ {:?}, {} runs per cell, {} algorithms\n", cfg.n_grid, cfg.runs, cfg.algorithms.len());

    let results = run_sweep(&cfg, false).expect("sweep completes");
    let summary = summarize(&results);

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

    let out = std::env::temp_dir().join("rewardlp_sweep_example");
    fs::create_dir_all(&out).expect("temp dir creates");
    let csv_path = out.join("results.csv");
    fs::write(&csv_path, results_to_csv(&results)).expect("CSV writes");
    let svg_path = out.join("errors.svg");
    fs::write(&svg_path, error_curves_svg(&summary, "Mean error by sample size"))
        .expect("SVG writes");
    println!("\nwrote {} and {}", csv_path.display(), svg_path.display());
}
