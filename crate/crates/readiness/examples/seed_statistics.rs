//! Aggregates per-seed readiness scores into mean +- sample standard
//! deviation, the robustness view reported per (dataset, scenario, k,
//! model) group.
//!
//! ```bash
//! cargo run -p readiness --example seed_statistics
//! ```

use readiness::analysis::mean_and_sample_std;

fn main() {
    // Per-seed readiness scores for two k=5 sla-first groups (seeds
    // 42/1337/2024).
    let groups = [
        ("beir_fiqa    sla-first k=5 gpt-4.1-mini", vec![0.824, 0.818, 0.783]),
        ("beir_scifact sla-first k=5 gpt-4.1-mini", vec![0.830, 0.802, 0.800]),
        ("beir_scifact sla-first k=5 gpt-4.1     ", vec![0.837, 0.779, 0.779]),
    ];
    println!("{:<42} {:>6} {:>8}", "group", "mean", "std(n-1)");
    for (label, scores) in groups {
        let (mean, std) = mean_and_sample_std(&scores);
        println!(
            "{label:<42} {mean:>6.3} {:>8}",
            std.map(|s| format!("{s:.3}")).unwrap_or_else(|| "-".into())
        );
    }
    println!();
    println!("single-seed groups report the mean only:");
    let (mean, std) = mean_and_sample_std(&[0.830]);
    println!("one run -> mean {mean:.3}, std {std:?}");
}
