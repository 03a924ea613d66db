//! Re-ranks a set of simulated runs under alternative weight profiles
//! (uniform, no-cost, policy-gated) and reports top-1 agreement and
//! top-5 overlap against the base ranking.
//!
//! ```bash
//! cargo run -p readiness --example weight_ablation
//! ```

use readiness::artifact::Scenario;
use readiness::metrics::{Budget, BudgetMetric, MetricSet, TaskKind};
use readiness::scoring::{builtin_weights, weight_ablation, AblationInput, AblationVariant};
use readiness::seeded::SplitMix64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = SplitMix64::new(2024);
    let mut runs = Vec::new();
    for scenario in [Scenario::SlaFirst, Scenario::RiskFirst] {
        for i in 0..9 {
            runs.push(AblationInput {
                run_id: format!("run-{scenario}-{i:02}"),
                dataset_id: "beir_scifact".to_string(),
                scenario,
                task: TaskKind::Retrieval,
                metrics: MetricSet {
                    faithfulness: Some(0.4 + rng.next_f64() * 0.5),
                    retrieval_hit_k: Some(0.6 + rng.next_f64() * 0.35),
                    cost_usd: Some(0.006 + rng.next_f64() * 0.016),
                    p95_latency_ms: Some(2500.0 + rng.next_f64() * 5000.0),
                    ..MetricSet::default()
                },
            });
        }
    }
    let budgets = [
        Budget::new(BudgetMetric::Cost, 0.005, 0.025)?,
        Budget::new(BudgetMetric::Latency, 2000.0, 6000.0)?,
    ];
    let report = weight_ablation(
        &runs,
        &builtin_weights(Scenario::SlaFirst),
        &[
            AblationVariant::Uniform,
            AblationVariant::NoCost,
            AblationVariant::PolicyGated,
        ],
        &budgets,
    )?;
    println!("note: {}", report.note);
    println!();
    println!(
        "{:<14} {:<11} {:>6}  {:<13} {:>5} {:>9}",
        "dataset", "scenario", "runs", "variant", "top-1", "top-5"
    );
    for group in &report.groups {
        for outcome in &group.variants {
            println!(
                "{:<14} {:<11} {:>6}  {:<13} {:>5} {:>6}/{}",
                group.dataset_id,
                group.scenario,
                group.n_runs,
                outcome.variant,
                if outcome.top1_agree { "Y" } else { "N" },
                outcome.top_overlap,
                outcome.top_size,
            );
        }
    }
    Ok(())
}
