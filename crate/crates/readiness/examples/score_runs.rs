//! Scores run reports under each deployment scenario and shows how
//! present-metric renormalization handles missing dimensions.
//!
//! ```bash
//! cargo run -p readiness --example score_runs
//! ```

use readiness::artifact::{parse_report, Scenario};
use readiness::metrics::{Budget, BudgetMetric, TaskKind};
use readiness::scoring::{applicable_dimensions, builtin_weights, score};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let golden = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden/report.json");
    let report = parse_report(&std::fs::read(golden)?)?;
    println!("run: {}", report.run_id.render()?);
    println!(
        "metrics present: faithfulness={:?} hit@k={:?} p95={}ms",
        report.metrics.faithfulness, report.metrics.retrieval_hit_k, report.latency_p95_ms
    );
    println!();

    // Without budgets, cost and latency join the missing set and the
    // weights renormalize over what's left.
    println!("-- no budgets configured --");
    for scenario in Scenario::ALL {
        let weights = builtin_weights(scenario);
        let result = score(&report.metrics, &weights, TaskKind::Retrieval, &[])?;
        println!(
            "{scenario:<11} score {:.4}  present {:?}  missing {:?}",
            result.value,
            result.present.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
            result.missing.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
        );
    }

    // With budgets the same report scores over more dimensions.
    let budgets = [
        Budget::new(BudgetMetric::Latency, 2000.0, 6000.0)?,
        Budget::new(BudgetMetric::Cost, 0.005, 0.025)?,
    ];
    let mut enriched = report.metrics.clone();
    enriched.retrieval_hit_k = Some(0.833);
    enriched.cost_usd = Some(0.0114);
    println!();
    println!("-- latency/cost budgets + hit@k supplied --");
    for scenario in Scenario::ALL {
        let weights = builtin_weights(scenario);
        let result = score(&enriched, &weights, TaskKind::Retrieval, &budgets)?;
        println!(
            "{scenario:<11} score {:.4}  present {:?}",
            result.value,
            result.present.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
        );
    }

    println!();
    println!(
        "applicable dimensions: retrieval task -> {:?}, ticket task -> {:?}",
        applicable_dimensions(TaskKind::Retrieval)
            .iter()
            .map(|d| d.as_str())
            .collect::<Vec<_>>(),
        applicable_dimensions(TaskKind::Ticket)
            .iter()
            .map(|d| d.as_str())
            .collect::<Vec<_>>(),
    );
    Ok(())
}
