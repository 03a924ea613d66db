//! Evaluates the bundled prompt-regression fixtures (baseline vs bias
//! and policy variants on two ticket datasets) against the default gate
//! thresholds and prints the delta table with verdicts.
//!
//! ```bash
//! cargo run -p readiness --example regression_gate
//! ```

use readiness::artifact::load_runs;
use readiness::gates::{compute_deltas, evaluate, select_baseline, GateConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ticket_runs");
    let (reports, _) = load_runs(std::path::Path::new(fixtures))?;
    let config = GateConfig::default();

    println!(
        "{:<12} {:<9} {:>9} {:>8} {:>9} {:>9}  gate",
        "dataset", "variant", "dWorkflow", "dPolicy", "dRouting", "dP95(ms)"
    );
    for dataset in ["cs_tickets", "it_tickets"] {
        let baseline = select_baseline(reports.clone(), dataset, "baseline")
            .ok_or("missing baseline fixture")?;
        for candidate in reports
            .iter()
            .filter(|r| r.dataset_id() == dataset)
            .filter(|r| r.prompt_version.as_deref() != Some("baseline"))
        {
            let deltas = compute_deltas(&baseline, candidate)?;
            let verdict = evaluate(&deltas, candidate, &[], &config)?;
            println!(
                "{:<12} {:<9} {:>9.2} {:>8.2} {:>9.2} {:>9.0}  {}",
                dataset,
                deltas.variant,
                deltas.d_workflow.unwrap_or(f64::NAN),
                deltas.d_policy.unwrap_or(f64::NAN),
                deltas.d_routing.unwrap_or(f64::NAN),
                deltas.d_p95_ms,
                if verdict.passed() { "pass" } else { "FAIL" },
            );
            for reason in &verdict.reasons {
                println!(
                    "{:>24} tripped {} (observed {:.3}, threshold {:.3})",
                    "", reason.rule, reason.observed, reason.threshold
                );
            }
        }
        // A candidate identical to its baseline sails through.
        let deltas = compute_deltas(&baseline, &baseline)?;
        let verdict = evaluate(&deltas, &baseline, &[], &config)?;
        println!(
            "{:<12} {:<9} {:>9.2} {:>8.2} {:>9.2} {:>9.0}  {}",
            dataset,
            "self",
            deltas.d_workflow.unwrap_or(f64::NAN),
            deltas.d_policy.unwrap_or(f64::NAN),
            deltas.d_routing.unwrap_or(f64::NAN),
            deltas.d_p95_ms,
            if verdict.passed() { "pass" } else { "FAIL" },
        );
    }
    Ok(())
}
