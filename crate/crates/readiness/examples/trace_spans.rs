//! Executes a small simulated ticket plan and prints the emitted span
//! trees: one `infer` root per item with task-appropriate children and
//! hashed ticket identifiers.
//!
//! ```bash
//! cargo run -p readiness --example trace_spans
//! ```

use readiness::artifact::{RunTimestamp, Scenario};
use readiness::config::HarnessConfig;
use readiness::metrics::TaskKind;
use readiness::runner::dataset::{Dataset, DatasetItem};
use readiness::runner::provider::SimProvider;
use readiness::runner::span::parse_spans;
use readiness::runner::{execute_plan, RunPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let items: Vec<DatasetItem> = (0..10)
        .map(|i| DatasetItem {
            id: format!("t{i:02}"),
            text: format!("vpn drops after {i} minutes, reconnect fails"),
            label: Some(["access", "technical_support"][i % 2].to_string()),
            should_escalate: Some(i % 5 == 0),
            language: Some("en".to_string()),
        })
        .collect();
    let dataset = Dataset::from_items("demo_tickets", items);

    let mut plan = RunPlan::new(
        "sim_core",
        "demo_tickets",
        TaskKind::Ticket,
        Scenario::RiskFirst,
        7,
        4,
        "gpt-4.1",
    );
    plan.delay_ms = 0;
    plan.timestamp = Some(RunTimestamp::parse("20260401_120000")?);

    let provider = SimProvider::for_dataset(plan.task, plan.seed, &dataset);
    let config = HarnessConfig::default();
    let dir = tempfile::tempdir()?;
    let run_dir = dir.path().join("run");
    execute_plan(&plan, &dataset, None, &provider, &config, &run_dir)?;

    let spans = parse_spans(&std::fs::read(run_dir.join("spans.jsonl"))?)?;
    for root in spans.iter().filter(|s| s.parent_id.is_none()) {
        println!(
            "{} (run_id={}, latency_ms={}, cost_usd_est={})",
            root.name,
            root.attributes["run_id"].as_str().unwrap_or("?"),
            root.attributes["latency_ms"],
            root.attributes["cost_usd_est"],
        );
        for child in spans
            .iter()
            .filter(|s| s.parent_id.as_deref() == Some(root.span_id.as_str()))
        {
            let detail: Vec<String> = child
                .attributes
                .iter()
                .filter(|(k, _)| *k != "latency_ms")
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            println!(
                "  {} (latency_ms={}) {}",
                child.name,
                child.attributes["latency_ms"],
                detail.join(" ")
            );
        }
    }
    Ok(())
}
