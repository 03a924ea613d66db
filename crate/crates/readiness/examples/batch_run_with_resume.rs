//! Runs a 60-item simulated plan, kills it partway through, resumes from
//! the checkpoint, and shows the final report.json is byte-identical to
//! an uninterrupted run.
//!
//! ```bash
//! cargo run -p readiness --example batch_run_with_resume
//! ```

use std::sync::atomic::{AtomicUsize, Ordering};

use readiness::artifact::{RunTimestamp, Scenario};
use readiness::config::HarnessConfig;
use readiness::metrics::TaskKind;
use readiness::runner::dataset::{Dataset, DatasetItem};
use readiness::runner::provider::{
    synthetic_qrels, InferRequest, InferResponse, Provider, ProviderError, SimProvider,
};
use readiness::runner::{execute_plan, RunPlan, RunnerError};

/// Wraps a provider and simulates a dropped connection after a fixed
/// number of successful calls.
struct FlakyConnection<'a> {
    inner: &'a SimProvider,
    calls: AtomicUsize,
    drop_after: usize,
}

impl Provider for FlakyConnection<'_> {
    fn infer(&self, request: &InferRequest) -> Result<InferResponse, ProviderError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) >= self.drop_after {
            return Err(ProviderError::Fatal("connection lost".to_string()));
        }
        self.inner.infer(request)
    }

    fn name(&self) -> &str {
        "flaky-sim"
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let items: Vec<DatasetItem> = (0..100)
        .map(|i| DatasetItem {
            id: format!("q{i:03}"),
            text: format!("question number {i}"),
            label: None,
            should_escalate: None,
            language: None,
        })
        .collect();
    let dataset = Dataset::from_items("beir_demo", items);
    let qrels = synthetic_qrels(&dataset);

    let mut plan = RunPlan::new(
        "sim_core",
        "beir_demo",
        TaskKind::Retrieval,
        Scenario::SlaFirst,
        42,
        60,
        "gpt-4.1-mini",
    );
    plan.top_k = Some(5);
    plan.workers = 4;
    plan.delay_ms = 0;
    plan.timestamp = Some(RunTimestamp::parse("20260401_120000")?);

    let sim = SimProvider::for_dataset(plan.task, plan.seed, &dataset);
    let config = HarnessConfig::default();
    let root = tempfile::tempdir()?;

    // Reference: one uninterrupted pass.
    let clean_dir = root.path().join("clean");
    let clean = execute_plan(&plan, &dataset, Some(&qrels), &sim, &config, &clean_dir)?;
    println!(
        "uninterrupted run finished: {} items, score {:.4}",
        clean.executed_items, clean.summary_row.score
    );

    // Interrupted: the connection dies after 25 calls, then we resume.
    let resumed_dir = root.path().join("resumed");
    let flaky = FlakyConnection {
        inner: &sim,
        calls: AtomicUsize::new(0),
        drop_after: 25,
    };
    match execute_plan(&plan, &dataset, Some(&qrels), &flaky, &config, &resumed_dir) {
        Err(RunnerError::Interrupted(reason)) => {
            println!("first attempt interrupted as expected: {reason}");
        }
        other => panic!("expected an interruption, got {other:?}"),
    }
    let resumed = execute_plan(&plan, &dataset, Some(&qrels), &sim, &config, &resumed_dir)?;
    println!(
        "resume completed {} remaining items ({} loaded from checkpoint)",
        resumed.executed_items, resumed.skipped_items
    );

    let clean_bytes = std::fs::read(clean_dir.join("report.json"))?;
    let resumed_bytes = std::fs::read(resumed_dir.join("report.json"))?;
    assert_eq!(clean_bytes, resumed_bytes);
    println!(
        "report.json byte-identical across interrupt+resume ({} bytes)",
        clean_bytes.len()
    );
    Ok(())
}
