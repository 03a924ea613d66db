//! Batch execution of evaluation run plans: deterministic seeded
//! sampling, a bounded worker pool over the inference contract,
//! per-item checkpointing with resume, span emission, and artifact
//! writing.
//!
//! Completing a plan in one pass or across any number of interruptions
//! produces byte-identical `report.json` output with the simulator,
//! because responses are pure functions of the plan and aggregation is
//! order-independent.

pub mod checkpoint;
pub mod dataset;
pub mod provider;
pub mod span;

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::artifact::{
    write_atomic, write_report, write_run_log, write_summary_csv, RagasStatus, Retriever,
    RerankerMode, RunId, RunLogRecord, RunReport, RunTimestamp, Scenario, SummaryRow,
};
use crate::config::HarnessConfig;
use crate::metrics::{aggregate_run, Qrels, TaskKind};
use crate::policy::{check_policies, hash_ticket_id, validate_routing_output};
use crate::scoring::score;
use crate::seeded::fnv1a64;

use checkpoint::{load_checkpoint, CheckpointHeader, RunWriter, CHECKPOINT_VERSION};
use dataset::{sample_dataset, Dataset, DatasetItem};
use provider::{InferRequest, Provider, ProviderError};
use span::SpanRecord;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("sample_n {requested} exceeds dataset size {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("checkpoint corrupt: {0}")]
    CheckpointCorrupt(String),
    #[error("checkpoint belongs to a different plan (fingerprint {found} != {expected}); refusing to resume")]
    FingerprintMismatch { found: String, expected: String },
    #[error("run interrupted: {0}")]
    Interrupted(String),
    #[error("artifact error: {0}")]
    Artifact(#[from] crate::artifact::ArtifactError),
    #[error("metric error: {0}")]
    Metric(#[from] crate::metrics::MetricError),
    #[error("scoring error: {0}")]
    Score(#[from] crate::scoring::ScoreError),
}

/// Everything that identifies one evaluation run. Worker count and
/// delay are operational knobs and stay out of the plan fingerprint, so
/// a run may resume under different parallelism.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub suite: String,
    pub dataset_id: String,
    pub task: TaskKind,
    pub scenario: Scenario,
    pub top_k: Option<u32>,
    pub seed: u64,
    pub sample_n: usize,
    pub strata: Option<String>,
    pub model: String,
    pub provider_name: String,
    pub prompt_version: String,
    pub pipeline_version: String,
    pub retriever: Option<Retriever>,
    pub reranker: Option<RerankerMode>,
    pub workers: usize,
    pub delay_ms: u64,
    /// Minted at plan start; resume keeps the original identity.
    pub timestamp: Option<RunTimestamp>,
}

impl RunPlan {
    pub fn new(
        suite: impl Into<String>,
        dataset_id: impl Into<String>,
        task: TaskKind,
        scenario: Scenario,
        seed: u64,
        sample_n: usize,
        model: impl Into<String>,
    ) -> Self {
        Self {
            suite: suite.into(),
            dataset_id: dataset_id.into(),
            task,
            scenario,
            top_k: None,
            seed,
            sample_n,
            strata: None,
            model: model.into(),
            provider_name: provider::SIM_PROVIDER_NAME.to_string(),
            prompt_version: "baseline".to_string(),
            pipeline_version: "v1".to_string(),
            retriever: None,
            reranker: None,
            workers: 4,
            delay_ms: 100,
            timestamp: None,
        }
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<(), RunnerError> {
        if self.workers == 0 {
            return Err(RunnerError::InvalidPlan("workers must be >= 1".to_string()));
        }
        if self.sample_n == 0 {
            return Err(RunnerError::InvalidPlan("sample_n must be >= 1".to_string()));
        }
        if self.sample_n > dataset.items.len() {
            return Err(RunnerError::SampleTooLarge {
                requested: self.sample_n,
                available: dataset.items.len(),
            });
        }
        if dataset.id != self.dataset_id {
            return Err(RunnerError::InvalidPlan(format!(
                "plan dataset {:?} does not match loaded dataset {:?}",
                self.dataset_id, dataset.id
            )));
        }
        Ok(())
    }

    /// Digest of the run identity plus the dataset content. Resuming
    /// into a plan with a different fingerprint is refused.
    pub fn fingerprint(&self, dataset_digest: &str) -> String {
        let identity = json!({
            "suite": self.suite,
            "dataset_id": self.dataset_id,
            "dataset_digest": dataset_digest,
            "task": self.task,
            "scenario": self.scenario,
            "top_k": self.top_k,
            "seed": self.seed,
            "sample_n": self.sample_n,
            "strata": self.strata,
            "model": self.model,
            "provider": self.provider_name,
            "prompt_version": self.prompt_version,
            "pipeline_version": self.pipeline_version,
            "retriever": self.retriever,
            "reranker": self.reranker,
        });
        let mut hasher = Sha256::new();
        hasher.update(identity.to_string().as_bytes());
        format!("{:x}", hasher.finalize())
    }

    fn run_id(&self, timestamp: RunTimestamp) -> RunId {
        RunId {
            suite: self.suite.clone(),
            dataset_id: self.dataset_id.clone(),
            model_id: self.model.clone(),
            scenario: self.scenario,
            top_k: self.top_k,
            seed: self.seed,
            timestamp,
        }
    }
}

/// What one `execute_plan` call did.
#[derive(Debug)]
pub struct ExecutionReport {
    pub run_id: RunId,
    pub run_dir: PathBuf,
    pub report: RunReport,
    pub summary_row: SummaryRow,
    pub resumed: bool,
    pub executed_items: usize,
    pub skipped_items: usize,
}

/// A transient-failure record: the item was attempted and given up on.
/// Kept distinguishable so the run can be flagged with evaluator errors
/// after a resume as well.
fn failed_record(item_key: &str, gold: &DatasetItem, task: TaskKind) -> RunLogRecord {
    RunLogRecord {
        item_id: item_key.to_string(),
        latency_ms: 0.0,
        tokens_in: 0,
        tokens_out: 0,
        retrieved_doc_ids: None,
        predicted_label: None,
        gold_label: match task {
            TaskKind::Ticket => gold.label.clone(),
            TaskKind::Retrieval => None,
        },
        should_escalate: None,
        gold_escalate: match task {
            TaskKind::Ticket => gold.should_escalate,
            TaskKind::Retrieval => None,
        },
        policy_violations: vec![],
        faithfulness: None,
        schema_valid: false,
    }
}

fn is_failed_record(record: &RunLogRecord) -> bool {
    !record.schema_valid
        && record.latency_ms == 0.0
        && record.tokens_in == 0
        && record.tokens_out == 0
}

/// Runs a plan to completion, resuming from the co-located checkpoint
/// when one exists. Artifacts (`report.json`, `summary.csv`,
/// `run_log.jsonl`) are written atomically once every sampled item has
/// settled; spans stream to `spans.jsonl` as items complete.
pub fn execute_plan(
    plan: &RunPlan,
    dataset: &Dataset,
    qrels: Option<&Qrels>,
    provider: &dyn Provider,
    config: &HarnessConfig,
    run_dir: &Path,
) -> Result<ExecutionReport, RunnerError> {
    plan.validate(dataset)?;
    std::fs::create_dir_all(run_dir).map_err(|source| RunnerError::Io {
        path: run_dir.display().to_string(),
        source,
    })?;
    let checkpoint_path = run_dir.join("checkpoint.jsonl");
    let spans_path = run_dir.join("spans.jsonl");
    let fingerprint = plan.fingerprint(&dataset.digest);

    let (run_id, mut done, writer, resumed) = match load_checkpoint(&checkpoint_path)? {
        Some(loaded) => {
            if loaded.header.fingerprint != fingerprint {
                return Err(RunnerError::FingerprintMismatch {
                    found: loaded.header.fingerprint,
                    expected: fingerprint,
                });
            }
            let run_id = RunId::parse(&loaded.header.run_id)?;
            let done: BTreeMap<String, RunLogRecord> = loaded
                .records
                .into_iter()
                .map(|r| (r.item_id.clone(), r))
                .collect();
            let writer = RunWriter::append_to(&checkpoint_path, &spans_path)?;
            (run_id, done, writer, true)
        }
        None => {
            let timestamp = plan
                .timestamp
                .clone()
                .unwrap_or_else(RunTimestamp::now_utc);
            let run_id = plan.run_id(timestamp);
            let header = CheckpointHeader {
                version: CHECKPOINT_VERSION,
                fingerprint: fingerprint.clone(),
                run_id: run_id.render()?,
            };
            let writer = RunWriter::create(&checkpoint_path, &spans_path, &header)?;
            (run_id, BTreeMap::new(), writer, false)
        }
    };
    let run_id_str = run_id.render()?;

    let sample = sample_dataset(&dataset.items, plan.sample_n, plan.seed, plan.strata.as_deref())?;
    let item_key = |item: &DatasetItem| match plan.task {
        TaskKind::Ticket => hash_ticket_id(&item.id),
        TaskKind::Retrieval => item.id.clone(),
    };
    let pending: VecDeque<DatasetItem> = sample
        .iter()
        .filter(|item| !done.contains_key(&item_key(item)))
        .cloned()
        .collect();
    let skipped = sample.len() - pending.len();
    let to_execute = pending.len();

    let queue = Mutex::new(pending);
    let results: Mutex<&mut BTreeMap<String, RunLogRecord>> = Mutex::new(&mut done);
    let writer = Mutex::new(writer);
    let abort = AtomicBool::new(false);
    let fatal: Mutex<Option<String>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..plan.workers.min(to_execute.max(1)) {
            scope.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    return;
                }
                let item = match queue.lock().unwrap().pop_front() {
                    Some(item) => item,
                    None => return,
                };
                if plan.delay_ms > 0 {
                    std::thread::sleep(std::time::Duration::from_millis(plan.delay_ms));
                }
                match run_item(plan, config, provider, &run_id_str, &item) {
                    Ok((record, span_lines)) => {
                        let key = record.item_id.clone();
                        if let Err(e) = writer.lock().unwrap().append(&record, &span_lines) {
                            *fatal.lock().unwrap() = Some(e.to_string());
                            abort.store(true, Ordering::SeqCst);
                            return;
                        }
                        results.lock().unwrap().insert(key, record);
                    }
                    Err(ItemError::Failed) => {
                        let record = failed_record(&item_key(&item), &item, plan.task);
                        let key = record.item_id.clone();
                        if let Err(e) = writer.lock().unwrap().append(&record, &[]) {
                            *fatal.lock().unwrap() = Some(e.to_string());
                            abort.store(true, Ordering::SeqCst);
                            return;
                        }
                        results.lock().unwrap().insert(key, record);
                    }
                    Err(ItemError::Fatal(message)) => {
                        *fatal.lock().unwrap() = Some(message);
                        abort.store(true, Ordering::SeqCst);
                        return;
                    }
                }
            });
        }
    });

    if let Some(message) = fatal.into_inner().unwrap() {
        return Err(RunnerError::Interrupted(message));
    }

    // Every sampled item settled; assemble artifacts in sample order.
    let mut records = Vec::with_capacity(sample.len());
    for item in &sample {
        let key = item_key(item);
        let record = done
            .get(&key)
            .cloned()
            .ok_or_else(|| RunnerError::Interrupted(format!("item {key} never settled")))?;
        record.validate(plan.top_k)?;
        records.push(record);
    }
    let evaluator_errors = records.iter().filter(|r| is_failed_record(r)).count() as u64;

    let prices = config
        .prices
        .models
        .contains_key(&plan.model)
        .then_some(&config.prices);
    let aggregate = aggregate_run(
        &records,
        plan.task,
        plan.top_k,
        &plan.model,
        prices,
        match plan.task {
            TaskKind::Retrieval => qrels,
            TaskKind::Ticket => None,
        },
    )?;
    let mut metrics = aggregate.metrics;
    let p95 = metrics
        .p95_latency_ms
        .expect("aggregate always computes p95");

    let ragas_status = if metrics.faithfulness.is_some() {
        RagasStatus::Ok
    } else {
        RagasStatus::Missing
    };
    let report = RunReport {
        run_id: run_id.clone(),
        provider: plan.provider_name.clone(),
        model: plan.model.clone(),
        sample_n: Some(plan.sample_n as u64),
        pipeline_version: Some(plan.pipeline_version.clone()),
        retriever: plan.retriever,
        reranker: plan.reranker,
        prompt_version: Some(plan.prompt_version.clone()),
        metrics: metrics.clone(),
        latency_p95_ms: p95,
        ragas_status,
        evaluator_error_count: evaluator_errors,
        unknown_top: BTreeMap::new(),
        unknown_extra: BTreeMap::new(),
    };

    metrics.p95_latency_ms = Some(p95);
    let score_result = score(
        &metrics,
        &config.weights_for(plan.scenario),
        plan.task,
        &config.budgets,
    )?;
    let summary_row = SummaryRow {
        run_id: run_id_str.clone(),
        dataset_id: plan.dataset_id.clone(),
        scenario: plan.scenario,
        top_k: plan.top_k,
        score: score_result.value,
        faithfulness: metrics.faithfulness,
        answer_relevance: metrics.answer_relevance,
        p95_latency_ms: p95,
    };

    write_atomic(&run_dir.join("report.json"), &write_report(&report)?)?;
    write_atomic(
        &run_dir.join("summary.csv"),
        &write_summary_csv(std::slice::from_ref(&summary_row)),
    )?;
    write_atomic(&run_dir.join("run_log.jsonl"), &write_run_log(&records)?)?;

    Ok(ExecutionReport {
        run_id,
        run_dir: run_dir.to_path_buf(),
        report,
        summary_row,
        resumed,
        executed_items: to_execute,
        skipped_items: skipped,
    })
}

enum ItemError {
    /// Exhausted retries; the item is recorded as failed.
    Failed,
    /// The whole run must stop.
    Fatal(String),
}

const RETRY_ATTEMPTS: u32 = 3;

/// Single-case inference: request, bounded retries, response validation
/// through the policy layer, and span assembly.
fn run_item(
    plan: &RunPlan,
    config: &HarnessConfig,
    provider: &dyn Provider,
    run_id: &str,
    item: &DatasetItem,
) -> Result<(RunLogRecord, Vec<String>), ItemError> {
    let request = InferRequest {
        item_id: item.id.clone(),
        text: item.text.clone(),
        scenario: plan.scenario,
        top_k: plan.top_k,
        model: plan.model.clone(),
        prompt_version: plan.prompt_version.clone(),
    };
    let mut response = None;
    for attempt in 0..RETRY_ATTEMPTS {
        match provider.infer(&request) {
            Ok(r) => {
                response = Some(r);
                break;
            }
            Err(ProviderError::Transient(_)) if attempt + 1 < RETRY_ATTEMPTS => {
                // Exponential backoff starting at the plan's delay.
                let backoff = plan.delay_ms.saturating_mul(1 << attempt);
                if backoff > 0 {
                    std::thread::sleep(std::time::Duration::from_millis(backoff));
                }
            }
            Err(ProviderError::Transient(_)) => return Err(ItemError::Failed),
            Err(ProviderError::Fatal(message)) => return Err(ItemError::Fatal(message)),
        }
    }
    let response = response.expect("loop either sets a response or returns");

    let (record, span_lines) = match plan.task {
        TaskKind::Ticket => ticket_record(plan, config, run_id, item, &response),
        TaskKind::Retrieval => retrieval_record(plan, config, run_id, item, &response),
    };
    Ok((record, span_lines))
}

fn span_base(run_id: &str, item_key: &str) -> String {
    format!("{:016x}", fnv1a64(format!("{run_id}/{item_key}").as_bytes()))
}

fn item_cost(config: &HarnessConfig, model: &str, tokens_in: u64, tokens_out: u64) -> Option<f64> {
    crate::metrics::estimate_cost(tokens_in, tokens_out, model, &config.prices).ok()
}

fn ticket_record(
    plan: &RunPlan,
    config: &HarnessConfig,
    run_id: &str,
    item: &DatasetItem,
    response: &provider::InferResponse,
) -> (RunLogRecord, Vec<String>) {
    let hashed = hash_ticket_id(&item.id);
    let outcome = validate_routing_output(&response.output, config.schema_mode);
    let violations = check_policies(&response.output, &config.policy_rules);
    let (predicted, confidence, should_escalate) = match &outcome.output {
        Some(output) => (
            Some(output.route_label.clone()),
            Some(output.confidence),
            Some(output.should_escalate),
        ),
        None => (None, None, None),
    };
    let record = RunLogRecord {
        item_id: hashed.clone(),
        latency_ms: response.latency_ms,
        tokens_in: response.tokens_in,
        tokens_out: response.tokens_out,
        retrieved_doc_ids: None,
        predicted_label: predicted.clone(),
        gold_label: item.label.clone(),
        should_escalate,
        gold_escalate: item.should_escalate,
        policy_violations: violations.clone(),
        faithfulness: response.faithfulness.filter(|f| (0.0..=1.0).contains(f)),
        schema_valid: outcome.valid,
    };

    let base = span_base(run_id, &hashed);
    let root_latency = response.latency_ms;
    let root = SpanRecord::infer(
        base.clone(),
        run_id,
        &plan.dataset_id,
        &plan.pipeline_version,
        plan.scenario.as_str(),
        root_latency,
        response.tokens_in,
        response.tokens_out,
        item_cost(config, &plan.model, response.tokens_in, response.tokens_out),
    );
    let spans = vec![
        root,
        SpanRecord::route_classify(
            format!("{base}.1"),
            &base,
            &hashed,
            &plan.dataset_id,
            predicted.as_deref(),
            confidence,
            (root_latency * 0.12).round(),
        ),
        SpanRecord::validate_policy(
            format!("{base}.2"),
            &base,
            violations.is_empty() && outcome.valid,
            &violations,
            (root_latency * 0.005).round().max(1.0),
        ),
        SpanRecord::respond_finalize(
            format!("{base}.3"),
            &base,
            &hashed,
            should_escalate,
            (root_latency * 0.003).round().max(1.0),
        ),
    ];
    (record, render_spans(&spans))
}

fn retrieval_record(
    plan: &RunPlan,
    config: &HarnessConfig,
    run_id: &str,
    item: &DatasetItem,
    response: &provider::InferResponse,
) -> (RunLogRecord, Vec<String>) {
    let mut retrieved = response.retrieved_doc_ids.clone().unwrap_or_default();
    if let Some(k) = plan.top_k {
        retrieved.truncate(k as usize);
    }
    let violations = check_policies(&response.output, &config.policy_rules);
    let record = RunLogRecord {
        item_id: item.id.clone(),
        latency_ms: response.latency_ms,
        tokens_in: response.tokens_in,
        tokens_out: response.tokens_out,
        retrieved_doc_ids: Some(retrieved.clone()),
        predicted_label: None,
        gold_label: None,
        should_escalate: None,
        gold_escalate: None,
        policy_violations: violations.clone(),
        faithfulness: response.faithfulness.filter(|f| (0.0..=1.0).contains(f)),
        schema_valid: !response.output.trim().is_empty(),
    };

    let base = span_base(run_id, &item.id);
    let root_latency = response.latency_ms;
    let root = SpanRecord::infer(
        base.clone(),
        run_id,
        &plan.dataset_id,
        &plan.pipeline_version,
        plan.scenario.as_str(),
        root_latency,
        response.tokens_in,
        response.tokens_out,
        item_cost(config, &plan.model, response.tokens_in, response.tokens_out),
    );
    let spans = vec![
        root,
        SpanRecord::rag_retrieve(
            format!("{base}.1"),
            &base,
            plan.top_k.unwrap_or(retrieved.len() as u32),
            &plan.dataset_id,
            &retrieved,
            (root_latency * 0.02).round().max(1.0),
        ),
        SpanRecord::rag_generate(
            format!("{base}.2"),
            &base,
            &plan.model,
            &plan.provider_name,
            false,
            (root_latency * 0.85).round(),
        ),
        SpanRecord::validate_policy(
            format!("{base}.3"),
            &base,
            violations.is_empty(),
            &violations,
            (root_latency * 0.004).round().max(1.0),
        ),
    ];
    (record, render_spans(&spans))
}

fn render_spans(spans: &[SpanRecord]) -> Vec<String> {
    spans
        .iter()
        .map(|s| serde_json::to_string(s).expect("span serializes"))
        .collect()
}
