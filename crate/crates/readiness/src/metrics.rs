//! Per-run metric computation from run logs: latency percentiles,
//! retrieval hit@k, routing accuracy and macro-F1, policy/workflow rates,
//! cost estimates, and budget normalization.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::RunLogRecord;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("no data: {0}")]
    NoData(&'static str),
    #[error("invalid k: hit@k requires k >= 1")]
    InvalidK,
    #[error("duplicate retrieved doc id: {0}")]
    DuplicateRetrieved(String),
    #[error("unjudged query: empty gold set")]
    UnjudgedQuery,
    #[error("record {0} is missing a gold label")]
    MissingGoldLabel(String),
    #[error("unknown model in price table: {0}")]
    UnknownModel(String),
    #[error("invalid budget: lo {lo} must be < hi {hi} and both positive")]
    InvalidBudget { lo: f64, hi: f64 },
    #[error("invalid qrels line {line}: {reason}")]
    InvalidQrels { line: usize, reason: String },
}

/// Which task family a run belongs to. Ticket covers routing/escalation
/// workflows; Retrieval covers grounding over a judged corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Ticket,
    Retrieval,
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TaskKind::Ticket => write!(f, "ticket"),
            TaskKind::Retrieval => write!(f, "retrieval"),
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ticket" => Ok(TaskKind::Ticket),
            "retrieval" => Ok(TaskKind::Retrieval),
            other => Err(format!("unknown task kind: {other}")),
        }
    }
}

/// The metric values attached to one run. Every field is optional:
/// a metric that was not measured stays `None` and is never coerced to 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSet {
    pub workflow_success: Option<f64>,
    pub policy_pass: Option<f64>,
    pub faithfulness: Option<f64>,
    pub retrieval_hit_k: Option<f64>,
    /// Per-run total cost in USD (the summary-level figure).
    pub cost_usd: Option<f64>,
    /// Mean cost per task in USD, kept alongside the run total.
    pub cost_per_task_usd: Option<f64>,
    pub p95_latency_ms: Option<f64>,
    // Diagnostics: carried and exported but never scored.
    pub routing_accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub escalation_rate: Option<f64>,
    pub answer_relevance: Option<f64>,
    /// Metric keys from external documents that this harness does not
    /// interpret. Preserved on round-trip.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl MetricSet {
    /// Names of the rate-valued fields, used when validating documents.
    pub const RATE_FIELDS: [&'static str; 9] = [
        "workflow_success",
        "policy_pass",
        "faithfulness",
        "retrieval_hit_k",
        "routing_accuracy",
        "macro_f1",
        "escalation_rate",
        "answer_relevance",
        "score",
    ];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "workflow_success" => self.workflow_success,
            "policy_pass" => self.policy_pass,
            "faithfulness" => self.faithfulness,
            "retrieval_hit_k" => self.retrieval_hit_k,
            "cost_usd" => self.cost_usd,
            "cost_per_task_usd" => self.cost_per_task_usd,
            "p95_latency_ms" => self.p95_latency_ms,
            "routing_accuracy" => self.routing_accuracy,
            "macro_f1" => self.macro_f1,
            "escalation_rate" => self.escalation_rate,
            "answer_relevance" => self.answer_relevance,
            _ => None,
        }
    }
}

/// Full-credit / zero-credit bounds for mapping a raw cost or latency
/// value onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub metric: BudgetMetric,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetMetric {
    Cost,
    Latency,
}

impl Budget {
    pub fn new(metric: BudgetMetric, lo: f64, hi: f64) -> Result<Self, MetricError> {
        if !(lo > 0.0 && hi > 0.0 && lo < hi) {
            return Err(MetricError::InvalidBudget { lo, hi });
        }
        Ok(Self { metric, lo, hi })
    }
}

/// Per-model token pricing in USD per million tokens.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub models: BTreeMap<String, ModelPrice>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPrice {
    pub input_usd_per_1m: f64,
    pub output_usd_per_1m: f64,
}

/// Relevance judgments: query id -> set of relevant doc ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    pub by_query: BTreeMap<String, BTreeSet<String>>,
}

impl Qrels {
    /// Parses the three-column qrels format: `query_id doc_id relevance`,
    /// whitespace-separated, `#` comments, relevance > 0 marks relevant.
    pub fn parse(text: &str) -> Result<Self, MetricError> {
        let mut by_query: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(MetricError::InvalidQrels {
                    line: idx + 1,
                    reason: format!("expected 3 columns, got {}", cols.len()),
                });
            }
            let rel: i64 = cols[2].parse().map_err(|_| MetricError::InvalidQrels {
                line: idx + 1,
                reason: format!("non-integer relevance {:?}", cols[2]),
            })?;
            let entry = by_query.entry(cols[0].to_string()).or_default();
            if rel > 0 {
                entry.insert(cols[1].to_string());
            }
        }
        Ok(Self { by_query })
    }

    pub fn relevant(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.by_query.get(query_id)
    }
}

/// Nearest-rank p95: sorts ascending and returns the element at rank
/// ceil(0.95 * n), 1-based. The result is always a member of the input.
pub fn p95_nearest_rank(latencies: &[f64]) -> Result<f64, MetricError> {
    percentile_nearest_rank(latencies, 95)
}

pub fn percentile_nearest_rank(values: &[f64], percentile: u32) -> Result<f64, MetricError> {
    if values.is_empty() {
        return Err(MetricError::NoData("empty latency list"));
    }
    debug_assert!((1..=100).contains(&percentile));
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as u64;
    let rank = (u64::from(percentile) * n).div_ceil(100).max(1);
    Ok(sorted[(rank - 1) as usize])
}

/// 1 iff any of the first min(k, |retrieved|) doc ids is in the gold set.
pub fn hit_at_k(
    retrieved: &[String],
    gold: &BTreeSet<String>,
    k: usize,
) -> Result<bool, MetricError> {
    if k == 0 {
        return Err(MetricError::InvalidK);
    }
    if gold.is_empty() {
        return Err(MetricError::UnjudgedQuery);
    }
    let mut seen = BTreeSet::new();
    for id in retrieved {
        if !seen.insert(id) {
            return Err(MetricError::DuplicateRetrieved(id.clone()));
        }
    }
    Ok(retrieved.iter().take(k).any(|id| gold.contains(id)))
}

/// Mean hit@k over judged queries; unjudged queries are excluded from the
/// mean and counted separately.
#[derive(Debug, Clone, PartialEq)]
pub struct HitAtKAggregate {
    pub mean: Option<f64>,
    pub judged: usize,
    pub unjudged: usize,
}

pub fn hit_at_k_mean(
    queries: &[(Vec<String>, BTreeSet<String>)],
    k: usize,
) -> Result<HitAtKAggregate, MetricError> {
    let mut hits = 0usize;
    let mut judged = 0usize;
    let mut unjudged = 0usize;
    for (retrieved, gold) in queries {
        match hit_at_k(retrieved, gold, k) {
            Ok(hit) => {
                judged += 1;
                if hit {
                    hits += 1;
                }
            }
            Err(MetricError::UnjudgedQuery) => unjudged += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(HitAtKAggregate {
        mean: (judged > 0).then(|| hits as f64 / judged as f64),
        judged,
        unjudged,
    })
}

fn routing_correct(record: &RunLogRecord) -> bool {
    match (&record.predicted_label, &record.gold_label) {
        (Some(p), Some(g)) => p == g,
        _ => false,
    }
}

/// Fraction of records routed to their gold label. A missing or
/// out-of-universe prediction counts as wrong.
pub fn routing_accuracy(records: &[RunLogRecord]) -> Result<f64, MetricError> {
    require_gold(records)?;
    let correct = records.iter().filter(|r| routing_correct(r)).count();
    Ok(correct as f64 / records.len() as f64)
}

/// Unweighted mean of per-class F1 over the gold label universe. Classes
/// present in gold but never predicted score F1 = 0; predictions outside
/// the universe add false negatives to their gold class only.
pub fn macro_f1(records: &[RunLogRecord]) -> Result<f64, MetricError> {
    require_gold(records)?;
    let universe: BTreeSet<&String> = records
        .iter()
        .filter_map(|r| r.gold_label.as_ref())
        .collect();
    let mut total = 0.0;
    for class in &universe {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fal_n = 0usize;
        for r in records {
            let predicted = r.predicted_label.as_ref() == Some(class);
            let gold = r.gold_label.as_ref() == Some(class);
            match (predicted, gold) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fal_n += 1,
                (false, false) => {}
            }
        }
        let precision = ratio_or_zero(tp, tp + fp);
        let recall = ratio_or_zero(tp, tp + fal_n);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        total += f1;
    }
    Ok(total / universe.len() as f64)
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn require_gold(records: &[RunLogRecord]) -> Result<(), MetricError> {
    if records.is_empty() {
        return Err(MetricError::NoData("empty record set"));
    }
    for r in records {
        if r.gold_label.is_none() {
            return Err(MetricError::MissingGoldLabel(r.item_id.clone()));
        }
    }
    Ok(())
}

fn record_policy_pass(record: &RunLogRecord) -> bool {
    record.policy_violations.is_empty() && record.schema_valid
}

fn record_escalation_ok(record: &RunLogRecord) -> bool {
    match record.gold_escalate {
        Some(gold) => record.should_escalate == Some(gold),
        None => true,
    }
}

/// Fraction of records with an empty violation list and a schema-valid
/// output.
pub fn policy_pass_rate(records: &[RunLogRecord]) -> Result<f64, MetricError> {
    if records.is_empty() {
        return Err(MetricError::NoData("empty record set"));
    }
    let pass = records.iter().filter(|r| record_policy_pass(r)).count();
    Ok(pass as f64 / records.len() as f64)
}

/// Fraction of records where routing is correct, policy passes, and the
/// escalation decision matches gold whenever a gold label exists.
pub fn workflow_success_rate(records: &[RunLogRecord]) -> Result<f64, MetricError> {
    if records.is_empty() {
        return Err(MetricError::NoData("empty record set"));
    }
    let ok = records
        .iter()
        .filter(|r| routing_correct(r) && record_policy_pass(r) && record_escalation_ok(r))
        .count();
    Ok(ok as f64 / records.len() as f64)
}

/// Fraction of records that asked for escalation.
pub fn escalation_rate(records: &[RunLogRecord]) -> Result<f64, MetricError> {
    if records.is_empty() {
        return Err(MetricError::NoData("empty record set"));
    }
    let escalated = records
        .iter()
        .filter(|r| r.should_escalate == Some(true))
        .count();
    Ok(escalated as f64 / records.len() as f64)
}

/// Token cost in USD: tokens_in/1e6 * input price + tokens_out/1e6 *
/// output price. Unknown models are a configuration error, never zero.
pub fn estimate_cost(
    tokens_in: u64,
    tokens_out: u64,
    model: &str,
    prices: &PriceTable,
) -> Result<f64, MetricError> {
    let price = prices
        .models
        .get(model)
        .ok_or_else(|| MetricError::UnknownModel(model.to_string()))?;
    Ok(tokens_in as f64 / 1e6 * price.input_usd_per_1m
        + tokens_out as f64 / 1e6 * price.output_usd_per_1m)
}

/// Maps a raw value onto `[0, 1]`: 1 at or below `lo`, 0 at or above
/// `hi`, linear in between.
pub fn normalize_budget(value: f64, budget: &Budget) -> f64 {
    if value <= budget.lo {
        1.0
    } else if value >= budget.hi {
        0.0
    } else {
        ((budget.hi - value) / (budget.hi - budget.lo)).clamp(0.0, 1.0)
    }
}

/// Result of aggregating one run's records into a `MetricSet`.
#[derive(Debug, Clone)]
pub struct RunAggregate {
    pub metrics: MetricSet,
    pub diagnostics: Vec<String>,
    pub unjudged_queries: usize,
}

/// Fills the metric fields applicable to the task; inapplicable fields
/// stay absent. Ticket runs never get retrieval hit@k; retrieval runs
/// never get workflow/policy rates.
pub fn aggregate_run(
    records: &[RunLogRecord],
    task: TaskKind,
    top_k: Option<u32>,
    model: &str,
    prices: Option<&PriceTable>,
    qrels: Option<&Qrels>,
) -> Result<RunAggregate, MetricError> {
    if records.is_empty() {
        return Err(MetricError::NoData("empty record set"));
    }
    let mut metrics = MetricSet::default();
    let mut diagnostics = Vec::new();
    let mut unjudged = 0usize;

    let latencies: Vec<f64> = records.iter().map(|r| r.latency_ms).collect();
    metrics.p95_latency_ms = Some(p95_nearest_rank(&latencies)?);

    if let Some(prices) = prices {
        let mut total = 0.0;
        for r in records {
            total += estimate_cost(r.tokens_in, r.tokens_out, model, prices)?;
        }
        metrics.cost_usd = Some(total);
        metrics.cost_per_task_usd = Some(total / records.len() as f64);
    }

    let faith: Vec<f64> = records.iter().filter_map(|r| r.faithfulness).collect();
    if !faith.is_empty() {
        metrics.faithfulness = Some(faith.iter().sum::<f64>() / faith.len() as f64);
    }

    match task {
        TaskKind::Ticket => {
            if qrels.is_some() {
                diagnostics.push("qrels supplied for a ticket task; ignored".to_string());
            }
            metrics.workflow_success = Some(workflow_success_rate(records)?);
            metrics.policy_pass = Some(policy_pass_rate(records)?);
            metrics.routing_accuracy = Some(routing_accuracy(records)?);
            metrics.macro_f1 = Some(macro_f1(records)?);
            metrics.escalation_rate = Some(escalation_rate(records)?);
        }
        TaskKind::Retrieval => {
            match (qrels, top_k) {
                (Some(qrels), Some(k)) => {
                    let queries: Vec<(Vec<String>, BTreeSet<String>)> = records
                        .iter()
                        .map(|r| {
                            let retrieved = r.retrieved_doc_ids.clone().unwrap_or_default();
                            let gold = qrels
                                .relevant(&r.item_id)
                                .cloned()
                                .unwrap_or_default();
                            (retrieved, gold)
                        })
                        .collect();
                    let agg = hit_at_k_mean(&queries, k as usize)?;
                    metrics.retrieval_hit_k = agg.mean;
                    unjudged = agg.unjudged;
                    if agg.unjudged > 0 {
                        diagnostics.push(format!(
                            "{} unjudged queries excluded from hit@k",
                            agg.unjudged
                        ));
                    }
                }
                (None, _) => diagnostics.push("no qrels; hit@k not computed".to_string()),
                (_, None) => diagnostics.push("no top_k; hit@k not computed".to_string()),
            }
        }
    }

    Ok(RunAggregate {
        metrics,
        diagnostics,
        unjudged_queries: unjudged,
    })
}
