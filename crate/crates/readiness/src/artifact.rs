//! Run artifacts and their on-disk forms: the run-id grammar,
//! `report.json`, `summary.csv`, per-sample run logs, and dataset
//! manifests.
//!
//! Serialization here is byte-stable: re-emitting a parsed golden file
//! reproduces it exactly, and emission of computed values is pinned to
//! fixed decimal rules so CI diffs stay clean.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::metrics::MetricSet;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("summary header mismatch: expected {expected:?}, got {got:?}")]
    HeaderMismatch { expected: String, got: String },
    #[error("missing required key: {0}")]
    MissingKey(String),
    #[error("invalid value for {key}: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("invalid run id {id:?}: {reason}")]
    InvalidRunId { id: String, reason: String },
    #[error("invalid {field} token {token:?}: {reason}")]
    InvalidToken {
        field: &'static str,
        token: String,
        reason: String,
    },
    #[error("{field} in document ({doc}) does not match run_id ({id})")]
    RunIdMismatch {
        field: &'static str,
        doc: String,
        id: String,
    },
    #[error("invalid timestamp {0:?}: expected compact form YYYYMMDD_HHMMSS")]
    InvalidTimestamp(String),
}

// ---------------------------------------------------------------------------
// Scalars and formatting
// ---------------------------------------------------------------------------

/// Deployment scenario, i.e. the named weight profile a run was scored
/// under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "cost-first")]
    CostFirst,
    #[serde(rename = "risk-first")]
    RiskFirst,
    #[serde(rename = "sla-first")]
    SlaFirst,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::CostFirst, Scenario::RiskFirst, Scenario::SlaFirst];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::CostFirst => "cost-first",
            Scenario::RiskFirst => "risk-first",
            Scenario::SlaFirst => "sla-first",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cost-first" => Ok(Scenario::CostFirst),
            "risk-first" => Ok(Scenario::RiskFirst),
            "sla-first" => Ok(Scenario::SlaFirst),
            other => Err(format!("unknown scenario: {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Retriever {
    Bm25,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RerankerMode {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RagasStatus {
    Ok,
    Error,
    Missing,
}

impl fmt::Display for RagasStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RagasStatus::Ok => write!(f, "ok"),
            RagasStatus::Error => write!(f, "error"),
            RagasStatus::Missing => write!(f, "missing"),
        }
    }
}

/// Rates serialize with up to four decimal places, keeping at least
/// three so trailing zeros survive ("0.830", never "0.83").
pub fn format_rate(x: f64) -> String {
    let mut s = format!("{x:.4}");
    if s.ends_with('0') {
        s.pop();
    }
    s
}

/// Costs serialize with a fixed four decimal places ("0.0114").
pub fn format_cost(x: f64) -> String {
    format!("{x:.4}")
}

/// Latencies serialize as integer milliseconds.
pub fn format_ms(x: f64) -> String {
    format!("{x:.0}")
}

// ---------------------------------------------------------------------------
// Run ids
// ---------------------------------------------------------------------------

/// UTC timestamp in the compact `YYYYMMDD_HHMMSS` form used inside run
/// ids. Lexicographic order equals chronological order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RunTimestamp(String);

impl RunTimestamp {
    pub fn parse(s: &str) -> Result<Self, ArtifactError> {
        let bytes = s.as_bytes();
        let ok = bytes.len() == 15
            && bytes[8] == b'_'
            && bytes[..8].iter().all(u8::is_ascii_digit)
            && bytes[9..].iter().all(u8::is_ascii_digit);
        if !ok {
            return Err(ArtifactError::InvalidTimestamp(s.to_string()));
        }
        Ok(Self(s.to_string()))
    }

    pub fn now_utc() -> Self {
        Self(chrono::Utc::now().format("%Y%m%d_%H%M%S").to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RunTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for RunTimestamp {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        RunTimestamp::parse(&s).map_err(|e| e.to_string())
    }
}

impl From<RunTimestamp> for String {
    fn from(t: RunTimestamp) -> String {
        t.0
    }
}

/// A run's identity. Rendered as
/// `{suite}_{dataset}_{model}_{scenario}_k{top_k}_seed{seed}_{timestamp}`
/// with the `k{top_k}` segment omitted when `top_k` is absent.
///
/// Token grammar, chosen so the rendered form is uniquely decodable:
/// the suite is a two-part label like `azure_core`, the dataset id may
/// contain any number of underscores (`beir_scifact`), and the model id
/// contains none (dots and hyphens are fine: `gpt-4.1-mini`). The parser
/// anchors on the scenario enum and the `seed`/timestamp tail.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunId {
    pub suite: String,
    pub dataset_id: String,
    pub model_id: String,
    pub scenario: Scenario,
    pub top_k: Option<u32>,
    pub seed: u64,
    pub timestamp: RunTimestamp,
}

fn valid_segment(seg: &str) -> bool {
    !seg.is_empty()
        && seg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-')
}

fn reserved_segment(seg: &str) -> bool {
    if Scenario::from_str(seg).is_ok() {
        return true;
    }
    for prefix in ["k", "seed"] {
        if let Some(rest) = seg.strip_prefix(prefix) {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                return true;
            }
        }
    }
    false
}

fn check_token(
    field: &'static str,
    token: &str,
    segments: std::ops::RangeInclusive<usize>,
) -> Result<(), ArtifactError> {
    let segs: Vec<&str> = token.split('_').collect();
    if !segments.contains(&segs.len()) {
        return Err(ArtifactError::InvalidToken {
            field,
            token: token.to_string(),
            reason: format!(
                "expected {:?}..={:?} underscore-separated segments, got {}",
                segments.start(),
                segments.end(),
                segs.len()
            ),
        });
    }
    for seg in segs {
        if !valid_segment(seg) {
            return Err(ArtifactError::InvalidToken {
                field,
                token: token.to_string(),
                reason: format!("segment {seg:?} has characters outside [A-Za-z0-9.-]"),
            });
        }
        if reserved_segment(seg) {
            return Err(ArtifactError::InvalidToken {
                field,
                token: token.to_string(),
                reason: format!("segment {seg:?} collides with a grammar anchor"),
            });
        }
    }
    Ok(())
}

impl RunId {
    pub fn validate(&self) -> Result<(), ArtifactError> {
        check_token("suite", &self.suite, 2..=2)?;
        check_token("dataset_id", &self.dataset_id, 1..=usize::MAX)?;
        check_token("model_id", &self.model_id, 1..=1)?;
        if self.top_k == Some(0) {
            return Err(ArtifactError::InvalidValue {
                key: "top_k".to_string(),
                reason: "must be positive".to_string(),
            });
        }
        Ok(())
    }

    pub fn render(&self) -> Result<String, ArtifactError> {
        self.validate()?;
        let mut out = format!(
            "{}_{}_{}_{}",
            self.suite, self.dataset_id, self.model_id, self.scenario
        );
        if let Some(k) = self.top_k {
            out.push_str(&format!("_k{k}"));
        }
        out.push_str(&format!("_seed{}_{}", self.seed, self.timestamp));
        Ok(out)
    }

    pub fn parse(id: &str) -> Result<Self, ArtifactError> {
        let err = |reason: &str| ArtifactError::InvalidRunId {
            id: id.to_string(),
            reason: reason.to_string(),
        };
        let segs: Vec<&str> = id.split('_').collect();
        if segs.len() < 8 {
            return Err(err("too few segments"));
        }
        let n = segs.len();
        let timestamp = RunTimestamp::parse(&format!("{}_{}", segs[n - 2], segs[n - 1]))?;
        let seed: u64 = segs[n - 3]
            .strip_prefix("seed")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("missing seed segment"))?;
        let (top_k, scenario_idx) = match segs[n - 4]
            .strip_prefix('k')
            .filter(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
        {
            Some(rest) => {
                let k: u32 = rest.parse().map_err(|_| err("top_k out of range"))?;
                if k == 0 {
                    return Err(err("top_k must be positive"));
                }
                (Some(k), n - 5)
            }
            None => (None, n - 4),
        };
        let scenario = Scenario::from_str(segs[scenario_idx])
            .map_err(|_| err("segment before k/seed is not a scenario"))?;
        let head = &segs[..scenario_idx];
        if head.len() < 4 {
            return Err(err("head must hold a two-part suite, a dataset, and a model"));
        }
        let parsed = RunId {
            suite: head[..2].join("_"),
            dataset_id: head[2..head.len() - 1].join("_"),
            model_id: head[head.len() - 1].to_string(),
            scenario,
            top_k,
            seed,
            timestamp,
        };
        parsed.validate()?;
        Ok(parsed)
    }
}

impl fmt::Display for RunId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.render() {
            Ok(s) => f.write_str(&s),
            Err(_) => f.write_str("<invalid-run-id>"),
        }
    }
}

impl FromStr for RunId {
    type Err = ArtifactError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RunId::parse(s)
    }
}

/// Convenience for `render_run_id` as a free function.
pub fn render_run_id(parts: &RunId) -> Result<String, ArtifactError> {
    parts.render()
}

pub fn parse_run_id(id: &str) -> Result<RunId, ArtifactError> {
    RunId::parse(id)
}

// ---------------------------------------------------------------------------
// Run report
// ---------------------------------------------------------------------------

/// One evaluation run's identity, configuration, aggregate metrics, and
/// validity flags. The identity fields (dataset, scenario, top_k, seed,
/// model) live inside `run_id`; accessors expose them so they can never
/// drift from the id.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub run_id: RunId,
    pub provider: String,
    pub model: String,
    pub sample_n: Option<u64>,
    pub pipeline_version: Option<String>,
    pub retriever: Option<Retriever>,
    pub reranker: Option<RerankerMode>,
    pub prompt_version: Option<String>,
    pub metrics: MetricSet,
    pub latency_p95_ms: f64,
    pub ragas_status: RagasStatus,
    pub evaluator_error_count: u64,
    /// Unknown top-level keys, preserved on round-trip.
    pub unknown_top: BTreeMap<String, Value>,
    /// Unknown keys found inside the `extra` block.
    pub unknown_extra: BTreeMap<String, Value>,
}

impl RunReport {
    pub fn dataset_id(&self) -> &str {
        &self.run_id.dataset_id
    }
    pub fn scenario(&self) -> Scenario {
        self.run_id.scenario
    }
    pub fn top_k(&self) -> Option<u32> {
        self.run_id.top_k
    }
    pub fn seed(&self) -> u64 {
        self.run_id.seed
    }
    pub fn timestamp(&self) -> &RunTimestamp {
        &self.run_id.timestamp
    }

    /// ragas ok, zero evaluator errors.
    pub fn is_valid_for_analysis(&self) -> bool {
        self.ragas_status == RagasStatus::Ok && self.evaluator_error_count == 0
    }
}

const RATE_METRIC_KEYS: [&str; 8] = [
    "workflow_success",
    "policy_pass",
    "routing_accuracy",
    "macro_f1",
    "escalation_rate",
    "retrieval_hit_k",
    "faithfulness",
    "answer_relevance",
];

fn get_f64(value: &Value, key: &str) -> Result<f64, ArtifactError> {
    value.as_f64().ok_or_else(|| ArtifactError::InvalidValue {
        key: key.to_string(),
        reason: format!("expected a number, got {value}"),
    })
}

fn metric_slot<'a>(metrics: &'a mut MetricSet, key: &str) -> Option<&'a mut Option<f64>> {
    Some(match key {
        "workflow_success" => &mut metrics.workflow_success,
        "policy_pass" => &mut metrics.policy_pass,
        "routing_accuracy" => &mut metrics.routing_accuracy,
        "macro_f1" => &mut metrics.macro_f1,
        "escalation_rate" => &mut metrics.escalation_rate,
        "retrieval_hit_k" => &mut metrics.retrieval_hit_k,
        "faithfulness" => &mut metrics.faithfulness,
        "answer_relevance" => &mut metrics.answer_relevance,
        "cost_usd" => &mut metrics.cost_usd,
        "cost_per_task_usd" => &mut metrics.cost_per_task_usd,
        _ => return None,
    })
}

/// Parses a `report.json` document. Absent metrics map to "not present",
/// never to 0. Identity fields are cross-checked against the run id.
pub fn parse_report(bytes: &[u8]) -> Result<RunReport, ArtifactError> {
    let doc: Value = serde_json::from_slice(bytes)?;
    let obj = doc.as_object().ok_or_else(|| ArtifactError::InvalidValue {
        key: "<root>".to_string(),
        reason: "report must be a JSON object".to_string(),
    })?;
    let require = |key: &str| {
        obj.get(key)
            .ok_or_else(|| ArtifactError::MissingKey(key.to_string()))
    };
    let require_str = |key: &str| -> Result<String, ArtifactError> {
        require(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ArtifactError::InvalidValue {
                key: key.to_string(),
                reason: "expected a string".to_string(),
            })
    };

    let run_id = RunId::parse(&require_str("run_id")?)?;

    let dataset_id = require_str("dataset_id")?;
    if dataset_id != run_id.dataset_id {
        return Err(ArtifactError::RunIdMismatch {
            field: "dataset_id",
            doc: dataset_id,
            id: run_id.dataset_id.clone(),
        });
    }
    let scenario_str = require_str("scenario")?;
    let scenario = Scenario::from_str(&scenario_str).map_err(|e| ArtifactError::InvalidValue {
        key: "scenario".to_string(),
        reason: e,
    })?;
    if scenario != run_id.scenario {
        return Err(ArtifactError::RunIdMismatch {
            field: "scenario",
            doc: scenario_str,
            id: run_id.scenario.to_string(),
        });
    }

    let llm = require("llm")?
        .as_object()
        .ok_or_else(|| ArtifactError::InvalidValue {
            key: "llm".to_string(),
            reason: "expected an object".to_string(),
        })?;
    let provider = llm
        .get("provider")
        .and_then(Value::as_str)
        .ok_or_else(|| ArtifactError::MissingKey("llm.provider".to_string()))?
        .to_string();
    let model = llm
        .get("model")
        .and_then(Value::as_str)
        .ok_or_else(|| ArtifactError::MissingKey("llm.model".to_string()))?
        .to_string();
    if model != run_id.model_id {
        return Err(ArtifactError::RunIdMismatch {
            field: "model",
            doc: model,
            id: run_id.model_id.clone(),
        });
    }

    let mut metrics = MetricSet::default();
    let metrics_obj = require("metrics")?
        .as_object()
        .ok_or_else(|| ArtifactError::InvalidValue {
            key: "metrics".to_string(),
            reason: "expected an object".to_string(),
        })?;
    for (key, value) in metrics_obj {
        if value.is_null() {
            continue; // explicitly absent
        }
        match metric_slot(&mut metrics, key) {
            Some(slot) => {
                let v = get_f64(value, key)?;
                if RATE_METRIC_KEYS.contains(&key.as_str()) && !(0.0..=1.0).contains(&v) {
                    return Err(ArtifactError::InvalidValue {
                        key: key.clone(),
                        reason: format!("rate metric outside [0,1]: {v}"),
                    });
                }
                if !RATE_METRIC_KEYS.contains(&key.as_str()) && v < 0.0 {
                    return Err(ArtifactError::InvalidValue {
                        key: key.clone(),
                        reason: format!("must be non-negative: {v}"),
                    });
                }
                *slot = Some(v);
            }
            None => {
                metrics.extra.insert(key.clone(), value.clone());
            }
        }
    }

    let latency = require("latency_ms")?
        .as_object()
        .ok_or_else(|| ArtifactError::InvalidValue {
            key: "latency_ms".to_string(),
            reason: "expected an object".to_string(),
        })?;
    let p95 = get_f64(
        latency
            .get("p95")
            .ok_or_else(|| ArtifactError::MissingKey("latency_ms.p95".to_string()))?,
        "latency_ms.p95",
    )?;
    if p95 < 0.0 {
        return Err(ArtifactError::InvalidValue {
            key: "latency_ms.p95".to_string(),
            reason: "latency must be non-negative".to_string(),
        });
    }
    metrics.p95_latency_ms = Some(p95);

    let mut report = RunReport {
        run_id,
        provider,
        model,
        sample_n: None,
        pipeline_version: None,
        retriever: None,
        reranker: None,
        prompt_version: None,
        metrics,
        latency_p95_ms: p95,
        ragas_status: RagasStatus::Missing,
        evaluator_error_count: 0,
        unknown_top: BTreeMap::new(),
        unknown_extra: BTreeMap::new(),
    };

    if let Some(extra) = obj.get("extra") {
        let extra = extra.as_object().ok_or_else(|| ArtifactError::InvalidValue {
            key: "extra".to_string(),
            reason: "expected an object".to_string(),
        })?;
        for (key, value) in extra {
            match key.as_str() {
                "top_k" => {
                    let k = get_f64(value, "extra.top_k")? as u32;
                    if Some(k) != report.run_id.top_k {
                        return Err(ArtifactError::RunIdMismatch {
                            field: "top_k",
                            doc: k.to_string(),
                            id: format!("{:?}", report.run_id.top_k),
                        });
                    }
                }
                "seed" => {
                    let s = get_f64(value, "extra.seed")? as u64;
                    if s != report.run_id.seed {
                        return Err(ArtifactError::RunIdMismatch {
                            field: "seed",
                            doc: s.to_string(),
                            id: report.run_id.seed.to_string(),
                        });
                    }
                }
                "sample_n" => {
                    let n = get_f64(value, "extra.sample_n")? as u64;
                    if n == 0 {
                        return Err(ArtifactError::InvalidValue {
                            key: "extra.sample_n".to_string(),
                            reason: "must be positive".to_string(),
                        });
                    }
                    report.sample_n = Some(n);
                }
                "pipeline_version" => {
                    report.pipeline_version = value.as_str().map(str::to_string);
                }
                "prompt_version" => {
                    report.prompt_version = value.as_str().map(str::to_string);
                }
                "retriever" => {
                    report.retriever = Some(serde_json::from_value(value.clone())?);
                }
                "reranker" => {
                    report.reranker = Some(serde_json::from_value(value.clone())?);
                }
                "ragas_status" => {
                    report.ragas_status = serde_json::from_value(value.clone())?;
                }
                "evaluator_error_count" => {
                    report.evaluator_error_count = get_f64(value, "extra.evaluator_error_count")? as u64;
                }
                _ => {
                    report.unknown_extra.insert(key.clone(), value.clone());
                }
            }
        }
    }

    const KNOWN_TOP: [&str; 7] = [
        "run_id",
        "dataset_id",
        "scenario",
        "llm",
        "metrics",
        "latency_ms",
        "extra",
    ];
    for (key, value) in obj {
        if !KNOWN_TOP.contains(&key.as_str()) {
            report.unknown_top.insert(key.clone(), value.clone());
        }
    }

    Ok(report)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

fn inline_object(pairs: &[(String, String)]) -> String {
    let body: Vec<String> = pairs
        .iter()
        .map(|(k, v)| format!("{}: {}", json_str(k), v))
        .collect();
    format!("{{{}}}", body.join(", "))
}

/// Emits a `report.json` document: top-level keys on their own lines,
/// nested objects inline, rates at up-to-4 decimals, latency as integer
/// milliseconds. Parsing the output reproduces the report.
pub fn write_report(report: &RunReport) -> Result<Vec<u8>, ArtifactError> {
    let run_id = report.run_id.render()?;
    let mut lines: Vec<String> = Vec::new();
    lines.push(format!("  \"run_id\": {}", json_str(&run_id)));
    lines.push(format!(
        "  \"dataset_id\": {}",
        json_str(&report.run_id.dataset_id)
    ));
    lines.push(format!(
        "  \"scenario\": {}",
        json_str(report.run_id.scenario.as_str())
    ));
    lines.push(format!(
        "  \"llm\": {}",
        inline_object(&[
            ("provider".to_string(), json_str(&report.provider)),
            ("model".to_string(), json_str(&report.model)),
        ])
    ));

    let mut metric_pairs: Vec<(String, String)> = Vec::new();
    let m = &report.metrics;
    let rate_entries: [(&str, Option<f64>); 7] = [
        ("workflow_success", m.workflow_success),
        ("policy_pass", m.policy_pass),
        ("routing_accuracy", m.routing_accuracy),
        ("macro_f1", m.macro_f1),
        ("escalation_rate", m.escalation_rate),
        ("retrieval_hit_k", m.retrieval_hit_k),
        ("faithfulness", m.faithfulness),
    ];
    for (key, value) in rate_entries {
        if let Some(v) = value {
            metric_pairs.push((key.to_string(), format_rate(v)));
        }
    }
    // answer_relevance is always emitted; the harness collects it even
    // when the evaluator returns nothing.
    metric_pairs.push((
        "answer_relevance".to_string(),
        match m.answer_relevance {
            Some(v) => format_rate(v),
            None => "null".to_string(),
        },
    ));
    if let Some(v) = m.cost_usd {
        metric_pairs.push(("cost_usd".to_string(), format_cost(v)));
    }
    if let Some(v) = m.cost_per_task_usd {
        metric_pairs.push(("cost_per_task_usd".to_string(), format_cost(v)));
    }
    for (key, value) in &m.extra {
        metric_pairs.push((key.clone(), serde_json::to_string(value)?));
    }
    lines.push(format!("  \"metrics\": {}", inline_object(&metric_pairs)));
    lines.push(format!(
        "  \"latency_ms\": {}",
        inline_object(&[("p95".to_string(), format_ms(report.latency_p95_ms))])
    ));

    let mut extra_pairs: Vec<(String, String)> = Vec::new();
    if let Some(k) = report.run_id.top_k {
        extra_pairs.push(("top_k".to_string(), k.to_string()));
    }
    extra_pairs.push(("seed".to_string(), report.run_id.seed.to_string()));
    if let Some(n) = report.sample_n {
        extra_pairs.push(("sample_n".to_string(), n.to_string()));
    }
    if let Some(v) = &report.pipeline_version {
        extra_pairs.push(("pipeline_version".to_string(), json_str(v)));
    }
    if let Some(v) = &report.prompt_version {
        extra_pairs.push(("prompt_version".to_string(), json_str(v)));
    }
    if let Some(v) = &report.retriever {
        extra_pairs.push(("retriever".to_string(), serde_json::to_string(v)?));
    }
    if let Some(v) = &report.reranker {
        extra_pairs.push(("reranker".to_string(), serde_json::to_string(v)?));
    }
    extra_pairs.push((
        "ragas_status".to_string(),
        json_str(&report.ragas_status.to_string()),
    ));
    extra_pairs.push((
        "evaluator_error_count".to_string(),
        report.evaluator_error_count.to_string(),
    ));
    for (key, value) in &report.unknown_extra {
        extra_pairs.push((key.clone(), serde_json::to_string(value)?));
    }
    // The golden excerpt form carries no extra block at all; emit one
    // only when the report records more than the excerpt fields.
    let excerpt_only = report.sample_n.is_none()
        && report.pipeline_version.is_none()
        && report.prompt_version.is_none()
        && report.retriever.is_none()
        && report.reranker.is_none()
        && report.ragas_status == RagasStatus::Missing
        && report.evaluator_error_count == 0
        && report.unknown_extra.is_empty();
    if !excerpt_only {
        lines.push(format!("  \"extra\": {}", inline_object(&extra_pairs)));
    }
    for (key, value) in &report.unknown_top {
        lines.push(format!("  {}: {}", json_str(key), serde_json::to_string(value)?));
    }

    let doc = format!("{{\n{}\n}}\n", lines.join(",\n"));
    Ok(doc.into_bytes())
}

// ---------------------------------------------------------------------------
// summary.csv
// ---------------------------------------------------------------------------

pub const SUMMARY_HEADER: &str =
    "run_id,dataset_id,scenario,top_k,score,faithfulness,answer_relevance,p95_latency_ms";

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run_id: String,
    pub dataset_id: String,
    pub scenario: Scenario,
    pub top_k: Option<u32>,
    pub score: f64,
    pub faithfulness: Option<f64>,
    pub answer_relevance: Option<f64>,
    pub p95_latency_ms: f64,
}

/// A non-fatal problem found while loading artifacts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub context: String,
    pub message: String,
}

/// Parses `summary.csv`. The header must match exactly; rows that fail to
/// parse are reported as diagnostics, not silently dropped.
pub fn parse_summary_csv(bytes: &[u8]) -> Result<(Vec<SummaryRow>, Vec<Diagnostic>), ArtifactError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ArtifactError::InvalidValue {
        key: "summary.csv".to_string(),
        reason: format!("not utf-8: {e}"),
    })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != SUMMARY_HEADER {
        return Err(ArtifactError::HeaderMismatch {
            expected: SUMMARY_HEADER.to_string(),
            got: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        match parse_summary_row(line) {
            Ok(row) => rows.push(row),
            Err(reason) => diagnostics.push(Diagnostic {
                context: format!("summary.csv line {}", idx + 2),
                message: reason,
            }),
        }
    }
    Ok((rows, diagnostics))
}

fn parse_summary_row(line: &str) -> Result<SummaryRow, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 8 {
        return Err(format!("expected 8 fields, got {}", fields.len()));
    }
    let opt_f64 = |s: &str, name: &str| -> Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| format!("non-numeric {name}: {s:?}"))
        }
    };
    let scenario = Scenario::from_str(fields[2])?;
    let top_k = if fields[3].is_empty() {
        None
    } else {
        Some(
            fields[3]
                .parse::<u32>()
                .map_err(|_| format!("non-numeric top_k: {:?}", fields[3]))?,
        )
    };
    let score = fields[4]
        .parse::<f64>()
        .map_err(|_| format!("non-numeric score: {:?}", fields[4]))?;
    let p95 = fields[7]
        .parse::<f64>()
        .map_err(|_| format!("non-numeric p95_latency_ms: {:?}", fields[7]))?;
    Ok(SummaryRow {
        run_id: fields[0].to_string(),
        dataset_id: fields[1].to_string(),
        scenario,
        top_k,
        score,
        faithfulness: opt_f64(fields[5], "faithfulness")?,
        answer_relevance: opt_f64(fields[6], "answer_relevance")?,
        p95_latency_ms: p95,
    })
}

/// Emits `summary.csv` bytes: exact header, UTF-8, LF line endings.
/// Absent optional values serialize as empty fields, never "null" or 0.
pub fn write_summary_csv(rows: &[SummaryRow]) -> Vec<u8> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        let top_k = row.top_k.map(|k| k.to_string()).unwrap_or_default();
        let faith = row.faithfulness.map(format_rate).unwrap_or_default();
        let rel = row.answer_relevance.map(format_rate).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.run_id,
            row.dataset_id,
            row.scenario,
            top_k,
            format_rate(row.score),
            faith,
            rel,
            format_ms(row.p95_latency_ms),
        ));
    }
    out.into_bytes()
}

// ---------------------------------------------------------------------------
// Run log records
// ---------------------------------------------------------------------------

/// One per-sample line of a run log. Ticket item ids are stored hashed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogRecord {
    pub item_id: String,
    pub latency_ms: f64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved_doc_ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub should_escalate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_escalate: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub policy_violations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faithfulness: Option<f64>,
    pub schema_valid: bool,
}

impl RunLogRecord {
    pub fn validate(&self, top_k: Option<u32>) -> Result<(), ArtifactError> {
        if let Some(f) = self.faithfulness {
            if !(0.0..=1.0).contains(&f) {
                return Err(ArtifactError::InvalidValue {
                    key: "faithfulness".to_string(),
                    reason: format!("outside [0,1]: {f}"),
                });
            }
        }
        if let (Some(ids), Some(k)) = (&self.retrieved_doc_ids, top_k) {
            if ids.len() > k as usize {
                return Err(ArtifactError::InvalidValue {
                    key: "retrieved_doc_ids".to_string(),
                    reason: format!("length {} exceeds top_k {}", ids.len(), k),
                });
            }
        }
        if self.latency_ms < 0.0 {
            return Err(ArtifactError::InvalidValue {
                key: "latency_ms".to_string(),
                reason: "must be non-negative".to_string(),
            });
        }
        Ok(())
    }
}

pub fn parse_run_log(bytes: &[u8]) -> Result<Vec<RunLogRecord>, ArtifactError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ArtifactError::InvalidValue {
        key: "run_log".to_string(),
        reason: format!("not utf-8: {e}"),
    })?;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line)?);
    }
    Ok(records)
}

pub fn write_run_log(records: &[RunLogRecord]) -> Result<Vec<u8>, ArtifactError> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out.into_bytes())
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

/// Provenance record for a dataset or split: seed, per-split counts,
/// source, and a digest of the serialized content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub source_uri: String,
    pub seed: u64,
    pub counts: BTreeMap<String, u64>,
    pub content_digest: String,
}

impl Manifest {
    pub fn to_json(&self) -> Result<Vec<u8>, ArtifactError> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ArtifactError> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

/// SHA-256 hex digest of serialized content.
pub fn content_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

// ---------------------------------------------------------------------------
// Directory loading
// ---------------------------------------------------------------------------

/// Loads every parseable `report.json` under `dir` (one run per
/// subdirectory). Corrupt entries become diagnostics; loading never
/// aborts the whole directory. Output is sorted by run id.
pub fn load_runs(dir: &Path) -> Result<(Vec<RunReport>, Vec<Diagnostic>), ArtifactError> {
    let mut reports = Vec::new();
    let mut diagnostics = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|source| ArtifactError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut paths: Vec<_> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    paths.sort();
    for path in paths {
        let report_path = path.join("report.json");
        if !report_path.exists() {
            continue;
        }
        match std::fs::read(&report_path) {
            Ok(bytes) => match parse_report(&bytes) {
                Ok(report) => reports.push(report),
                Err(e) => diagnostics.push(Diagnostic {
                    context: report_path.display().to_string(),
                    message: e.to_string(),
                }),
            },
            Err(e) => diagnostics.push(Diagnostic {
                context: report_path.display().to_string(),
                message: e.to_string(),
            }),
        }
    }
    reports.sort_by_key(|r| r.run_id.render().unwrap_or_default());
    Ok((reports, diagnostics))
}

/// Writes bytes atomically: temp file in the target directory, then
/// rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| "artifact".to_string())
    ));
    let io_err = |source: std::io::Error, p: &Path| ArtifactError::Io {
        path: p.display().to_string(),
        source,
    };
    std::fs::write(&tmp, bytes).map_err(|e| io_err(e, &tmp))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(e, path))?;
    Ok(())
}
