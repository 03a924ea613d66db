//! Telemetry spans for inference traces: one `infer` root per item with
//! task-appropriate children, exported as line-delimited JSON.
//!
//! The attribute set of each span name is fixed; constructors are the
//! only way to build spans, so a record with extra or missing attributes
//! cannot occur. Ticket identifiers are hashed before they get here.

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpanError {
    #[error("span {name} has attribute set {got:?}, expected {expected:?}")]
    AttributeMismatch {
        name: String,
        got: Vec<String>,
        expected: Vec<String>,
    },
    #[error("unknown span name {0}")]
    UnknownName(String),
}

pub const SPAN_INFER: &str = "infer";
pub const SPAN_ROUTE_CLASSIFY: &str = "route.classify";
pub const SPAN_RESPOND_FINALIZE: &str = "respond.finalize";
pub const SPAN_RAG_RETRIEVE: &str = "rag.retrieve";
pub const SPAN_RAG_GENERATE: &str = "rag.generate";
pub const SPAN_VALIDATE_POLICY: &str = "validate.policy";

/// The attribute keys each span name must carry, exactly.
pub fn expected_attributes(name: &str) -> Result<&'static [&'static str], SpanError> {
    Ok(match name {
        SPAN_INFER => &[
            "run_id",
            "dataset_id",
            "pipeline_version",
            "scenario",
            "latency_ms",
            "tokens_in",
            "tokens_out",
            "cost_usd_est",
        ],
        SPAN_ROUTE_CLASSIFY => &[
            "ticket_id",
            "dataset_id",
            "predicted_label",
            "confidence",
            "latency_ms",
        ],
        SPAN_RESPOND_FINALIZE => &["ticket_id", "should_escalate", "latency_ms"],
        SPAN_RAG_RETRIEVE => &["top_k", "index_id", "retrieved_doc_ids", "latency_ms"],
        SPAN_RAG_GENERATE => &["model_id", "provider", "cache_hit", "latency_ms"],
        SPAN_VALIDATE_POLICY => &["pass", "violation_types", "latency_ms"],
        other => return Err(SpanError::UnknownName(other.to_string())),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpanRecord {
    pub name: String,
    pub span_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    pub attributes: Map<String, Value>,
}

impl SpanRecord {
    fn build(
        name: &str,
        span_id: String,
        parent_id: Option<String>,
        pairs: Vec<(&'static str, Value)>,
    ) -> Self {
        let mut attributes = Map::new();
        for (key, value) in pairs {
            attributes.insert(key.to_string(), value);
        }
        let record = Self {
            name: name.to_string(),
            span_id,
            parent_id,
            attributes,
        };
        debug_assert!(record.validate().is_ok());
        record
    }

    /// Checks the attribute key set against the schema for this name.
    pub fn validate(&self) -> Result<(), SpanError> {
        let expected = expected_attributes(&self.name)?;
        let got: Vec<String> = self.attributes.keys().cloned().collect();
        let mut expected_sorted: Vec<String> =
            expected.iter().map(|s| s.to_string()).collect();
        expected_sorted.sort();
        let mut got_sorted = got.clone();
        got_sorted.sort();
        if got_sorted != expected_sorted {
            return Err(SpanError::AttributeMismatch {
                name: self.name.clone(),
                got,
                expected: expected.iter().map(|s| s.to_string()).collect(),
            });
        }
        Ok(())
    }

    pub fn latency_ms(&self) -> Option<f64> {
        self.attributes.get("latency_ms").and_then(Value::as_f64)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn infer(
        span_id: String,
        run_id: &str,
        dataset_id: &str,
        pipeline_version: &str,
        scenario: &str,
        latency_ms: f64,
        tokens_in: u64,
        tokens_out: u64,
        cost_usd_est: Option<f64>,
    ) -> Self {
        Self::build(
            SPAN_INFER,
            span_id,
            None,
            vec![
                ("run_id", Value::from(run_id)),
                ("dataset_id", Value::from(dataset_id)),
                ("pipeline_version", Value::from(pipeline_version)),
                ("scenario", Value::from(scenario)),
                ("latency_ms", Value::from(latency_ms)),
                ("tokens_in", Value::from(tokens_in)),
                ("tokens_out", Value::from(tokens_out)),
                (
                    "cost_usd_est",
                    cost_usd_est.map(Value::from).unwrap_or(Value::Null),
                ),
            ],
        )
    }

    pub fn route_classify(
        span_id: String,
        parent: &str,
        hashed_ticket_id: &str,
        dataset_id: &str,
        predicted_label: Option<&str>,
        confidence: Option<f64>,
        latency_ms: f64,
    ) -> Self {
        Self::build(
            SPAN_ROUTE_CLASSIFY,
            span_id,
            Some(parent.to_string()),
            vec![
                ("ticket_id", Value::from(hashed_ticket_id)),
                ("dataset_id", Value::from(dataset_id)),
                (
                    "predicted_label",
                    predicted_label.map(Value::from).unwrap_or(Value::Null),
                ),
                (
                    "confidence",
                    confidence.map(Value::from).unwrap_or(Value::Null),
                ),
                ("latency_ms", Value::from(latency_ms)),
            ],
        )
    }

    pub fn respond_finalize(
        span_id: String,
        parent: &str,
        hashed_ticket_id: &str,
        should_escalate: Option<bool>,
        latency_ms: f64,
    ) -> Self {
        Self::build(
            SPAN_RESPOND_FINALIZE,
            span_id,
            Some(parent.to_string()),
            vec![
                ("ticket_id", Value::from(hashed_ticket_id)),
                (
                    "should_escalate",
                    should_escalate.map(Value::from).unwrap_or(Value::Null),
                ),
                ("latency_ms", Value::from(latency_ms)),
            ],
        )
    }

    pub fn rag_retrieve(
        span_id: String,
        parent: &str,
        top_k: u32,
        index_id: &str,
        retrieved_doc_ids: &[String],
        latency_ms: f64,
    ) -> Self {
        Self::build(
            SPAN_RAG_RETRIEVE,
            span_id,
            Some(parent.to_string()),
            vec![
                ("top_k", Value::from(top_k)),
                ("index_id", Value::from(index_id)),
                (
                    "retrieved_doc_ids",
                    Value::from(retrieved_doc_ids.to_vec()),
                ),
                ("latency_ms", Value::from(latency_ms)),
            ],
        )
    }

    pub fn rag_generate(
        span_id: String,
        parent: &str,
        model_id: &str,
        provider: &str,
        cache_hit: bool,
        latency_ms: f64,
    ) -> Self {
        Self::build(
            SPAN_RAG_GENERATE,
            span_id,
            Some(parent.to_string()),
            vec![
                ("model_id", Value::from(model_id)),
                ("provider", Value::from(provider)),
                ("cache_hit", Value::from(cache_hit)),
                ("latency_ms", Value::from(latency_ms)),
            ],
        )
    }

    pub fn validate_policy(
        span_id: String,
        parent: &str,
        pass: bool,
        violation_types: &[String],
        latency_ms: f64,
    ) -> Self {
        Self::build(
            SPAN_VALIDATE_POLICY,
            span_id,
            Some(parent.to_string()),
            vec![
                ("pass", Value::from(pass)),
                ("violation_types", Value::from(violation_types.to_vec())),
                ("latency_ms", Value::from(latency_ms)),
            ],
        )
    }
}

pub fn parse_spans(bytes: &[u8]) -> Result<Vec<SpanRecord>, serde_json::Error> {
    let text = String::from_utf8_lossy(bytes);
    let mut spans = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line)?;
        spans.push(SpanRecord {
            name: value["name"].as_str().unwrap_or_default().to_string(),
            span_id: value["span_id"].as_str().unwrap_or_default().to_string(),
            parent_id: value["parent_id"].as_str().map(str::to_string),
            attributes: value["attributes"]
                .as_object()
                .cloned()
                .unwrap_or_default(),
        });
    }
    Ok(spans)
}
