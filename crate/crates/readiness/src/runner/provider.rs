//! Inference providers: the generic HTTP contract (`POST /v1/infer`)
//! and a deterministic simulator that stands in for hosted deployments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::artifact::Scenario;
use crate::metrics::TaskKind;
use crate::seeded::{fnv1a64, SplitMix64};

use super::dataset::Dataset;

#[derive(Debug, Error)]
pub enum ProviderError {
    /// Worth retrying: timeouts, 5xx, transport drops.
    #[error("transient provider failure: {0}")]
    Transient(String),
    /// Not worth retrying: the run should stop (connection lost for
    /// good, bad credentials, malformed plan).
    #[error("fatal provider failure: {0}")]
    Fatal(String),
}

/// Request body for single-case inference.
#[derive(Debug, Clone, Serialize)]
pub struct InferRequest {
    pub item_id: String,
    pub text: String,
    pub scenario: Scenario,
    pub top_k: Option<u32>,
    pub model: String,
    pub prompt_version: String,
}

impl InferRequest {
    /// The wire form: `{item, scenario, top_k, model, prompt_version}`.
    pub fn to_wire(&self) -> serde_json::Value {
        json!({
            "item": {"id": self.item_id, "text": self.text},
            "scenario": self.scenario.as_str(),
            "top_k": self.top_k,
            "model": self.model,
            "prompt_version": self.prompt_version,
        })
    }
}

/// Structured inference response plus metadata. `faithfulness` is an
/// optional extension carrying an externally computed grounding score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferResponse {
    pub output: String,
    pub latency_ms: f64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved_doc_ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faithfulness: Option<f64>,
}

pub trait Provider: Sync {
    fn infer(&self, request: &InferRequest) -> Result<InferResponse, ProviderError>;

    fn name(&self) -> &str;
}

// ---------------------------------------------------------------------------
// HTTP provider
// ---------------------------------------------------------------------------

/// Client for the inference service contract.
pub struct HttpProvider {
    agent: ureq::Agent,
    infer_url: String,
    api_key: Option<String>,
}

impl HttpProvider {
    pub fn new(endpoint: &str, api_key: Option<String>, timeout_secs: u64) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(std::time::Duration::from_secs(timeout_secs))
            .build();
        Self {
            agent,
            infer_url: format!("{}/v1/infer", endpoint.trim_end_matches('/')),
            api_key,
        }
    }
}

impl Provider for HttpProvider {
    fn infer(&self, request: &InferRequest) -> Result<InferResponse, ProviderError> {
        let mut req = self.agent.post(&self.infer_url);
        if let Some(key) = &self.api_key {
            req = req.set("authorization", &format!("Bearer {key}"));
        }
        match req.send_json(request.to_wire()) {
            Ok(response) => response
                .into_json::<InferResponse>()
                .map_err(|e| ProviderError::Transient(format!("malformed response body: {e}"))),
            Err(ureq::Error::Status(code, _)) if (400..500).contains(&code) => Err(
                ProviderError::Fatal(format!("inference endpoint rejected request: HTTP {code}")),
            ),
            Err(ureq::Error::Status(code, _)) => {
                Err(ProviderError::Transient(format!("HTTP {code}")))
            }
            Err(ureq::Error::Transport(t)) => Err(ProviderError::Transient(t.to_string())),
        }
    }

    fn name(&self) -> &str {
        "http"
    }
}

// ---------------------------------------------------------------------------
// Deterministic simulator
// ---------------------------------------------------------------------------

/// Deterministic stand-in for a hosted deployment. Every response is a
/// pure function of (item id, run seed, model, prompt version, scenario,
/// top_k), so re-running a plan reproduces artifacts byte for byte.
///
/// Designated regression prompt versions alter behavior the way the
/// deliberately broken prompt variants do: `bias` skews routing and
/// leaks occasional unsafe phrasing; `policy` drops the safety reminder
/// entirely, so every response asks for credentials.
pub struct SimProvider {
    task: TaskKind,
    seed: u64,
    labels: Vec<String>,
    gold_labels: BTreeMap<String, String>,
    gold_escalate: BTreeMap<String, bool>,
}

pub const SIM_PROVIDER_NAME: &str = "sim";

impl SimProvider {
    pub fn for_dataset(task: TaskKind, seed: u64, dataset: &Dataset) -> Self {
        let labels = dataset.label_universe();
        let gold_labels = dataset
            .items
            .iter()
            .filter_map(|i| i.label.clone().map(|l| (i.id.clone(), l)))
            .collect();
        let gold_escalate = dataset
            .items
            .iter()
            .filter_map(|i| i.should_escalate.map(|e| (i.id.clone(), e)))
            .collect();
        Self {
            task,
            seed,
            labels,
            gold_labels,
            gold_escalate,
        }
    }

    fn stream_for(&self, request: &InferRequest) -> SplitMix64 {
        let mut key = self.seed;
        for part in [
            request.item_id.as_str(),
            request.model.as_str(),
            request.prompt_version.as_str(),
            request.scenario.as_str(),
        ] {
            key = key
                .rotate_left(17)
                .wrapping_add(fnv1a64(part.as_bytes()));
        }
        key = key.wrapping_add(u64::from(request.top_k.unwrap_or(0)));
        SplitMix64::new(key)
    }

    fn latency_profile(model: &str) -> (f64, f64) {
        if model.contains("mini") {
            (3000.0, 1000.0)
        } else if model.contains("-5") || model.contains("5.") {
            (5600.0, 1800.0)
        } else {
            (2700.0, 900.0)
        }
    }

    fn ticket_response(&self, request: &InferRequest, rng: &mut SplitMix64) -> InferResponse {
        let (base, spread) = Self::latency_profile(&request.model);
        let mut latency = base + rng.next_f64() * spread;
        if rng.next_below(20) == 0 {
            latency *= 1.9; // tail request
        }
        let tokens_in = 220 + rng.next_below(320);
        let tokens_out = 50 + rng.next_below(90);

        let gold = self.gold_labels.get(&request.item_id);
        let accuracy = if request.model.contains("mini") { 0.42 } else { 0.38 };
        let biased = request.prompt_version == "bias";
        let predicted = if biased && rng.next_f64() < 0.30 {
            // Routing shift: the bias variant over-predicts the first queue.
            self.labels.first().cloned().unwrap_or_default()
        } else if rng.next_f64() < accuracy {
            gold.cloned().unwrap_or_default()
        } else if self.labels.is_empty() {
            "unknown".to_string()
        } else {
            self.labels[rng.next_below(self.labels.len() as u64) as usize].clone()
        };

        let gold_escalate = self.gold_escalate.get(&request.item_id).copied();
        let should_escalate = match gold_escalate {
            Some(gold) if rng.next_f64() < 0.85 => gold,
            Some(gold) => !gold,
            None => rng.next_f64() < 0.2,
        };
        let confidence = 0.55 + rng.next_f64() * 0.4;

        // The reply text is what the policy rules scan. The baseline
        // prompt keeps the safety reminder; the policy variant removed
        // it; the bias variant leaks unsafe phrasing occasionally.
        let unsafe_reply = request.prompt_version == "policy"
            || (biased && rng.next_f64() < 0.09);
        let reply = if unsafe_reply {
            "To verify your identity, please share your password with the agent."
        } else {
            "A reset link is on its way. Never share your password with anyone."
        };

        let schema_break_rate = if biased { 0.05 } else { 0.03 };
        let output = if rng.next_f64() < schema_break_rate {
            // Truncated JSON, the way flaky structured output fails.
            format!("{{\"route_label\": \"{predicted}\", \"confidence\": ")
        } else {
            json!({
                "route_label": predicted,
                "confidence": (confidence * 1000.0).round() / 1000.0,
                "should_escalate": should_escalate,
                "policy_violations": [],
                "reply": reply,
            })
            .to_string()
        };

        InferResponse {
            output,
            latency_ms: latency.round(),
            tokens_in,
            tokens_out,
            retrieved_doc_ids: None,
            trace_id: Some(format!("sim-{:016x}", rng.next_u64())),
            faithfulness: None,
        }
    }

    fn retrieval_response(&self, request: &InferRequest, rng: &mut SplitMix64) -> InferResponse {
        let (base, spread) = Self::latency_profile(&request.model);
        let mut latency = base + rng.next_f64() * spread;
        if rng.next_below(20) == 0 {
            latency *= 1.9;
        }
        let tokens_in = 500 + rng.next_below(500);
        let tokens_out = 120 + rng.next_below(180);
        let k = request.top_k.unwrap_or(5) as usize;

        // The gold document sits at a deterministic rank; deeper k pulls
        // it into the window, so hit@k grows with k.
        let gold_rank = 1 + (rng.next_below(6) as usize);
        let mut retrieved = Vec::with_capacity(k);
        for rank in 1..=k {
            if rank == gold_rank {
                retrieved.push(gold_doc_id(&request.item_id));
            } else {
                retrieved.push(format!("{}-fill{rank}", request.item_id));
            }
        }

        let faith_base = if request.model.contains("mini") {
            0.62
        } else if request.model.contains("-5") || request.model.contains("5.") {
            0.32
        } else {
            0.52
        };
        let faithfulness = (faith_base + rng.next_f64() * 0.3).min(1.0);

        InferResponse {
            output: format!(
                "Grounded answer for {} drawing on {} retrieved passages.",
                request.item_id,
                retrieved.len()
            ),
            latency_ms: latency.round(),
            tokens_in,
            tokens_out,
            retrieved_doc_ids: Some(retrieved),
            trace_id: Some(format!("sim-{:016x}", rng.next_u64())),
            faithfulness: Some((faithfulness * 1000.0).round() / 1000.0),
        }
    }
}

impl Provider for SimProvider {
    fn infer(&self, request: &InferRequest) -> Result<InferResponse, ProviderError> {
        let mut rng = self.stream_for(request);
        Ok(match self.task {
            TaskKind::Ticket => self.ticket_response(request, &mut rng),
            TaskKind::Retrieval => self.retrieval_response(request, &mut rng),
        })
    }

    fn name(&self) -> &str {
        SIM_PROVIDER_NAME
    }
}

fn gold_doc_id(item_id: &str) -> String {
    format!("{item_id}-gold")
}

/// The simulator's qrels universe: each query's single relevant document
/// is its `-gold` doc. Derived from the dataset alone, so judgments do
/// not move between runs.
pub fn synthetic_qrels(dataset: &Dataset) -> crate::metrics::Qrels {
    let by_query = dataset
        .items
        .iter()
        .map(|item| {
            (
                item.id.clone(),
                std::iter::once(gold_doc_id(&item.id)).collect(),
            )
        })
        .collect();
    crate::metrics::Qrels { by_query }
}
