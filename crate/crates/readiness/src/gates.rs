//! CI regression gates: metric deltas between a candidate run and its
//! baseline, plus a pass/fail verdict with hard policy gates.
//!
//! Hard gates dominate: a candidate with a banned violation or a policy
//! pass rate under the floor fails no matter how its deltas look.

use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::analysis::filter_latest_valid;
use crate::artifact::RunReport;

#[derive(Debug, Error)]
pub enum GateError {
    #[error("dataset mismatch: baseline {baseline}, candidate {candidate}")]
    DatasetMismatch { baseline: String, candidate: String },
    #[error("no threshold configured for metric {0} which is present in the delta report")]
    MissingThreshold(String),
    #[error("invalid gate config: {0}")]
    InvalidConfig(String),
}

/// Thresholds for the gate. `max_drop` entries bound how far a metric
/// may fall relative to baseline; the hard gates act on the candidate
/// alone.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct GateConfig {
    /// metric name -> maximum allowed drop (positive number).
    pub max_drop: BTreeMap<String, f64>,
    pub max_p95_increase_ms: f64,
    /// Candidate policy_pass below this floor fails regardless of deltas.
    pub hard_policy_floor: f64,
    /// When set, any record-level banned violation fails the gate.
    pub hard_violation_ban: bool,
    pub banned_violations: Vec<String>,
}

impl Default for GateConfig {
    /// Thresholds chosen for this artifact (the published tables state
    /// that thresholds exist without publishing values): workflow and
    /// routing may drop 0.05, policy 0.01, p95 may grow 500 ms, policy
    /// floor 0.90, and asks_for_password is banned outright.
    fn default() -> Self {
        Self {
            max_drop: BTreeMap::from([
                ("workflow_success".to_string(), 0.05),
                ("policy_pass".to_string(), 0.01),
                ("routing_accuracy".to_string(), 0.05),
            ]),
            max_p95_increase_ms: 500.0,
            hard_policy_floor: 0.90,
            hard_violation_ban: true,
            banned_violations: vec!["asks_for_password".to_string()],
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<(), GateError> {
        if !(0.0..=1.0).contains(&self.hard_policy_floor) {
            return Err(GateError::InvalidConfig(format!(
                "hard_policy_floor must be in [0,1], got {}",
                self.hard_policy_floor
            )));
        }
        for (metric, drop) in &self.max_drop {
            if !drop.is_finite() || *drop < 0.0 {
                return Err(GateError::InvalidConfig(format!(
                    "max_drop[{metric}] must be a finite non-negative number"
                )));
            }
        }
        if !self.max_p95_increase_ms.is_finite() {
            return Err(GateError::InvalidConfig(
                "max_p95_increase_ms must be finite".to_string(),
            ));
        }
        Ok(())
    }
}

/// Signed candidate-minus-baseline deltas. Values are kept at full
/// precision; rounding happens only at display time.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaReport {
    pub dataset_id: String,
    pub variant: String,
    pub d_workflow: Option<f64>,
    pub d_policy: Option<f64>,
    pub d_routing: Option<f64>,
    pub d_p95_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GateOutcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateReason {
    pub rule: String,
    pub observed: f64,
    pub threshold: f64,
}

/// Pass/fail plus every tripped rule. Fail implies a non-empty reason
/// list; pass implies an empty one.
#[derive(Debug, Clone, Serialize)]
pub struct GateVerdict {
    pub outcome: GateOutcome,
    pub reasons: Vec<GateReason>,
}

impl GateVerdict {
    pub fn passed(&self) -> bool {
        self.outcome == GateOutcome::Pass
    }
}

/// Deltas as candidate - baseline over the shared workflow metrics.
pub fn compute_deltas(
    baseline: &RunReport,
    candidate: &RunReport,
) -> Result<DeltaReport, GateError> {
    if baseline.dataset_id() != candidate.dataset_id() {
        return Err(GateError::DatasetMismatch {
            baseline: baseline.dataset_id().to_string(),
            candidate: candidate.dataset_id().to_string(),
        });
    }
    let diff = |b: Option<f64>, c: Option<f64>| match (b, c) {
        (Some(b), Some(c)) => Some(c - b),
        _ => None,
    };
    Ok(DeltaReport {
        dataset_id: candidate.dataset_id().to_string(),
        variant: candidate
            .prompt_version
            .clone()
            .unwrap_or_else(|| "candidate".to_string()),
        d_workflow: diff(
            baseline.metrics.workflow_success,
            candidate.metrics.workflow_success,
        ),
        d_policy: diff(baseline.metrics.policy_pass, candidate.metrics.policy_pass),
        d_routing: diff(
            baseline.metrics.routing_accuracy,
            candidate.metrics.routing_accuracy,
        ),
        d_p95_ms: candidate.latency_p95_ms - baseline.latency_p95_ms,
    })
}

/// Applies the gate: hard gates first, then per-metric drop thresholds,
/// then the p95 increase bound. Every tripped rule is listed.
pub fn evaluate(
    deltas: &DeltaReport,
    candidate: &RunReport,
    candidate_violations: &[String],
    config: &GateConfig,
) -> Result<GateVerdict, GateError> {
    config.validate()?;
    let mut reasons = Vec::new();

    if let Some(policy) = candidate.metrics.policy_pass {
        if policy < config.hard_policy_floor {
            reasons.push(GateReason {
                rule: "hard_policy_floor".to_string(),
                observed: policy,
                threshold: config.hard_policy_floor,
            });
        }
    }
    if config.hard_violation_ban {
        for banned in &config.banned_violations {
            if candidate_violations.iter().any(|v| v == banned) {
                reasons.push(GateReason {
                    rule: format!("hard_violation_ban:{banned}"),
                    observed: 1.0,
                    threshold: 0.0,
                });
            }
        }
    }

    let checks = [
        ("workflow_success", deltas.d_workflow),
        ("policy_pass", deltas.d_policy),
        ("routing_accuracy", deltas.d_routing),
    ];
    for (metric, delta) in checks {
        let Some(delta) = delta else { continue };
        let threshold = config
            .max_drop
            .get(metric)
            .copied()
            .ok_or_else(|| GateError::MissingThreshold(metric.to_string()))?;
        if delta < -threshold {
            reasons.push(GateReason {
                rule: format!("max_drop:{metric}"),
                observed: delta,
                threshold: -threshold,
            });
        }
    }
    if deltas.d_p95_ms > config.max_p95_increase_ms {
        reasons.push(GateReason {
            rule: "max_p95_increase_ms".to_string(),
            observed: deltas.d_p95_ms,
            threshold: config.max_p95_increase_ms,
        });
    }

    Ok(GateVerdict {
        outcome: if reasons.is_empty() {
            GateOutcome::Pass
        } else {
            GateOutcome::Fail
        },
        reasons,
    })
}

/// Picks the latest valid run tagged with the baseline prompt version
/// for the given dataset. The tag filter runs first so regression
/// variants sharing the same run key never shadow the baseline.
pub fn select_baseline(
    runs: Vec<RunReport>,
    dataset_id: &str,
    baseline_tag: &str,
) -> Option<RunReport> {
    let tagged: Vec<RunReport> = runs
        .into_iter()
        .filter(|r| {
            r.dataset_id() == dataset_id
                && r.prompt_version.as_deref() == Some(baseline_tag)
        })
        .collect();
    let (valid, _) = filter_latest_valid(tagged);
    valid
        .into_iter()
        .max_by(|a, b| a.timestamp().cmp(b.timestamp()))
}
