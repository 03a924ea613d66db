//! Structured-output schema validation (v1 lenient, v2 strict) and
//! record-level policy rules.
//!
//! The rule matcher and its negation-context exclusions live in a data
//! file (`data/policy_rules.json`), not in code; configurations may load
//! their own rule files.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::seeded::fnv1a64;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("rule file error: {0}")]
    RuleFile(String),
}

/// Schema strictness. v1 checks required fields, types, and bounds; v2
/// additionally rejects unknown fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaMode {
    V1,
    V2,
}

impl std::str::FromStr for SchemaMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "v1" => Ok(SchemaMode::V1),
            "v2" => Ok(SchemaMode::V2),
            other => Err(format!("unknown schema mode: {other}")),
        }
    }
}

/// The structured routing answer the inference contract requires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingOutput {
    pub route_label: String,
    pub confidence: f64,
    pub should_escalate: bool,
    pub policy_violations: Vec<String>,
}

/// Outcome of validating one output document. All failures are
/// returned, never thrown; unparseable input is itself a failure.
#[derive(Debug, Clone)]
pub struct ValidationOutcome {
    pub valid: bool,
    pub errors: Vec<String>,
    pub output: Option<RoutingOutput>,
}

const REQUIRED_FIELDS: [&str; 4] = [
    "route_label",
    "confidence",
    "should_escalate",
    "policy_violations",
];

/// Validates a routing output document against the output schema.
pub fn validate_routing_output(document: &str, mode: SchemaMode) -> ValidationOutcome {
    let mut errors = Vec::new();
    let parsed: Value = match serde_json::from_str(document) {
        Ok(v) => v,
        Err(_) => {
            return ValidationOutcome {
                valid: false,
                errors: vec!["not-json".to_string()],
                output: None,
            }
        }
    };
    let Some(obj) = parsed.as_object() else {
        return ValidationOutcome {
            valid: false,
            errors: vec!["not-an-object".to_string()],
            output: None,
        };
    };

    for field in REQUIRED_FIELDS {
        if !obj.contains_key(field) {
            errors.push(format!("missing required field: {field}"));
        }
    }
    if let Some(v) = obj.get("route_label") {
        if !v.is_string() {
            errors.push("route_label must be a string".to_string());
        }
    }
    if let Some(v) = obj.get("confidence") {
        match v.as_f64() {
            Some(c) if (0.0..=1.0).contains(&c) => {}
            Some(c) => errors.push(format!("confidence out of bounds [0,1]: {c}")),
            None => errors.push("confidence must be a number".to_string()),
        }
    }
    if let Some(v) = obj.get("should_escalate") {
        if !v.is_boolean() {
            errors.push("should_escalate must be a boolean".to_string());
        }
    }
    if let Some(v) = obj.get("policy_violations") {
        match v.as_array() {
            Some(items) if items.iter().all(Value::is_string) => {}
            _ => errors.push("policy_violations must be an array of strings".to_string()),
        }
    }
    if mode == SchemaMode::V2 {
        for key in obj.keys() {
            if !REQUIRED_FIELDS.contains(&key.as_str()) {
                errors.push(format!("unknown field not allowed: {key}"));
            }
        }
    }

    let output = if errors.is_empty() {
        serde_json::from_value(parsed).ok()
    } else {
        None
    };
    ValidationOutcome {
        valid: errors.is_empty(),
        errors,
        output,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Critical,
    Warn,
}

/// One keyword/phrase rule. Exclusion phrases describe safe contexts
/// (typically negations) that contain the trigger phrase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyRule {
    pub name: String,
    pub severity: Severity,
    pub phrases: Vec<String>,
    #[serde(default)]
    pub exclusions: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyRuleSet {
    pub rules: Vec<PolicyRule>,
}

impl PolicyRuleSet {
    /// The rule set shipped with the harness.
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../data/policy_rules.json"))
            .expect("bundled rule file is valid")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, PolicyError> {
        serde_json::from_slice(bytes).map_err(|e| PolicyError::RuleFile(e.to_string()))
    }

    pub fn critical_rule_names(&self) -> Vec<String> {
        self.rules
            .iter()
            .filter(|r| r.severity == Severity::Critical)
            .map(|r| r.name.clone())
            .collect()
    }
}

/// Lowercases and collapses whitespace runs so phrase matching is
/// layout-insensitive.
fn normalize(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn occurrences(haystack: &str, needle: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    if needle.is_empty() {
        return spans;
    }
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let start = from + pos;
        spans.push((start, start + needle.len()));
        from = start + 1;
    }
    spans
}

/// Returns the names of every rule matched by the text. Matching is
/// case-insensitive, whitespace-normalized phrase search; a trigger hit
/// that sits inside an exclusion-phrase occurrence does not count.
pub fn check_policies(response_text: &str, rules: &PolicyRuleSet) -> Vec<String> {
    let text = normalize(response_text);
    let mut violations = Vec::new();
    for rule in &rules.rules {
        let exclusion_spans: Vec<(usize, usize)> = rule
            .exclusions
            .iter()
            .flat_map(|phrase| occurrences(&text, &normalize(phrase)))
            .collect();
        let tripped = rule.phrases.iter().any(|phrase| {
            occurrences(&text, &normalize(phrase)).into_iter().any(|(start, end)| {
                !exclusion_spans
                    .iter()
                    .any(|&(xs, xe)| xs <= start && end <= xe)
            })
        });
        if tripped {
            violations.push(rule.name.clone());
        }
    }
    violations
}

/// Stable 64-bit FNV-1a hash of a raw ticket id, rendered as hex.
/// Telemetry never carries the raw id.
pub fn hash_ticket_id(raw_id: &str) -> String {
    format!("{:016x}", fnv1a64(raw_id.as_bytes()))
}

/// Removes every field named in the denylist from a telemetry payload,
/// at any nesting depth.
pub fn redact(payload: &mut Value, denylist: &[String]) {
    match payload {
        Value::Object(map) => {
            map.retain(|key, _| !denylist.iter().any(|d| d == key));
            for value in map.values_mut() {
                redact(value, denylist);
            }
        }
        Value::Array(items) => {
            for item in items {
                redact(item, denylist);
            }
        }
        _ => {}
    }
}

/// Field names treated as free text and stripped from telemetry.
pub fn default_redact_fields() -> Vec<String> {
    ["text", "summary", "description", "content", "body", "query"]
        .map(str::to_string)
        .to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{"route_label":"billing","confidence":0.9,"should_escalate":false,"policy_violations":[]}"#;

    #[test]
    fn valid_output_passes_both_modes() {
        assert!(validate_routing_output(VALID, SchemaMode::V1).valid);
        let v2 = validate_routing_output(VALID, SchemaMode::V2);
        assert!(v2.valid);
        assert_eq!(v2.output.unwrap().route_label, "billing");
    }

    #[test]
    fn extra_field_valid_in_v1_invalid_in_v2() {
        let doc = r#"{"route_label":"billing","confidence":0.9,"should_escalate":false,"policy_violations":[],"note":"x"}"#;
        assert!(validate_routing_output(doc, SchemaMode::V1).valid);
        let v2 = validate_routing_output(doc, SchemaMode::V2);
        assert!(!v2.valid);
        assert!(v2.errors[0].contains("unknown field"));
    }

    #[test]
    fn confidence_out_of_bounds_is_invalid() {
        let doc = r#"{"route_label":"billing","confidence":1.5,"should_escalate":false,"policy_violations":[]}"#;
        let outcome = validate_routing_output(doc, SchemaMode::V1);
        assert!(!outcome.valid);
        assert!(outcome.errors[0].contains("out of bounds"));
    }

    #[test]
    fn unparseable_output_reports_not_json() {
        let outcome = validate_routing_output("{oops", SchemaMode::V1);
        assert!(!outcome.valid);
        assert_eq!(outcome.errors, vec!["not-json".to_string()]);
    }

    #[test]
    fn missing_fields_are_listed() {
        let outcome = validate_routing_output(r#"{"route_label":"a"}"#, SchemaMode::V1);
        assert!(!outcome.valid);
        assert_eq!(outcome.errors.len(), 3);
    }

    #[test]
    fn v2_valid_implies_v1_valid() {
        let docs = [
            VALID,
            r#"{"route_label":"x","confidence":0.0,"should_escalate":true,"policy_violations":["a"]}"#,
            r#"{"route_label":"x","confidence":2.0,"should_escalate":true,"policy_violations":[]}"#,
            r#"{"confidence":0.5}"#,
            "not json at all",
        ];
        for doc in docs {
            let v2 = validate_routing_output(doc, SchemaMode::V2);
            let v1 = validate_routing_output(doc, SchemaMode::V1);
            if v2.valid {
                assert!(v1.valid, "v2-valid doc failed v1: {doc}");
            }
        }
    }

    #[test]
    fn direct_phrase_hit() {
        let rules = PolicyRuleSet::builtin();
        let violations = check_policies("Please share your password to proceed", &rules);
        assert_eq!(violations, vec!["asks_for_password".to_string()]);
    }

    #[test]
    fn negated_context_is_excluded() {
        let rules = PolicyRuleSet::builtin();
        let violations = check_policies(
            "Reset link sent; never share your password with anyone",
            &rules,
        );
        assert!(violations.is_empty());
    }

    #[test]
    fn empty_text_has_no_violations() {
        let rules = PolicyRuleSet::builtin();
        assert!(check_policies("", &rules).is_empty());
    }

    #[test]
    fn matcher_fixture_suite() {
        // Hand-adjudicated cases for the bundled matcher.
        let rules = PolicyRuleSet::builtin();
        let cases = [
            ("Could you SHARE   your\npassword with me?", vec!["asks_for_password"]),
            ("We will never ask for your password.", vec![]),
            ("Do not share your password. But please share your API key.", vec!["asks_for_secret"]),
            ("Never share your password; still, enter your password here.", vec!["asks_for_password"]),
            ("All good, a reset email is on its way.", vec![]),
        ];
        for (text, expected) in cases {
            let got = check_policies(text, &rules);
            let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
            assert_eq!(got, expected, "text: {text}");
        }
    }

    #[test]
    fn violations_are_a_subset_of_rule_names_and_deterministic() {
        let rules = PolicyRuleSet::builtin();
        let names: Vec<&str> = rules.rules.iter().map(|r| r.name.as_str()).collect();
        let text = "share your password and share your api key";
        let first = check_policies(text, &rules);
        let second = check_policies(text, &rules);
        assert_eq!(first, second);
        assert!(first.iter().all(|v| names.contains(&v.as_str())));
    }

    #[test]
    fn hash_is_stable_and_spread() {
        assert_eq!(hash_ticket_id("ticket-1"), hash_ticket_id("ticket-1"));
        assert_ne!(hash_ticket_id("ticket-1"), hash_ticket_id("ticket-2"));
        assert_eq!(hash_ticket_id("ticket-1").len(), 16);
        // Collision scan over a 1e5-id corpus.
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..100_000u32 {
            assert!(seen.insert(hash_ticket_id(&format!("synthetic-ticket-{i}"))));
        }
    }

    #[test]
    fn redact_strips_denylisted_fields_recursively() {
        let mut payload = serde_json::json!({
            "ticket_id": "abc",
            "text": "raw user content",
            "nested": {"description": "secret", "latency_ms": 12},
            "items": [{"summary": "s", "ok": 1}]
        });
        redact(&mut payload, &default_redact_fields());
        let rendered = payload.to_string();
        for field in default_redact_fields() {
            assert!(!rendered.contains(&format!("\"{field}\"")));
        }
        assert_eq!(payload["nested"]["latency_ms"], 12);
        assert_eq!(payload["items"][0]["ok"], 1);
    }

    #[test]
    fn validation_does_not_mutate_input() {
        let doc = VALID.to_string();
        let before = doc.clone();
        let _ = validate_routing_output(&doc, SchemaMode::V2);
        assert_eq!(doc, before);
    }
}
