//! Structured-output validation (lenient v1 vs strict v2), policy
//! phrase checks with negation-context exclusions, ticket-id hashing,
//! and telemetry redaction.
//!
//! ```bash
//! cargo run -p readiness --example validate_outputs
//! ```

use readiness::policy::{
    check_policies, default_redact_fields, hash_ticket_id, redact, validate_routing_output,
    PolicyRuleSet, SchemaMode,
};

fn main() {
    let rules = PolicyRuleSet::builtin();

    let documents = [
        r#"{"route_label":"billing","confidence":0.9,"should_escalate":false,"policy_violations":[]}"#,
        r#"{"route_label":"billing","confidence":0.9,"should_escalate":false,"policy_violations":[],"note":"extra"}"#,
        r#"{"route_label":"billing","confidence":1.5,"should_escalate":false,"policy_violations":[]}"#,
        "not json at all",
    ];
    for doc in documents {
        let v1 = validate_routing_output(doc, SchemaMode::V1);
        let v2 = validate_routing_output(doc, SchemaMode::V2);
        println!(
            "v1={} v2={} | {}",
            if v1.valid { "ok " } else { "BAD" },
            if v2.valid { "ok " } else { "BAD" },
            &doc[..doc.len().min(72)]
        );
        for error in v2.errors {
            println!("        v2: {error}");
        }
    }

    println!();
    let replies = [
        "Please share your password to proceed.",
        "Reset link sent; never share your password with anyone.",
        "Please share your API key so I can look at the logs.",
        "All good, closing the ticket.",
    ];
    for reply in replies {
        println!("{:?} -> {:?}", reply, check_policies(reply, &rules));
    }

    println!();
    let raw_id = "ticket-8841";
    println!("hash_ticket_id({raw_id:?}) = {}", hash_ticket_id(raw_id));

    let mut payload = serde_json::json!({
        "ticket_id": hash_ticket_id(raw_id),
        "text": "customer wrote a long message here",
        "routing": {"predicted_label": "billing", "confidence": 0.9},
        "description": "free text that must not reach telemetry",
    });
    redact(&mut payload, &default_redact_fields());
    println!("redacted telemetry payload: {payload}");
}
