//! Exercises the inference wire contract directly: `POST /v1/infer`
//! with the documented JSON body, against a real socket.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;

use readiness::artifact::{RunTimestamp, Scenario};
use readiness::config::HarnessConfig;
use readiness::metrics::TaskKind;
use readiness::runner::dataset::{Dataset, DatasetItem};
use readiness::runner::provider::{HttpProvider, InferRequest, Provider, ProviderError};
use readiness::runner::{execute_plan, RunPlan};

/// Reads one HTTP request off the stream and returns (request line,
/// body bytes).
fn read_request(stream: &mut TcpStream) -> (String, Vec<u8>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    reader.read_line(&mut request_line).unwrap();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        if line == "\r\n" || line == "\n" || line.is_empty() {
            break;
        }
        if let Some(value) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = value.trim().parse().unwrap();
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).unwrap();
    (request_line.trim().to_string(), body)
}

fn respond(stream: &mut TcpStream, status: &str, body: &str) {
    let response = format!(
        "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(response.as_bytes()).unwrap();
    stream.flush().unwrap();
}

/// One-shot inference service for a test; sends each received body to
/// the channel and answers from the responder closure.
fn spawn_server(
    requests: usize,
    responder: impl Fn(usize, &serde_json::Value) -> (String, String) + Send + 'static,
) -> (String, mpsc::Receiver<serde_json::Value>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}", listener.local_addr().unwrap());
    let (sender, receiver) = mpsc::channel();
    std::thread::spawn(move || {
        for served in 0..requests {
            let (mut stream, _) = listener.accept().unwrap();
            let (request_line, body) = read_request(&mut stream);
            assert!(
                request_line.starts_with("POST /v1/infer HTTP/1.1"),
                "unexpected request line: {request_line}"
            );
            let value: serde_json::Value = serde_json::from_slice(&body).unwrap();
            let (status, response_body) = responder(served, &value);
            sender.send(value).ok();
            respond(&mut stream, &status, &response_body);
        }
    });
    (endpoint, receiver)
}

fn request() -> InferRequest {
    InferRequest {
        item_id: "q001".to_string(),
        text: "what is the 50/30/20 budgeting rule".to_string(),
        scenario: Scenario::SlaFirst,
        top_k: Some(5),
        model: "gpt-4.1-mini".to_string(),
        prompt_version: "v1".to_string(),
    }
}

#[test]
fn request_body_matches_the_contract_and_response_parses() {
    let (endpoint, received) = spawn_server(1, |_, _| {
        (
            "200 OK".to_string(),
            serde_json::json!({
                "output": "grounded answer",
                "latency_ms": 3120.0,
                "tokens_in": 640,
                "tokens_out": 180,
                "retrieved_doc_ids": ["d1", "d2"],
                "trace_id": "trace-1",
                "faithfulness": 0.74,
            })
            .to_string(),
        )
    });
    let provider = HttpProvider::new(&endpoint, Some("secret-key".to_string()), 5);
    let response = provider.infer(&request()).unwrap();

    let body = received.recv().unwrap();
    assert_eq!(body["item"]["id"], "q001");
    assert_eq!(body["item"]["text"], "what is the 50/30/20 budgeting rule");
    assert_eq!(body["scenario"], "sla-first");
    assert_eq!(body["top_k"], 5);
    assert_eq!(body["model"], "gpt-4.1-mini");
    assert_eq!(body["prompt_version"], "v1");

    assert_eq!(response.output, "grounded answer");
    assert_eq!(response.latency_ms, 3120.0);
    assert_eq!(response.tokens_in, 640);
    assert_eq!(response.tokens_out, 180);
    assert_eq!(response.retrieved_doc_ids.unwrap().len(), 2);
    assert_eq!(response.trace_id.as_deref(), Some("trace-1"));
    assert_eq!(response.faithfulness, Some(0.74));
}

#[test]
fn optional_response_fields_may_be_absent() {
    let (endpoint, _received) = spawn_server(1, |_, _| {
        (
            "200 OK".to_string(),
            serde_json::json!({
                "output": "{\"route_label\":\"billing\",\"confidence\":0.8,\"should_escalate\":false,\"policy_violations\":[]}",
                "latency_ms": 2100,
                "tokens_in": 300,
                "tokens_out": 40,
            })
            .to_string(),
        )
    });
    let provider = HttpProvider::new(&endpoint, None, 5);
    let response = provider.infer(&request()).unwrap();
    assert_eq!(response.retrieved_doc_ids, None);
    assert_eq!(response.trace_id, None);
    assert_eq!(response.faithfulness, None);
}

#[test]
fn server_errors_map_to_retryable_and_fatal() {
    let (endpoint, _received) = spawn_server(2, |served, _| {
        if served == 0 {
            ("500 Internal Server Error".to_string(), "{}".to_string())
        } else {
            ("400 Bad Request".to_string(), "{}".to_string())
        }
    });
    let provider = HttpProvider::new(&endpoint, None, 5);
    match provider.infer(&request()) {
        Err(ProviderError::Transient(_)) => {}
        other => panic!("5xx must be transient, got {other:?}"),
    }
    match provider.infer(&request()) {
        Err(ProviderError::Fatal(_)) => {}
        other => panic!("4xx must be fatal, got {other:?}"),
    }
}

#[test]
fn a_full_plan_runs_over_the_http_contract() {
    let items: Vec<DatasetItem> = (0..6)
        .map(|i| DatasetItem {
            id: format!("q{i}"),
            text: format!("question {i}"),
            label: None,
            should_escalate: None,
            language: None,
        })
        .collect();
    let dataset = Dataset::from_items("beir_demo", items);

    // One request per item; the first request of q3 fails once to
    // exercise the retry path.
    let (endpoint, _received) = spawn_server(7, |_, body| {
        let id = body["item"]["id"].as_str().unwrap_or_default().to_string();
        static FAILED_ONCE: std::sync::atomic::AtomicBool =
            std::sync::atomic::AtomicBool::new(false);
        if id == "q3"
            && !FAILED_ONCE.swap(true, std::sync::atomic::Ordering::SeqCst)
        {
            return ("503 Service Unavailable".to_string(), "{}".to_string());
        }
        (
            "200 OK".to_string(),
            serde_json::json!({
                "output": format!("answer for {id}"),
                "latency_ms": 2000.0,
                "tokens_in": 100,
                "tokens_out": 20,
                "retrieved_doc_ids": [format!("{id}-gold")],
                "faithfulness": 0.7,
            })
            .to_string(),
        )
    });

    let mut plan = RunPlan::new(
        "sim_core",
        "beir_demo",
        TaskKind::Retrieval,
        Scenario::SlaFirst,
        42,
        6,
        "gpt-4.1-mini",
    );
    plan.top_k = Some(3);
    plan.workers = 1; // keep the request sequence deterministic
    plan.delay_ms = 0;
    plan.provider_name = "http".to_string();
    plan.timestamp = Some(RunTimestamp::parse("20260401_120000").unwrap());

    let qrels = readiness::runner::provider::synthetic_qrels(&dataset);
    let provider = HttpProvider::new(&endpoint, None, 5);
    let config = HarnessConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute_plan(
        &plan,
        &dataset,
        Some(&qrels),
        &provider,
        &config,
        &dir.path().join("run"),
    )
    .unwrap();
    assert_eq!(outcome.executed_items, 6);
    assert_eq!(outcome.report.evaluator_error_count, 0, "retry should recover");
    assert_eq!(outcome.report.metrics.retrieval_hit_k, Some(1.0));
    assert_eq!(outcome.report.provider, "http");
}
