//! Deployment-readiness harness for LLM/RAG pipelines.
//!
//! Ingests run artifacts, computes scenario-weighted readiness scores,
//! Pareto frontiers, seeded robustness statistics, and CI regression-gate
//! verdicts, and executes batch evaluation plans with checkpoint/resume,
//! deterministic sampling, and span telemetry. A synthetic-ticket data
//! track generates audited datasets for product regression suites.

pub mod analysis;
pub mod artifact;
pub mod config;
pub mod export;
pub mod gates;
pub mod metrics;
pub mod pareto;
pub mod policy;
pub mod runner;
pub mod scoring;
pub mod seeded;
pub mod synth;
