//! Filters run collections down to latest-valid sets and computes seeded
//! robustness statistics.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::artifact::{Diagnostic, RagasStatus, RunReport, Scenario};
use crate::metrics::{Budget, TaskKind};
use crate::scoring::{score, ScoreResult, ScenarioWeights};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown metric name: {0}")]
    UnknownMetric(String),
    #[error("no runs to analyze")]
    NoRuns,
}

/// Full grouping key for one run cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AnalysisKey {
    pub dataset_id: String,
    pub scenario: Scenario,
    pub top_k: Option<u32>,
    pub seed: u64,
    pub model: String,
    pub provider: String,
}

impl AnalysisKey {
    pub fn of(report: &RunReport) -> Self {
        Self {
            dataset_id: report.dataset_id().to_string(),
            scenario: report.scenario(),
            top_k: report.top_k(),
            seed: report.seed(),
            model: report.model.clone(),
            provider: report.provider.clone(),
        }
    }

    pub fn group(&self) -> GroupKey {
        GroupKey {
            dataset_id: self.dataset_id.clone(),
            scenario: self.scenario,
            top_k: self.top_k,
            model: self.model.clone(),
            provider: self.provider.clone(),
        }
    }
}

/// Grouping key with the seed removed: the axis seed statistics
/// aggregate over.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GroupKey {
    pub dataset_id: String,
    pub scenario: Scenario,
    pub top_k: Option<u32>,
    pub model: String,
    pub provider: String,
}

/// Why a run was excluded from analysis. Each dropped run carries
/// exactly one reason: the first failing check in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DropReason {
    RagasNotOk(String),
    EvaluatorErrors(u64),
    SampleSizeInconsistent { got: Option<u64>, modal: Option<u64> },
    SupersededBy(String),
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DropReason::RagasNotOk(status) => write!(f, "ragas_status={status}, expected ok"),
            DropReason::EvaluatorErrors(n) => write!(f, "{n} evaluator errors, expected zero"),
            DropReason::SampleSizeInconsistent { got, modal } => {
                write!(f, "sample_n {got:?} differs from the group's modal {modal:?}")
            }
            DropReason::SupersededBy(id) => write!(f, "superseded by later run {id}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DroppedRun {
    pub run_id: String,
    pub reason: DropReason,
}

/// Keeps the latest valid run per (dataset, scenario, k, seed, model,
/// provider): ragas ok, zero evaluator errors, sample size matching the
/// group's modal value, latest timestamp among duplicates. Idempotent.
pub fn filter_latest_valid(runs: Vec<RunReport>) -> (Vec<RunReport>, Vec<DroppedRun>) {
    let mut dropped = Vec::new();
    let mut candidates = Vec::new();
    for run in runs {
        let run_id = run.run_id.render().unwrap_or_default();
        if run.ragas_status != RagasStatus::Ok {
            dropped.push(DroppedRun {
                run_id,
                reason: DropReason::RagasNotOk(run.ragas_status.to_string()),
            });
            continue;
        }
        if run.evaluator_error_count > 0 {
            dropped.push(DroppedRun {
                run_id,
                reason: DropReason::EvaluatorErrors(run.evaluator_error_count),
            });
            continue;
        }
        candidates.push(run);
    }

    // Modal sample_n per seedless group; ties prefer the larger sample.
    let mut counts: BTreeMap<GroupKey, BTreeMap<Option<u64>, usize>> = BTreeMap::new();
    for run in &candidates {
        *counts
            .entry(AnalysisKey::of(run).group())
            .or_default()
            .entry(run.sample_n)
            .or_default() += 1;
    }
    let modal: BTreeMap<GroupKey, Option<u64>> = counts
        .into_iter()
        .map(|(group, histogram)| {
            let modal = histogram
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(n, _)| n)
                .unwrap_or(None);
            (group, modal)
        })
        .collect();

    let mut latest: BTreeMap<AnalysisKey, RunReport> = BTreeMap::new();
    for run in candidates {
        let key = AnalysisKey::of(&run);
        let group_modal = modal[&key.group()];
        if run.sample_n != group_modal {
            dropped.push(DroppedRun {
                run_id: run.run_id.render().unwrap_or_default(),
                reason: DropReason::SampleSizeInconsistent {
                    got: run.sample_n,
                    modal: group_modal,
                },
            });
            continue;
        }
        match latest.get(&key) {
            Some(existing)
                if (existing.timestamp(), existing.run_id.render().ok())
                    >= (run.timestamp(), run.run_id.render().ok()) =>
            {
                dropped.push(DroppedRun {
                    run_id: run.run_id.render().unwrap_or_default(),
                    reason: DropReason::SupersededBy(
                        existing.run_id.render().unwrap_or_default(),
                    ),
                });
            }
            Some(existing) => {
                dropped.push(DroppedRun {
                    run_id: existing.run_id.render().unwrap_or_default(),
                    reason: DropReason::SupersededBy(run.run_id.render().unwrap_or_default()),
                });
                latest.insert(key, run);
            }
            None => {
                latest.insert(key, run);
            }
        }
    }

    let mut kept: Vec<RunReport> = latest.into_values().collect();
    kept.sort_by_key(|r| r.run_id.render().unwrap_or_default());
    (kept, dropped)
}

/// A run plus its readiness score under its own scenario's weights.
#[derive(Debug, Clone)]
pub struct ScoredRun {
    pub report: RunReport,
    pub score: ScoreResult,
}

/// Task kind inferred from a report. Workflow-style metrics mark a
/// ticket run; otherwise a hit rate or a top_k dimension marks a
/// retrieval run.
pub fn task_of(report: &RunReport) -> TaskKind {
    if report.metrics.workflow_success.is_some()
        || report.metrics.routing_accuracy.is_some()
        || report.metrics.macro_f1.is_some()
    {
        TaskKind::Ticket
    } else if report.metrics.retrieval_hit_k.is_some() || report.top_k().is_some() {
        TaskKind::Retrieval
    } else {
        TaskKind::Ticket
    }
}

/// Scores each run with the weight profile of its own scenario.
/// Unscorable runs become diagnostics.
pub fn score_runs(
    reports: Vec<RunReport>,
    weights_for: impl Fn(Scenario) -> ScenarioWeights,
    budgets: &[Budget],
) -> (Vec<ScoredRun>, Vec<Diagnostic>) {
    let mut scored = Vec::new();
    let mut diagnostics = Vec::new();
    for report in reports {
        let weights = weights_for(report.scenario());
        match score(&report.metrics, &weights, task_of(&report), budgets) {
            Ok(result) => scored.push(ScoredRun {
                report,
                score: result,
            }),
            Err(e) => diagnostics.push(Diagnostic {
                context: report.run_id.render().unwrap_or_default(),
                message: e.to_string(),
            }),
        }
    }
    (scored, diagnostics)
}

/// Resolves a named metric on a scored run. `score` is the readiness
/// value; the rest come from the metric set or the latency field.
pub fn metric_value(run: &ScoredRun, metric: &str) -> Option<f64> {
    match metric {
        "score" => Some(run.score.value),
        "p95_latency_ms" => Some(run.report.latency_p95_ms),
        other => run.report.metrics.get(other),
    }
}

pub const KNOWN_METRICS: [&str; 12] = [
    "score",
    "workflow_success",
    "policy_pass",
    "faithfulness",
    "retrieval_hit_k",
    "cost_usd",
    "cost_per_task_usd",
    "p95_latency_ms",
    "routing_accuracy",
    "macro_f1",
    "escalation_rate",
    "answer_relevance",
];

/// Mean and sample (n-1) standard deviation of one metric across the
/// seeds of a group. Groups with a single run report the mean only.
#[derive(Debug, Clone, Serialize)]
pub struct SeedStat {
    pub group: GroupKey,
    pub metric: String,
    pub mean: f64,
    pub std: Option<f64>,
    pub n_runs: usize,
}

/// Aggregates a metric over seeds per (dataset, scenario, k, model,
/// provider) group. Runs lacking the metric are skipped; groups with no
/// valued runs are omitted.
pub fn seed_stats(runs: &[ScoredRun], metric: &str) -> Result<Vec<SeedStat>, AnalysisError> {
    if !KNOWN_METRICS.contains(&metric) {
        return Err(AnalysisError::UnknownMetric(metric.to_string()));
    }
    if runs.is_empty() {
        return Err(AnalysisError::NoRuns);
    }
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for run in runs {
        if let Some(value) = metric_value(run, metric) {
            groups
                .entry(AnalysisKey::of(&run.report).group())
                .or_default()
                .push(value);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(group, values)| {
            let (mean, std) = mean_and_sample_std(&values);
            SeedStat {
                group,
                metric: metric.to_string(),
                mean,
                std,
                n_runs: values.len(),
            }
        })
        .collect())
}

/// Arithmetic mean and sample standard deviation (divisor n-1). With a
/// single observation the deviation is reported as absent, not 0.
pub fn mean_and_sample_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, Some(variance.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifact::{RunId, RunTimestamp};
    use crate::metrics::MetricSet;
    use crate::scoring::builtin_weights;
    use std::collections::BTreeMap as Map;

    fn report(
        dataset: &str,
        scenario: Scenario,
        seed: u64,
        timestamp: &str,
        ragas: RagasStatus,
        errors: u64,
        sample_n: Option<u64>,
    ) -> RunReport {
        let run_id = RunId {
            suite: "azure_core".to_string(),
            dataset_id: dataset.to_string(),
            model_id: "gpt-4.1-mini".to_string(),
            scenario,
            top_k: Some(5),
            seed,
            timestamp: RunTimestamp::parse(timestamp).unwrap(),
        };
        RunReport {
            run_id,
            provider: "azure".to_string(),
            model: "gpt-4.1-mini".to_string(),
            sample_n,
            pipeline_version: Some("v1".to_string()),
            retriever: None,
            reranker: None,
            prompt_version: None,
            metrics: MetricSet {
                faithfulness: Some(0.7),
                retrieval_hit_k: Some(0.8),
                p95_latency_ms: Some(3000.0),
                ..MetricSet::default()
            },
            latency_p95_ms: 3000.0,
            ragas_status: ragas,
            evaluator_error_count: errors,
            unknown_top: Map::new(),
            unknown_extra: Map::new(),
        }
    }

    #[test]
    fn latest_wins_within_a_key() {
        let older = report(
            "beir_scifact",
            Scenario::SlaFirst,
            42,
            "20260220_080000",
            RagasStatus::Ok,
            0,
            Some(60),
        );
        let newer = report(
            "beir_scifact",
            Scenario::SlaFirst,
            42,
            "20260221_080000",
            RagasStatus::Ok,
            0,
            Some(60),
        );
        let (kept, dropped) = filter_latest_valid(vec![older.clone(), newer.clone()]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].timestamp().as_str(), "20260221_080000");
        assert_eq!(dropped.len(), 1);
        assert!(matches!(dropped[0].reason, DropReason::SupersededBy(_)));
    }

    #[test]
    fn evaluator_errors_drop_the_run_with_reason() {
        let bad = report(
            "beir_scifact",
            Scenario::SlaFirst,
            42,
            "20260220_080000",
            RagasStatus::Ok,
            1,
            Some(60),
        );
        let (kept, dropped) = filter_latest_valid(vec![bad]);
        assert!(kept.is_empty());
        assert_eq!(dropped.len(), 1);
        assert!(matches!(dropped[0].reason, DropReason::EvaluatorErrors(1)));
    }

    #[test]
    fn ragas_not_ok_drops_the_run() {
        let bad = report(
            "beir_scifact",
            Scenario::SlaFirst,
            42,
            "20260220_080000",
            RagasStatus::Missing,
            0,
            Some(60),
        );
        let (kept, dropped) = filter_latest_valid(vec![bad]);
        assert!(kept.is_empty());
        assert!(matches!(dropped[0].reason, DropReason::RagasNotOk(_)));
    }

    #[test]
    fn minority_sample_size_is_dropped() {
        let runs = vec![
            report("d_s", Scenario::SlaFirst, 42, "20260220_080000", RagasStatus::Ok, 0, Some(60)),
            report("d_s", Scenario::SlaFirst, 43, "20260220_080001", RagasStatus::Ok, 0, Some(60)),
            report("d_s", Scenario::SlaFirst, 44, "20260220_080002", RagasStatus::Ok, 0, Some(30)),
        ];
        let (kept, dropped) = filter_latest_valid(runs);
        assert_eq!(kept.len(), 2);
        assert_eq!(dropped.len(), 1);
        assert!(matches!(
            dropped[0].reason,
            DropReason::SampleSizeInconsistent { got: Some(30), modal: Some(60) }
        ));
    }

    #[test]
    fn full_valid_matrix_passes_through() {
        // The complete run matrix (2 datasets x 3 scenarios x 3 k x 3
        // seeds x 3 models = 162 valid cells) survives filtering intact.
        let mut runs = Vec::new();
        let mut stamp = 0;
        for dataset in ["beir_scifact", "beir_fiqa"] {
            for scenario in Scenario::ALL {
                for k in [3u32, 5, 10] {
                    for seed in [42u64, 1337, 2024] {
                        for model in ["gpt-4.1", "gpt-4.1-mini", "gpt-5.2"] {
                            stamp += 1;
                            let mut r = report(
                                dataset,
                                scenario,
                                seed,
                                &format!("20260220_{:06}", stamp),
                                RagasStatus::Ok,
                                0,
                                Some(60),
                            );
                            r.run_id.top_k = Some(k);
                            r.run_id.model_id = model.to_string();
                            r.model = model.to_string();
                            runs.push(r);
                        }
                    }
                }
            }
        }
        assert_eq!(runs.len(), 162);
        let (kept, dropped) = filter_latest_valid(runs);
        assert_eq!(kept.len(), 162);
        assert!(dropped.is_empty());
    }

    #[test]
    fn filtering_is_idempotent() {
        let runs = vec![
            report("d_s", Scenario::SlaFirst, 42, "20260220_080000", RagasStatus::Ok, 0, Some(60)),
            report("d_s", Scenario::SlaFirst, 42, "20260221_080000", RagasStatus::Ok, 0, Some(60)),
            report("d_s", Scenario::SlaFirst, 43, "20260220_080000", RagasStatus::Ok, 0, Some(30)),
        ];
        let (once, _) = filter_latest_valid(runs);
        let (twice, dropped) = filter_latest_valid(once.clone());
        assert_eq!(once.len(), twice.len());
        assert!(dropped.is_empty());
        let ids = |rs: &[RunReport]| -> Vec<String> {
            rs.iter().map(|r| r.run_id.render().unwrap()).collect()
        };
        assert_eq!(ids(&once), ids(&twice));
    }

    fn scored(dataset: &str, scenario: Scenario, seed: u64, value: f64) -> ScoredRun {
        let mut r = report(
            dataset,
            scenario,
            seed,
            "20260220_080000",
            RagasStatus::Ok,
            0,
            Some(60),
        );
        r.metrics.faithfulness = Some(value);
        r.metrics.retrieval_hit_k = None;
        let s = score(
            &r.metrics,
            &builtin_weights(scenario),
            TaskKind::Retrieval,
            &[],
        )
        .unwrap();
        ScoredRun {
            report: r,
            score: s,
        }
    }

    #[test]
    fn seed_stats_reproduce_published_error_bars() {
        // FiQA sla-first per-seed scores {0.824, 0.818, 0.783} and
        // SciFact {0.830, 0.802, 0.800}: mean +- sample std must round
        // to 0.808 +- 0.022 and 0.811 +- 0.017.
        let fiqa: Vec<ScoredRun> = [(42u64, 0.824), (1337, 0.818), (2024, 0.783)]
            .iter()
            .map(|&(seed, v)| scored("beir_fiqa", Scenario::SlaFirst, seed, v))
            .collect();
        let stats = seed_stats(&fiqa, "score").unwrap();
        assert_eq!(stats.len(), 1);
        let stat = &stats[0];
        assert_eq!(stat.n_runs, 3);
        assert!((stat.mean - 0.808).abs() < 0.0005);
        assert!((stat.std.unwrap() - 0.022).abs() < 0.0005);

        let scifact: Vec<ScoredRun> = [(42u64, 0.830), (1337, 0.802), (2024, 0.800)]
            .iter()
            .map(|&(seed, v)| scored("beir_scifact", Scenario::SlaFirst, seed, v))
            .collect();
        let stats = seed_stats(&scifact, "score").unwrap();
        let stat = &stats[0];
        assert!((stat.mean - 0.811).abs() < 0.0005);
        assert!((stat.std.unwrap() - 0.017).abs() < 0.0005);
    }

    #[test]
    fn identical_values_have_zero_std() {
        let runs: Vec<ScoredRun> = [42u64, 1337, 2024]
            .iter()
            .map(|&seed| scored("d_s", Scenario::SlaFirst, seed, 0.5))
            .collect();
        let stats = seed_stats(&runs, "score").unwrap();
        assert_eq!(stats[0].mean, 0.5);
        assert_eq!(stats[0].std, Some(0.0));
    }

    #[test]
    fn single_run_reports_no_std() {
        let runs = vec![scored("d_s", Scenario::SlaFirst, 42, 0.5)];
        let stats = seed_stats(&runs, "score").unwrap();
        assert_eq!(stats[0].std, None);
        assert_eq!(stats[0].n_runs, 1);
    }

    #[test]
    fn seed_stats_are_permutation_invariant() {
        let mut runs: Vec<ScoredRun> = [(42u64, 0.9), (1337, 0.7), (2024, 0.8)]
            .iter()
            .map(|&(seed, v)| scored("d_s", Scenario::SlaFirst, seed, v))
            .collect();
        let forward = seed_stats(&runs, "score").unwrap();
        runs.reverse();
        let backward = seed_stats(&runs, "score").unwrap();
        assert_eq!(forward[0].mean, backward[0].mean);
        assert_eq!(forward[0].std, backward[0].std);
    }

    #[test]
    fn sample_std_matches_two_pass_oracle() {
        let values = [0.824, 0.818, 0.783];
        let (mean, std) = mean_and_sample_std(&values);
        let oracle_mean = values.iter().sum::<f64>() / 3.0;
        let oracle_var =
            values.iter().map(|v| (v - oracle_mean).powi(2)).sum::<f64>() / 2.0;
        assert!((mean - oracle_mean).abs() < 1e-12);
        assert!((std.unwrap() - oracle_var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unknown_metric_is_an_error() {
        let runs = vec![scored("d_s", Scenario::SlaFirst, 42, 0.5)];
        assert!(matches!(
            seed_stats(&runs, "nope"),
            Err(AnalysisError::UnknownMetric(_))
        ));
    }
}
