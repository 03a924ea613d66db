//! Table and figure exporters: CSV, JSON, LaTeX, and plain coordinate
//! lists. Every exporter is deterministic; re-exporting unchanged inputs
//! is byte-identical.

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{metric_value, AnalysisKey, GroupKey, ScoredRun};
use crate::artifact::Scenario;
use crate::gates::{DeltaReport, GateVerdict};
use crate::pareto::{frontier, FrontierPoint, Objective, ParetoError};
use crate::synth::QualityReport;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unknown table kind: {0}")]
    UnknownKind(String),
    #[error("nothing to export: empty row set")]
    EmptyRows,
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Pareto,
    SeedStats,
    TicketRegressions,
    QualityComparison,
}

impl std::str::FromStr for TableKind {
    type Err = ExportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pareto" => Ok(TableKind::Pareto),
            "seed-stats" => Ok(TableKind::SeedStats),
            "ticket-regressions" => Ok(TableKind::TicketRegressions),
            "quality-comparison" => Ok(TableKind::QualityComparison),
            other => Err(ExportError::UnknownKind(other.to_string())),
        }
    }
}

// ---------------------------------------------------------------------------
// Row models
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ParetoRow {
    pub scenario: String,
    pub model: String,
    pub top_k: Option<u32>,
    pub seed: u64,
    pub score: f64,
    pub faithfulness: Option<f64>,
    pub hit_k: Option<f64>,
    pub cost_usd: Option<f64>,
    pub p95_latency_ms: f64,
    /// Which grouping the frontier flag was computed within.
    pub frontier_group: String,
    pub on_frontier: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedStatsRow {
    pub dataset_id: String,
    pub model: String,
    pub scenario: String,
    pub top_k: Option<u32>,
    pub runs: usize,
    pub faithfulness: Option<(f64, Option<f64>)>,
    pub hit_k: Option<(f64, Option<f64>)>,
    pub p95_latency_ms: Option<(f64, Option<f64>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionRow {
    pub dataset_id: String,
    pub variant: String,
    pub d_workflow: Option<f64>,
    pub d_policy: Option<f64>,
    pub d_routing: Option<f64>,
    pub d_p95_ms: f64,
    pub gate: String,
}

impl RegressionRow {
    pub fn from_parts(deltas: &DeltaReport, verdict: &GateVerdict) -> Self {
        Self {
            dataset_id: deltas.dataset_id.clone(),
            variant: deltas.variant.clone(),
            d_workflow: deltas.d_workflow,
            d_policy: deltas.d_policy,
            d_routing: deltas.d_routing,
            d_p95_ms: deltas.d_p95_ms,
            gate: if verdict.passed() { "pass" } else { "fail" }.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QualityRow {
    pub dataset: String,
    #[serde(flatten)]
    pub report: QualityReport,
}

#[derive(Debug, Clone)]
pub enum TableRows {
    Pareto(Vec<ParetoRow>),
    SeedStats(Vec<SeedStatsRow>),
    TicketRegressions(Vec<RegressionRow>),
    QualityComparison(Vec<QualityRow>),
}

impl TableRows {
    fn is_empty(&self) -> bool {
        match self {
            TableRows::Pareto(rows) => rows.is_empty(),
            TableRows::SeedStats(rows) => rows.is_empty(),
            TableRows::TicketRegressions(rows) => rows.is_empty(),
            TableRows::QualityComparison(rows) => rows.is_empty(),
        }
    }

    pub fn kind(&self) -> TableKind {
        match self {
            TableRows::Pareto(_) => TableKind::Pareto,
            TableRows::SeedStats(_) => TableKind::SeedStats,
            TableRows::TicketRegressions(_) => TableKind::TicketRegressions,
            TableRows::QualityComparison(_) => TableKind::QualityComparison,
        }
    }
}

// ---------------------------------------------------------------------------
// Row builders
// ---------------------------------------------------------------------------

/// Builds the per-run view with frontier membership computed within each
/// (scenario, model) group, labeled explicitly to keep dominance checks
/// unambiguous.
pub fn build_pareto_rows(
    runs: &[ScoredRun],
    objectives: &[Objective],
) -> Result<Vec<ParetoRow>, ExportError> {
    use std::collections::{BTreeMap, BTreeSet};
    let mut groups: BTreeMap<(Scenario, String), Vec<&ScoredRun>> = BTreeMap::new();
    for run in runs {
        groups
            .entry((run.report.scenario(), run.report.model.clone()))
            .or_default()
            .push(run);
    }
    let mut rows = Vec::new();
    for ((scenario, model), members) in groups {
        let points: Vec<FrontierPoint> = members
            .iter()
            .filter_map(|run| point_of(run, objectives))
            .collect();
        let front: BTreeSet<String> = frontier(&points, objectives)?
            .into_iter()
            .map(|p| p.run_id)
            .collect();
        let group_label = format!("{scenario}/{model}");
        for run in members {
            let run_id = run.report.run_id.render().unwrap_or_default();
            rows.push(ParetoRow {
                scenario: scenario.to_string(),
                model: model.clone(),
                top_k: run.report.top_k(),
                seed: run.report.seed(),
                score: run.score.value,
                faithfulness: run.report.metrics.faithfulness,
                hit_k: run.report.metrics.retrieval_hit_k,
                cost_usd: run.report.metrics.cost_usd,
                p95_latency_ms: run.report.latency_p95_ms,
                frontier_group: group_label.clone(),
                on_frontier: front.contains(&run_id),
            });
        }
    }
    rows.sort_by(|a, b| {
        (&a.scenario, &a.model, a.top_k, a.seed).cmp(&(&b.scenario, &b.model, b.top_k, b.seed))
    });
    Ok(rows)
}

/// Resolves a scored run into objective space; runs missing an objective
/// metric are skipped by the caller.
pub fn point_of(run: &ScoredRun, objectives: &[Objective]) -> Option<FrontierPoint> {
    let mut coordinates = std::collections::BTreeMap::new();
    for objective in objectives {
        coordinates.insert(objective.metric.clone(), metric_value(run, &objective.metric)?);
    }
    Some(FrontierPoint::new(
        run.report.run_id.render().unwrap_or_default(),
        coordinates,
    ))
}

/// Aggregates the seed-stats table: one row per (dataset, model,
/// scenario, k) group with mean +- sample std for faithfulness, hit@k,
/// and p95.
pub fn build_seed_stats_rows(runs: &[ScoredRun]) -> Vec<SeedStatsRow> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<GroupKey, Vec<&ScoredRun>> = BTreeMap::new();
    for run in runs {
        groups
            .entry(AnalysisKey::of(&run.report).group())
            .or_default()
            .push(run);
    }
    groups
        .into_iter()
        .map(|(key, members)| {
            let stat = |metric: &str| -> Option<(f64, Option<f64>)> {
                let values: Vec<f64> = members
                    .iter()
                    .filter_map(|run| metric_value(run, metric))
                    .collect();
                (!values.is_empty()).then(|| crate::analysis::mean_and_sample_std(&values))
            };
            SeedStatsRow {
                dataset_id: key.dataset_id,
                model: key.model,
                scenario: key.scenario.to_string(),
                top_k: key.top_k,
                runs: members.len(),
                faithfulness: stat("faithfulness"),
                hit_k: stat("retrieval_hit_k"),
                p95_latency_ms: stat("p95_latency_ms"),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

fn fmt_opt(value: Option<f64>, precision: usize) -> String {
    value.map(|v| format!("{v:.precision$}")).unwrap_or_default()
}

fn fmt_pm(stat: Option<(f64, Option<f64>)>, precision: usize, latex: bool) -> String {
    match stat {
        None => String::new(),
        Some((mean, std)) => {
            let sep = if latex { " $\\pm$ " } else { "±" };
            match std {
                Some(std) => format!("{mean:.precision$}{sep}{std:.precision$}"),
                None => format!("{mean:.precision$}"),
            }
        }
    }
}

fn fmt_pm_ms(stat: Option<(f64, Option<f64>)>, latex: bool) -> String {
    match stat {
        None => String::new(),
        Some((mean, std)) => {
            let sep = if latex { " $\\pm$ " } else { "±" };
            match std {
                Some(std) => format!("{mean:.0}{sep}{std:.0}"),
                None => format!("{mean:.0}"),
            }
        }
    }
}

fn opt_k(top_k: Option<u32>) -> String {
    top_k.map(|k| k.to_string()).unwrap_or_default()
}

fn tex(text: &str) -> String {
    text.replace('_', "\\_")
}

/// Renders one table kind as a LaTeX tabular with the published column
/// order. Numbers are formatted at the requested precision.
pub fn export_latex(rows: &TableRows, precision: usize) -> Result<String, ExportError> {
    if rows.is_empty() {
        return Err(ExportError::EmptyRows);
    }
    let mut out = String::new();
    match rows {
        TableRows::Pareto(rows) => {
            out.push_str("\\begin{tabular}{l l r r r r r r r}\n\\toprule\n");
            out.push_str(
                "Scenario & Model & k & Seed & Score & Faithfulness & Hit@k & Cost (\\$) & p95 latency (ms) \\\\\n\\midrule\n",
            );
            for row in rows {
                out.push_str(&format!(
                    "{} & {} & {} & {} & {:.precision$} & {} & {} & {} & {:.0} \\\\\n",
                    tex(&row.scenario),
                    tex(&row.model),
                    opt_k(row.top_k),
                    row.seed,
                    row.score,
                    fmt_opt(row.faithfulness, precision),
                    fmt_opt(row.hit_k, precision),
                    row.cost_usd.map(|c| format!("{c:.4}")).unwrap_or_default(),
                    row.p95_latency_ms,
                ));
            }
        }
        TableRows::SeedStats(rows) => {
            out.push_str("\\begin{tabular}{l l l r r r r r}\n\\toprule\n");
            out.push_str(
                "Dataset & Model & Scenario & k & Runs & Faith. & Hit@k & p95 \\\\\n\\midrule\n",
            );
            for row in rows {
                out.push_str(&format!(
                    "{} & {} & {} & {} & {} & {} & {} & {} \\\\\n",
                    tex(&row.dataset_id),
                    tex(&row.model),
                    tex(&row.scenario),
                    opt_k(row.top_k),
                    row.runs,
                    fmt_pm(row.faithfulness, precision, true),
                    fmt_pm(row.hit_k, precision, true),
                    fmt_pm_ms(row.p95_latency_ms, true),
                ));
            }
        }
        TableRows::TicketRegressions(rows) => {
            out.push_str("\\begin{tabular}{l l r r r r l}\n\\toprule\n");
            out.push_str(
                "Dataset & Variant & $\\Delta$Workflow & $\\Delta$Policy & $\\Delta$Routing & $\\Delta$p95 (ms) & Gate \\\\\n\\midrule\n",
            );
            for row in rows {
                out.push_str(&format!(
                    "{} & {} & {} & {} & {} & {:.0} & {} \\\\\n",
                    tex(&row.dataset_id),
                    tex(&row.variant),
                    fmt_opt(row.d_workflow, precision),
                    fmt_opt(row.d_policy, precision),
                    fmt_opt(row.d_routing, precision),
                    row.d_p95_ms,
                    row.gate,
                ));
            }
        }
        TableRows::QualityComparison(rows) => {
            out.push_str("\\begin{tabular}{lrrrrrrrrrr}\n\\toprule\n");
            out.push_str(
                "Dataset & $n$ & Q & JS & Lex & Uniq & Esc & Sch & Pol & Dup & Viol \\\\\n\\midrule\n",
            );
            for row in rows {
                let r = &row.report;
                out.push_str(&format!(
                    "{} & {} & {:.4} & {:.4} & {:.4} & {:.4} & {:.4} & {:.4} & {:.4} & {:.4} & {} \\\\\n",
                    tex(&row.dataset), r.n, r.q, r.js, r.lex, r.uniq, r.esc, r.sch, r.pol, r.dup, r.viol,
                ));
            }
        }
    }
    out.push_str("\\bottomrule\n\\end{tabular}\n");
    Ok(out)
}

/// CSV rendering with one header row; empty optionals stay empty fields.
pub fn export_csv(rows: &TableRows, precision: usize) -> Result<String, ExportError> {
    if rows.is_empty() {
        return Err(ExportError::EmptyRows);
    }
    let mut out = String::new();
    match rows {
        TableRows::Pareto(rows) => {
            out.push_str(
                "scenario,model,top_k,seed,score,faithfulness,hit_k,cost_usd,p95_latency_ms,frontier_group,on_frontier\n",
            );
            for row in rows {
                out.push_str(&format!(
                    "{},{},{},{},{:.precision$},{},{},{},{:.0},{},{}\n",
                    row.scenario,
                    row.model,
                    opt_k(row.top_k),
                    row.seed,
                    row.score,
                    fmt_opt(row.faithfulness, precision),
                    fmt_opt(row.hit_k, precision),
                    row.cost_usd.map(|c| format!("{c:.4}")).unwrap_or_default(),
                    row.p95_latency_ms,
                    row.frontier_group,
                    row.on_frontier,
                ));
            }
        }
        TableRows::SeedStats(rows) => {
            out.push_str("dataset_id,model,scenario,top_k,runs,faithfulness,hit_k,p95_latency_ms\n");
            for row in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    row.dataset_id,
                    row.model,
                    row.scenario,
                    opt_k(row.top_k),
                    row.runs,
                    fmt_pm(row.faithfulness, precision, false),
                    fmt_pm(row.hit_k, precision, false),
                    fmt_pm_ms(row.p95_latency_ms, false),
                ));
            }
        }
        TableRows::TicketRegressions(rows) => {
            out.push_str("dataset_id,variant,d_workflow,d_policy,d_routing,d_p95_ms,gate\n");
            for row in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{:.0},{}\n",
                    row.dataset_id,
                    row.variant,
                    fmt_opt(row.d_workflow, precision),
                    fmt_opt(row.d_policy, precision),
                    fmt_opt(row.d_routing, precision),
                    row.d_p95_ms,
                    row.gate,
                ));
            }
        }
        TableRows::QualityComparison(rows) => {
            out.push_str("dataset,n,q,js,lex,uniq,esc,sch,pol,dup,viol\n");
            for row in rows {
                let r = &row.report;
                out.push_str(&format!(
                    "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{}\n",
                    row.dataset, r.n, r.q, r.js, r.lex, r.uniq, r.esc, r.sch, r.pol, r.dup, r.viol,
                ));
            }
        }
    }
    Ok(out)
}

pub fn export_json(rows: &TableRows) -> Result<String, ExportError> {
    if rows.is_empty() {
        return Err(ExportError::EmptyRows);
    }
    let value = match rows {
        TableRows::Pareto(rows) => serde_json::to_value(rows)?,
        TableRows::SeedStats(rows) => serde_json::to_value(rows)?,
        TableRows::TicketRegressions(rows) => serde_json::to_value(rows)?,
        TableRows::QualityComparison(rows) => serde_json::to_value(rows)?,
    };
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

// ---------------------------------------------------------------------------
// Coordinate lists
// ---------------------------------------------------------------------------

/// `(x,y)` coordinate lines for a point sequence, in the figure
/// coordinate format.
pub fn export_coords(points: &[FrontierPoint], x_metric: &str, y_metric: &str) -> String {
    let mut out = String::new();
    for point in points {
        if let (Some(x), Some(y)) = (
            point.coordinates.get(x_metric),
            point.coordinates.get(y_metric),
        ) {
            out.push_str(&format!("({x:.3},{y:.3})\n"));
        }
    }
    out
}

/// Parses coordinate fixtures: `(x,y)` tokens (whitespace- or
/// newline-separated) or bare `x,y` lines; `#` starts a line comment.
pub fn parse_coords(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut points = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for raw in line.split_whitespace() {
            let token = raw.trim().trim_start_matches('(').trim_end_matches(')');
            if token.is_empty() {
                continue;
            }
            let (x, y) = token
                .split_once(',')
                .ok_or_else(|| format!("bad coordinate token {raw:?}"))?;
            let x: f64 = x.trim().parse().map_err(|_| format!("bad x in {raw:?}"))?;
            let y: f64 = y.trim().parse().map_err(|_| format!("bad y in {raw:?}"))?;
            points.push((x, y));
        }
    }
    if points.is_empty() {
        return Err("no coordinates found".to_string());
    }
    Ok(points)
}

/// Wraps raw (x, y) pairs as frontier points with positional run ids.
pub fn coords_to_points(coords: &[(f64, f64)], x_metric: &str, y_metric: &str) -> Vec<FrontierPoint> {
    coords
        .iter()
        .enumerate()
        .map(|(i, (x, y))| {
            FrontierPoint::new(
                format!("point{i:03}"),
                std::collections::BTreeMap::from([
                    (x_metric.to_string(), *x),
                    (y_metric.to_string(), *y),
                ]),
            )
        })
        .collect()
}
