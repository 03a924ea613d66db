//! Command-line surface tying the harness together for CI and report
//! generation. Exit codes: 0 success, 1 gate failure (gate only),
//! 2 usage/config error, 3 data error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use readiness::analysis::{filter_latest_valid, score_runs, seed_stats, task_of, ScoredRun};
use readiness::artifact::{
    content_digest, load_runs, parse_report, parse_run_log, Manifest, RunId, RunReport,
    RunTimestamp, Scenario,
};
use readiness::config::{load_config, HarnessConfig};
use readiness::export::{
    build_pareto_rows, build_seed_stats_rows, coords_to_points, export_coords, export_csv,
    export_json, export_latex, parse_coords, point_of, QualityRow, RegressionRow, TableKind,
    TableRows,
};
use readiness::gates::{compute_deltas, evaluate, select_baseline};
use readiness::metrics::{Qrels, TaskKind};
use readiness::pareto::{frontier_view, parse_objectives, Objective};
use readiness::policy::{check_policies, validate_routing_output, SchemaMode};
use readiness::runner::dataset::load_dataset;
use readiness::runner::provider::{synthetic_qrels, HttpProvider, Provider, SimProvider};
use readiness::runner::{execute_plan, RunPlan};
use readiness::scoring::{weight_ablation, AblationInput, AblationVariant, Dimension};
use readiness::synth::{
    audit, default_bank, filter as filter_tickets, generate, stratified_split, tickets_from_jsonl,
    tickets_to_jsonl, write_dataset_card, QualityReport, QuotaSpec,
};

#[derive(Parser)]
#[command(
    name = "readiness",
    version,
    about = "Deployment-readiness harness for LLM/RAG pipelines"
)]
struct Cli {
    /// Harness configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Latex,
    Coords,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Ticket,
    Retrieval,
}

impl From<TaskArg> for TaskKind {
    fn from(value: TaskArg) -> Self {
        match value {
            TaskArg::Ticket => TaskKind::Ticket,
            TaskArg::Retrieval => TaskKind::Retrieval,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute an evaluation run plan against the sim or an HTTP endpoint.
    Run {
        /// Dataset file (line-delimited JSON items).
        #[arg(long)]
        dataset: PathBuf,
        /// Dataset id embedded in the run id; defaults to the file stem.
        #[arg(long)]
        dataset_id: Option<String>,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        scenario: Scenario,
        #[arg(long)]
        top_k: Option<u32>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        sample_n: usize,
        /// Stratified sampling field (label or language).
        #[arg(long)]
        strata: Option<String>,
        #[arg(long, default_value = "sim-model")]
        model: String,
        #[arg(long, default_value = "baseline")]
        prompt_version: String,
        /// "sim" or an HTTP endpoint base URL.
        #[arg(long, default_value = "sim")]
        provider: String,
        /// Relevance judgments file for retrieval tasks.
        #[arg(long)]
        qrels: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long, default_value_t = 100)]
        delay_ms: u64,
        /// Root directory that will hold the run directory.
        #[arg(long)]
        out: PathBuf,
        /// Resume an interrupted run directory instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score the runs in an artifact directory.
    Score {
        #[arg(long)]
        runs_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scatter plus non-dominated frontier for a scenario or a
    /// coordinate fixture.
    Frontier {
        #[arg(long, conflicts_with = "coords")]
        runs_dir: Option<PathBuf>,
        /// Coordinate list file; bypasses scoring entirely.
        #[arg(long)]
        coords: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<Scenario>,
        /// Objectives as metric:min|max pairs.
        #[arg(long, default_value = "p95_latency_ms:min,score:max")]
        objectives: String,
        #[arg(long, value_enum, default_value_t = Format::Coords)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded robustness statistics over an artifact directory.
    SeedStats {
        #[arg(long)]
        runs_dir: PathBuf,
        /// Aggregate a single metric instead of the full table.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        precision: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a candidate run against a baseline; exit 1 on gate fail.
    Gate {
        /// Baseline report.json or run directory. When omitted the
        /// latest valid baseline-tagged run in --runs-dir is used.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        runs_dir: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weight-ablation report over scored runs.
    Ablate {
        #[arg(long)]
        runs_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an audited synthetic ticket dataset.
    Synth {
        #[arg(long, default_value_t = 4000)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Quota spec file (JSON); the bundled defaults apply otherwise.
        #[arg(long)]
        quotas: Option<PathBuf>,
        /// Near-duplicate token-set Jaccard threshold.
        #[arg(long, default_value_t = 0.96)]
        similarity_threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified 80/10/10 split with manifests and a frozen regression
    /// subset.
    Split {
        /// Ticket dataset (line-delimited JSON).
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        regression_n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a structured routing output document.
    Validate {
        /// Document file; use '-' for stdin.
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        mode: Option<SchemaModeArg>,
    },
    /// Render CSV/JSON/LaTeX tables from run artifacts.
    Export {
        #[arg(long)]
        runs_dir: Option<PathBuf>,
        /// pareto | seed-stats | ticket-regressions | quality-comparison
        #[arg(long)]
        table: String,
        /// Synthetic audit JSON (for quality-comparison).
        #[arg(long)]
        audit: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Latex)]
        format: Format,
        #[arg(long)]
        precision: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemaModeArg {
    V1,
    V2,
}

impl From<SchemaModeArg> for SchemaMode {
    fn from(value: SchemaModeArg) -> Self {
        match value {
            SchemaModeArg::V1 => SchemaMode::V1,
            SchemaModeArg::V2 => SchemaMode::V2,
        }
    }
}

enum CliError {
    Usage(String),
    Data(String),
    GateFail,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::GateFail => 1,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(cli.config.as_deref()) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(message) => eprintln!("error: {message}"),
                CliError::Data(message) => eprintln!("error: {message}"),
                CliError::GateFail => {}
            }
            ExitCode::from(e.code())
        }
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(data),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Loads, validity-filters, and scores a runs directory.
fn scored_runs(runs_dir: &Path, config: &HarnessConfig) -> Result<Vec<ScoredRun>, CliError> {
    let (reports, diagnostics) = load_runs(runs_dir).map_err(data)?;
    for diagnostic in &diagnostics {
        eprintln!("warning: {}: {}", diagnostic.context, diagnostic.message);
    }
    let (valid, dropped) = filter_latest_valid(reports);
    for drop in &dropped {
        eprintln!("note: dropped {}: {}", drop.run_id, drop.reason);
    }
    let (scored, unscorable) = score_runs(valid, |s| config.weights_for(s), &config.budgets);
    for diagnostic in &unscorable {
        eprintln!("warning: {}: {}", diagnostic.context, diagnostic.message);
    }
    if scored.is_empty() {
        return Err(data(format!("no scorable runs in {}", runs_dir.display())));
    }
    Ok(scored)
}

fn load_report_arg(path: &Path) -> Result<RunReport, CliError> {
    let report_path = if path.is_dir() {
        path.join("report.json")
    } else {
        path.to_path_buf()
    };
    let bytes =
        std::fs::read(&report_path).map_err(|e| data(format!("{}: {e}", report_path.display())))?;
    parse_report(&bytes).map_err(data)
}

/// Distinct record-level violation types from a run's log, if present.
fn run_log_violations(report_path: &Path) -> Vec<String> {
    let dir = if report_path.is_dir() {
        report_path.to_path_buf()
    } else {
        report_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    };
    let Ok(bytes) = std::fs::read(dir.join("run_log.jsonl")) else {
        return Vec::new();
    };
    let Ok(records) = parse_run_log(&bytes) else {
        return Vec::new();
    };
    let mut violations: Vec<String> = records
        .into_iter()
        .flat_map(|r| r.policy_violations)
        .collect();
    violations.sort();
    violations.dedup();
    violations
}

fn render_table(rows: &TableRows, format: Format, precision: usize) -> Result<String, CliError> {
    match format {
        Format::Latex => export_latex(rows, precision).map_err(data),
        Format::Csv => export_csv(rows, precision).map_err(data),
        Format::Json => export_json(rows).map_err(data),
        Format::Coords => Err(usage("coords format applies to frontier only")),
    }
}

/// Builds the regression table: every non-baseline variant in the
/// directory against the latest valid baseline of its dataset.
fn regression_rows(
    runs_dir: &Path,
    config: &HarnessConfig,
) -> Result<Vec<RegressionRow>, CliError> {
    let (reports, _) = load_runs(runs_dir).map_err(data)?;
    let datasets: std::collections::BTreeSet<String> = reports
        .iter()
        .map(|r| r.dataset_id().to_string())
        .collect();
    let mut rows = Vec::new();
    for dataset in datasets {
        let Some(baseline) = select_baseline(reports.clone(), &dataset, &config.baseline_tag)
        else {
            continue;
        };
        for candidate in reports.iter().filter(|r| {
            r.dataset_id() == dataset
                && r.prompt_version.is_some()
                && r.prompt_version.as_deref() != Some(config.baseline_tag.as_str())
        }) {
            let deltas = compute_deltas(&baseline, candidate).map_err(data)?;
            let verdict = evaluate(&deltas, candidate, &[], &config.gate).map_err(usage)?;
            rows.push(RegressionRow::from_parts(&deltas, &verdict));
        }
    }
    rows.sort_by(|a, b| (&a.dataset_id, &a.variant).cmp(&(&b.dataset_id, &b.variant)));
    Ok(rows)
}

fn dimension_list(set: &std::collections::BTreeSet<Dimension>) -> String {
    set.iter()
        .map(Dimension::to_string)
        .collect::<Vec<_>>()
        .join("+")
}

#[allow(clippy::too_many_lines)]
fn dispatch(command: Command, config: &HarnessConfig) -> Result<(), CliError> {
    match command {
        Command::Run {
            dataset,
            dataset_id,
            task,
            scenario,
            top_k,
            seed,
            sample_n,
            strata,
            model,
            prompt_version,
            provider,
            qrels,
            workers,
            delay_ms,
            out,
            resume,
        } => {
            let dataset_id = dataset_id.unwrap_or_else(|| {
                dataset
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_else(|| "dataset".to_string())
            });
            let task: TaskKind = task.into();
            let loaded = load_dataset(&dataset_id, &dataset).map_err(data)?;
            let mut plan = RunPlan::new(
                config.suite.clone(),
                dataset_id,
                task,
                scenario,
                seed,
                sample_n,
                model,
            );
            plan.top_k = top_k;
            plan.strata = strata;
            plan.prompt_version = prompt_version;
            plan.workers = workers;
            plan.delay_ms = delay_ms;

            let qrels_loaded: Option<Qrels> = match (&qrels, task) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path).map_err(data)?;
                    Some(Qrels::parse(&text).map_err(data)?)
                }
                (None, TaskKind::Retrieval) if provider == "sim" => {
                    Some(synthetic_qrels(&loaded))
                }
                _ => None,
            };

            let sim;
            let http;
            let provider_ref: &dyn Provider = if provider == "sim" {
                plan.provider_name = "sim".to_string();
                sim = SimProvider::for_dataset(task, seed, &loaded);
                &sim
            } else {
                let endpoint = if provider.starts_with("http") {
                    provider.clone()
                } else {
                    config
                        .endpoint
                        .clone()
                        .ok_or_else(|| usage("no endpoint configured for an HTTP provider"))?
                };
                plan.provider_name = "http".to_string();
                http = HttpProvider::new(&endpoint, config.api_key.clone(), 60);
                &http
            };

            let run_dir = match resume {
                Some(dir) => dir,
                None => {
                    let timestamp = RunTimestamp::now_utc();
                    plan.timestamp = Some(timestamp.clone());
                    let run_id = RunId {
                        suite: plan.suite.clone(),
                        dataset_id: plan.dataset_id.clone(),
                        model_id: plan.model.clone(),
                        scenario,
                        top_k,
                        seed,
                        timestamp,
                    };
                    out.join(run_id.render().map_err(usage)?)
                }
            };
            let outcome = execute_plan(
                &plan,
                &loaded,
                qrels_loaded.as_ref(),
                provider_ref,
                config,
                &run_dir,
            )
            .map_err(data)?;
            println!(
                "run {} complete: executed {} items, {} from checkpoint",
                outcome.run_id.render().map_err(data)?,
                outcome.executed_items,
                outcome.skipped_items
            );
            println!(
                "score {:.4} | artifacts in {}",
                outcome.summary_row.score,
                outcome.run_dir.display()
            );
            Ok(())
        }
        Command::Score {
            runs_dir,
            format,
            out,
        } => {
            let scored = scored_runs(&runs_dir, config)?;
            let rendered = match format {
                Format::Json => {
                    let rows: Vec<serde_json::Value> = scored
                        .iter()
                        .map(|run| {
                            serde_json::json!({
                                "run_id": run.report.run_id.render().unwrap_or_default(),
                                "scenario": run.score.scenario,
                                "score": run.score.value,
                                "present": run.score.present,
                                "missing": run.score.missing,
                            })
                        })
                        .collect();
                    let mut text = serde_json::to_string_pretty(&rows).map_err(data)?;
                    text.push('\n');
                    text
                }
                Format::Csv => {
                    let mut text = String::from("run_id,scenario,score,present,missing\n");
                    for run in &scored {
                        text.push_str(&format!(
                            "{},{},{:.4},{},{}\n",
                            run.report.run_id.render().unwrap_or_default(),
                            run.score.scenario,
                            run.score.value,
                            dimension_list(&run.score.present),
                            dimension_list(&run.score.missing),
                        ));
                    }
                    text
                }
                _ => return Err(usage("score supports json or csv")),
            };
            emit(out.as_deref(), &rendered)
        }
        Command::Frontier {
            runs_dir,
            coords,
            scenario,
            objectives,
            format,
            out,
        } => {
            let view = match (coords, runs_dir) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(&path).map_err(data)?;
                    let points = parse_coords(&text).map_err(data)?;
                    let points = coords_to_points(&points, "x", "y");
                    let objectives = vec![Objective::minimize("x"), Objective::maximize("y")];
                    frontier_view("coords", points, &objectives).map_err(data)?
                }
                (None, Some(runs_dir)) => {
                    let objectives = parse_objectives(&objectives).map_err(usage)?;
                    let scenario =
                        scenario.ok_or_else(|| usage("--scenario is required with --runs-dir"))?;
                    let scored = scored_runs(&runs_dir, config)?;
                    let points: Vec<_> = scored
                        .iter()
                        .filter(|run| run.report.scenario() == scenario)
                        .filter_map(|run| point_of(run, &objectives))
                        .collect();
                    if points.is_empty() {
                        return Err(data(format!("no {scenario} runs with all objectives")));
                    }
                    frontier_view(scenario.to_string(), points, &objectives).map_err(data)?
                }
                (None, None) => return Err(usage("frontier needs --runs-dir or --coords")),
            };
            let rendered = match format {
                Format::Coords => {
                    let (x, y) = (
                        view.objectives[0].metric.clone(),
                        view.objectives[1].metric.clone(),
                    );
                    format!(
                        "# scenario {}\n# scatter\n{}# frontier\n{}",
                        view.scenario,
                        export_coords(&view.scatter, &x, &y),
                        export_coords(&view.frontier, &x, &y),
                    )
                }
                Format::Json => {
                    let mut text = serde_json::to_string_pretty(&view).map_err(data)?;
                    text.push('\n');
                    text
                }
                _ => return Err(usage("frontier supports coords or json")),
            };
            emit(out.as_deref(), &rendered)
        }
        Command::SeedStats {
            runs_dir,
            metric,
            format,
            precision,
            out,
        } => {
            let scored = scored_runs(&runs_dir, config)?;
            let precision = precision.unwrap_or(config.precision.seed_stats);
            let rendered = match metric {
                Some(metric) => {
                    let stats = seed_stats(&scored, &metric).map_err(usage)?;
                    match format {
                        Format::Json => {
                            let mut text = serde_json::to_string_pretty(&stats).map_err(data)?;
                            text.push('\n');
                            text
                        }
                        Format::Csv => {
                            let mut text = String::from(
                                "dataset_id,scenario,top_k,model,provider,metric,mean,std,n_runs\n",
                            );
                            for stat in &stats {
                                text.push_str(&format!(
                                    "{},{},{},{},{},{},{:.precision$},{},{}\n",
                                    stat.group.dataset_id,
                                    stat.group.scenario,
                                    stat.group.top_k.map(|k| k.to_string()).unwrap_or_default(),
                                    stat.group.model,
                                    stat.group.provider,
                                    stat.metric,
                                    stat.mean,
                                    stat.std
                                        .map(|s| format!("{s:.precision$}"))
                                        .unwrap_or_default(),
                                    stat.n_runs,
                                ));
                            }
                            text
                        }
                        _ => return Err(usage("seed-stats --metric supports csv or json")),
                    }
                }
                None => {
                    let rows = TableRows::SeedStats(build_seed_stats_rows(&scored));
                    render_table(&rows, format, precision)?
                }
            };
            emit(out.as_deref(), &rendered)
        }
        Command::Gate {
            baseline,
            candidate,
            runs_dir,
            dataset,
            out,
        } => {
            let candidate_report = load_report_arg(&candidate)?;
            let baseline_report = match (baseline, runs_dir) {
                (Some(path), _) => load_report_arg(&path)?,
                (None, Some(runs_dir)) => {
                    let (reports, _) = load_runs(&runs_dir).map_err(data)?;
                    let dataset = dataset
                        .as_deref()
                        .unwrap_or_else(|| candidate_report.dataset_id());
                    select_baseline(reports, dataset, &config.baseline_tag).ok_or_else(|| {
                        data(format!(
                            "no valid {} run found for dataset {dataset}",
                            config.baseline_tag
                        ))
                    })?
                }
                (None, None) => return Err(usage("gate needs --baseline or --runs-dir")),
            };
            let deltas = compute_deltas(&baseline_report, &candidate_report).map_err(data)?;
            let violations = run_log_violations(&candidate);
            let verdict =
                evaluate(&deltas, &candidate_report, &violations, &config.gate).map_err(usage)?;
            let document = serde_json::json!({
                "baseline": baseline_report.run_id.render().unwrap_or_default(),
                "candidate": candidate_report.run_id.render().unwrap_or_default(),
                "deltas": deltas,
                "verdict": verdict,
            });
            let mut rendered = serde_json::to_string_pretty(&document).map_err(data)?;
            rendered.push('\n');
            emit(out.as_deref(), &rendered)?;
            if verdict.passed() {
                Ok(())
            } else {
                Err(CliError::GateFail)
            }
        }
        Command::Ablate {
            runs_dir,
            format,
            out,
        } => {
            let scored = scored_runs(&runs_dir, config)?;
            let inputs: Vec<AblationInput> = scored
                .iter()
                .map(|run| AblationInput {
                    run_id: run.report.run_id.render().unwrap_or_default(),
                    dataset_id: run.report.dataset_id().to_string(),
                    scenario: run.report.scenario(),
                    task: task_of(&run.report),
                    metrics: run.report.metrics.clone(),
                })
                .collect();
            let base = config.weights_for(inputs[0].scenario);
            let report = weight_ablation(
                &inputs,
                &base,
                &[
                    AblationVariant::Uniform,
                    AblationVariant::NoCost,
                    AblationVariant::PolicyGated,
                ],
                &config.budgets,
            )
            .map_err(data)?;
            let rendered = match format {
                Format::Json => {
                    let mut text = serde_json::to_string_pretty(&report).map_err(data)?;
                    text.push('\n');
                    text
                }
                Format::Csv => {
                    let mut text = String::from(
                        "dataset_id,scenario,n_runs,variant,top1_agree,top_overlap\n",
                    );
                    for group in &report.groups {
                        for variant in &group.variants {
                            text.push_str(&format!(
                                "{},{},{},{},{},{}/{}\n",
                                group.dataset_id,
                                group.scenario,
                                group.n_runs,
                                variant.variant,
                                if variant.top1_agree { "Y" } else { "N" },
                                variant.top_overlap,
                                variant.top_size,
                            ));
                        }
                    }
                    text
                }
                _ => return Err(usage("ablate supports json or csv")),
            };
            emit(out.as_deref(), &rendered)
        }
        Command::Synth {
            n,
            seed,
            quotas,
            similarity_threshold,
            out,
        } => {
            let quotas = match quotas {
                Some(path) => {
                    let bytes = std::fs::read(&path).map_err(data)?;
                    serde_json::from_slice::<QuotaSpec>(&bytes).map_err(data)?
                }
                None => QuotaSpec::default(),
            };
            let bank = default_bank();
            let tickets = generate(n, &quotas, seed, &bank).map_err(data)?;
            let report = audit(&tickets, &quotas).map_err(data)?;
            let (kept, dropped) = filter_tickets(&tickets, similarity_threshold).map_err(data)?;
            std::fs::create_dir_all(&out).map_err(data)?;
            let jsonl = tickets_to_jsonl(&kept).map_err(data)?;
            std::fs::write(out.join("tickets.jsonl"), &jsonl).map_err(data)?;
            let manifest = Manifest {
                source_uri: "synthetic://template-bank/v1".to_string(),
                seed,
                counts: BTreeMap::from([("all".to_string(), kept.len() as u64)]),
                content_digest: content_digest(&jsonl),
            };
            std::fs::write(out.join("manifest.json"), manifest.to_json().map_err(data)?)
                .map_err(data)?;
            let mut audit_json = serde_json::to_string_pretty(&report).map_err(data)?;
            audit_json.push('\n');
            std::fs::write(out.join("audit.json"), audit_json).map_err(data)?;
            let card =
                write_dataset_card("synthetic-tickets", "template", &quotas, &manifest, &report);
            std::fs::write(out.join("dataset_card.md"), card).map_err(data)?;
            println!(
                "generated {n} tickets, kept {} after filtering ({} dropped)",
                kept.len(),
                dropped.len()
            );
            println!(
                "audit: Q={:.4} JS={:.4} Viol={} -> {}",
                report.q,
                report.js,
                report.viol,
                out.display()
            );
            Ok(())
        }
        Command::Split {
            dataset,
            seed,
            regression_n,
            out,
        } => {
            let bytes = std::fs::read(&dataset).map_err(data)?;
            let tickets = tickets_from_jsonl(&bytes).map_err(data)?;
            let source_uri = format!("file://{}", dataset.display());
            let split =
                stratified_split(&tickets, seed, &source_uri, regression_n).map_err(data)?;
            std::fs::create_dir_all(&out).map_err(data)?;
            for (name, subset) in [
                ("train", &split.train),
                ("val", &split.val),
                ("test", &split.test),
                ("regression", &split.regression),
            ] {
                std::fs::write(
                    out.join(format!("{name}.jsonl")),
                    tickets_to_jsonl(subset).map_err(data)?,
                )
                .map_err(data)?;
            }
            std::fs::write(
                out.join("manifest.json"),
                split.manifest.to_json().map_err(data)?,
            )
            .map_err(data)?;
            std::fs::write(
                out.join("regression_manifest.json"),
                split.regression_manifest.to_json().map_err(data)?,
            )
            .map_err(data)?;
            println!(
                "split {} tickets into {}/{}/{} (+{} frozen regression) -> {}",
                tickets.len(),
                split.train.len(),
                split.val.len(),
                split.test.len(),
                split.regression.len(),
                out.display()
            );
            Ok(())
        }
        Command::Validate { file, mode } => {
            let text = if file == Path::new("-") {
                use std::io::Read;
                let mut buffer = String::new();
                std::io::stdin().read_to_string(&mut buffer).map_err(data)?;
                buffer
            } else {
                std::fs::read_to_string(&file).map_err(data)?
            };
            let mode = mode.map(SchemaMode::from).unwrap_or(config.schema_mode);
            let outcome = validate_routing_output(&text, mode);
            let violations = check_policies(&text, &config.policy_rules);
            let document = serde_json::json!({
                "valid": outcome.valid,
                "errors": outcome.errors,
                "policy_violations": violations,
            });
            println!("{}", serde_json::to_string_pretty(&document).map_err(data)?);
            if outcome.valid && violations.is_empty() {
                Ok(())
            } else {
                Err(CliError::Data("document failed validation".to_string()))
            }
        }
        Command::Export {
            runs_dir,
            table,
            audit: audit_path,
            format,
            precision,
            out,
        } => {
            let kind: TableKind = table.parse().map_err(usage)?;
            let precision = precision.unwrap_or(match kind {
                TableKind::SeedStats => config.precision.seed_stats,
                TableKind::TicketRegressions => config.precision.deltas,
                _ => config.precision.rates,
            });
            let rows = match kind {
                TableKind::Pareto => {
                    let runs_dir =
                        runs_dir.ok_or_else(|| usage("--runs-dir required for pareto"))?;
                    let scored = scored_runs(&runs_dir, config)?;
                    let objectives = [
                        Objective::minimize("cost_usd"),
                        Objective::maximize("score"),
                        Objective::minimize("p95_latency_ms"),
                    ];
                    TableRows::Pareto(build_pareto_rows(&scored, &objectives).map_err(data)?)
                }
                TableKind::SeedStats => {
                    let runs_dir =
                        runs_dir.ok_or_else(|| usage("--runs-dir required for seed-stats"))?;
                    let scored = scored_runs(&runs_dir, config)?;
                    TableRows::SeedStats(build_seed_stats_rows(&scored))
                }
                TableKind::TicketRegressions => {
                    let runs_dir = runs_dir
                        .ok_or_else(|| usage("--runs-dir required for ticket-regressions"))?;
                    TableRows::TicketRegressions(regression_rows(&runs_dir, config)?)
                }
                TableKind::QualityComparison => {
                    let path = audit_path
                        .ok_or_else(|| usage("--audit required for quality-comparison"))?;
                    let bytes = std::fs::read(&path).map_err(data)?;
                    let report: QualityReport = serde_json::from_slice(&bytes).map_err(data)?;
                    TableRows::QualityComparison(vec![QualityRow {
                        dataset: path
                            .file_stem()
                            .map(|s| s.to_string_lossy().to_string())
                            .unwrap_or_else(|| "synthetic".to_string()),
                        report,
                    }])
                }
            };
            let rendered = render_table(&rows, format, precision)?;
            emit(out.as_deref(), &rendered)
        }
    }
}
