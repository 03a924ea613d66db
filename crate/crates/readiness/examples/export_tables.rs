//! Renders the regression-gate and seed-stats tables from the bundled
//! fixture runs in LaTeX and CSV.
//!
//! ```bash
//! cargo run -p readiness --example export_tables
//! ```

use std::path::Path;

use readiness::analysis::{filter_latest_valid, score_runs};
use readiness::artifact::load_runs;
use readiness::config::HarnessConfig;
use readiness::export::{
    build_seed_stats_rows, export_csv, export_latex, RegressionRow, TableRows,
};
use readiness::gates::{compute_deltas, evaluate, select_baseline};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ticket_runs");
    let config = HarnessConfig::default();
    let (reports, _) = load_runs(Path::new(fixtures))?;

    let mut rows = Vec::new();
    for dataset in ["cs_tickets", "it_tickets"] {
        let baseline =
            select_baseline(reports.clone(), dataset, "baseline").ok_or("missing baseline")?;
        for candidate in reports.iter().filter(|r| {
            r.dataset_id() == dataset && r.prompt_version.as_deref() != Some("baseline")
        }) {
            let deltas = compute_deltas(&baseline, candidate)?;
            let verdict = evaluate(&deltas, candidate, &[], &config.gate)?;
            rows.push(RegressionRow::from_parts(&deltas, &verdict));
        }
    }
    let table = TableRows::TicketRegressions(rows);
    println!("-- ticket regressions (LaTeX) --");
    println!("{}", export_latex(&table, 2)?);
    println!("-- ticket regressions (CSV) --");
    println!("{}", export_csv(&table, 2)?);

    let (valid, _) = filter_latest_valid(reports);
    let (scored, _) = score_runs(valid, |s| config.weights_for(s), &config.budgets);
    let seed_table = TableRows::SeedStats(build_seed_stats_rows(&scored));
    println!("-- seed stats (LaTeX) --");
    println!("{}", export_latex(&seed_table, 2)?);
    Ok(())
}
