//! Computes latency-utility frontiers from the bundled per-scenario
//! scatter fixtures (27 runs each) and prints the frontier polylines.
//!
//! ```bash
//! cargo run -p readiness --example frontier_from_figures
//! ```

use readiness::export::{coords_to_points, export_coords, parse_coords};
use readiness::pareto::{frontier, Objective};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let objectives = [Objective::minimize("p95_s"), Objective::maximize("score")];
    for dataset in ["scifact", "fiqa"] {
        println!("== {dataset} ==");
        for scenario in ["cost-first", "risk-first", "sla-first"] {
            let path = format!(
                "{}/fixtures/figures/{dataset}_{scenario}.coords",
                env!("CARGO_MANIFEST_DIR")
            );
            let coords = parse_coords(&std::fs::read_to_string(&path)?)?;
            let points = coords_to_points(&coords, "p95_s", "score");
            let front = frontier(&points, &objectives)?;
            println!(
                "{scenario:<11} {} runs -> {}-point frontier: {}",
                points.len(),
                front.len(),
                export_coords(&front, "p95_s", "score")
                    .lines()
                    .collect::<Vec<_>>()
                    .join(" ")
            );
        }
    }
    Ok(())
}
