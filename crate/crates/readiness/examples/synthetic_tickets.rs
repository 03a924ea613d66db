//! Generates a quota-stratified synthetic ticket dataset, audits it,
//! filters near-duplicates, builds 80/10/10 splits with manifests, and
//! renders the dataset card.
//!
//! ```bash
//! cargo run -p readiness --example synthetic_tickets
//! ```

use readiness::synth::{
    audit, default_bank, filter, generate, stratified_split, write_dataset_card, QuotaSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quotas = QuotaSpec::default();
    let bank = default_bank();
    let tickets = generate(4000, &quotas, 42, &bank)?;
    println!("generated {} tickets, e.g.:", tickets.len());
    println!("{}", serde_json::to_string_pretty(&tickets[0])?);

    let report = audit(&tickets, &quotas)?;
    println!();
    println!(
        "audit: n={} Q={:.4} JS={:.4} Lex={:.4} Uniq={:.4} Esc={:.4} Sch={:.4} Pol={:.4} Dup={:.4} Viol={}",
        report.n, report.q, report.js, report.lex, report.uniq, report.esc,
        report.sch, report.pol, report.dup, report.viol
    );

    let (kept, dropped) = filter(&tickets, 0.96)?;
    println!("filter kept {} / dropped {}", kept.len(), dropped.len());

    let split = stratified_split(&kept, 42, "synthetic://template-bank/v1", Some(50))?;
    println!(
        "splits: train {} / val {} / test {} (+{} frozen regression)",
        split.train.len(),
        split.val.len(),
        split.test.len(),
        split.regression.len()
    );
    println!("manifest digest: {}", split.manifest.content_digest);

    println!();
    println!(
        "{}",
        write_dataset_card("synthetic-tickets", "template", &quotas, &split.manifest, &report)
    );
    Ok(())
}
