//! Template-based multilingual synthetic ticket generation under
//! stratified quotas, with filtering, quality audits, stratified splits,
//! manifests, and dataset cards.
//!
//! Labels (queue, priority, escalation) are fixed by the generating
//! template, never sampled independently of content. LLM-style
//! augmentation plugs in through [`CandidateSource`]; candidates flow
//! through the same filter and audit as template output.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::{content_digest, Manifest};
use crate::seeded::{largest_remainder, salted_seed, shuffle, SplitMix64};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid quotas: {0}")]
    InvalidQuotas(String),
    #[error("template bank does not cover quota cell {0}")]
    UncoveredCell(String),
    #[error("invalid similarity threshold {0}; expected [0,1]")]
    InvalidThreshold(f64),
    #[error("class {label:?} has {count} items; a stratified split needs at least 3")]
    ClassTooSmall { label: String, count: usize },
    #[error("empty dataset")]
    Empty,
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Pt,
    Es,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::En, Language::Pt, Language::Es];

    pub fn as_str(&self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Pt => "pt",
            Language::Es => "es",
        }
    }
}

/// A generated support ticket with rule-fixed labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTicket {
    pub ticket_id: String,
    pub language: Language,
    pub channel: String,
    pub priority: String,
    pub queue: String,
    pub summary: String,
    pub description: String,
    pub requester_type: String,
    pub product_area: String,
    #[serde(default)]
    pub policy_flags: Vec<String>,
    pub should_escalate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escalation_reason: Option<String>,
}

/// Target distributions per quota dimension plus the tolerance used for
/// distribution-violation counting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotaSpec {
    pub queue: BTreeMap<String, f64>,
    pub language: BTreeMap<String, f64>,
    pub priority: BTreeMap<String, f64>,
    /// Keys "true"/"false".
    pub escalation: BTreeMap<String, f64>,
    pub tolerance: f64,
}

impl QuotaSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, dist) in self.dimensions() {
            if dist.is_empty() {
                return Err(SynthError::InvalidQuotas(format!("{name} is empty")));
            }
            let sum: f64 = dist.values().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(SynthError::InvalidQuotas(format!(
                    "{name} sums to {sum}, expected 1"
                )));
            }
            if dist.values().any(|p| *p < 0.0) {
                return Err(SynthError::InvalidQuotas(format!(
                    "{name} has a negative share"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.tolerance) {
            return Err(SynthError::InvalidQuotas(format!(
                "tolerance {} outside [0,1]",
                self.tolerance
            )));
        }
        Ok(())
    }

    pub fn dimensions(&self) -> [(&'static str, &BTreeMap<String, f64>); 4] {
        [
            ("queue", &self.queue),
            ("language", &self.language),
            ("priority", &self.priority),
            ("escalation", &self.escalation),
        ]
    }
}

impl Default for QuotaSpec {
    fn default() -> Self {
        let share = |pairs: &[(&str, f64)]| -> BTreeMap<String, f64> {
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
        };
        Self {
            queue: share(&[
                ("account_support", 0.25),
                ("billing", 0.25),
                ("product_support", 0.25),
                ("technical_support", 0.25),
            ]),
            language: share(&[("en", 0.4), ("pt", 0.3), ("es", 0.3)]),
            priority: share(&[("low", 0.3), ("medium", 0.5), ("high", 0.2)]),
            escalation: share(&[("false", 0.8), ("true", 0.2)]),
            tolerance: 0.02,
        }
    }
}

/// Generation quality metrics in the shape of the published comparison
/// table. `q` is defined as `1 - js`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub n: usize,
    pub q: f64,
    pub js: f64,
    pub lex: f64,
    pub uniq: f64,
    pub esc: f64,
    pub sch: f64,
    pub pol: f64,
    pub dup: f64,
    pub viol: u64,
}

// ---------------------------------------------------------------------------
// Template bank
// ---------------------------------------------------------------------------

/// Per-language summary/description patterns with `{slot}` placeholders.
#[derive(Debug, Clone)]
pub struct LocalizedPattern {
    pub summary: String,
    pub description: String,
}

/// One generating template. The queue, priority, and escalation labels
/// of every ticket it emits are its own, by construction.
#[derive(Debug, Clone)]
pub struct TicketTemplate {
    pub queue: String,
    pub priority: String,
    pub should_escalate: bool,
    pub escalation_reason: Option<String>,
    pub text: BTreeMap<Language, LocalizedPattern>,
}

#[derive(Debug, Clone)]
pub struct TemplateBank {
    pub templates: Vec<TicketTemplate>,
    pub channels: Vec<String>,
    pub product_areas: Vec<String>,
    pub requester_types: Vec<String>,
}

impl TemplateBank {
    fn matching(&self, queue: &str, priority: &str, escalate: bool) -> Vec<&TicketTemplate> {
        self.templates
            .iter()
            .filter(|t| t.queue == queue && t.priority == priority && t.should_escalate == escalate)
            .collect()
    }
}

/// The bank shipped with the harness: four queues, three priorities,
/// both escalation branches, en/pt/es text.
pub fn default_bank() -> TemplateBank {
    let mut templates = Vec::new();
    let queue_specs = [
        (
            "billing",
            "billing_dispute",
            [
                (
                    "duplicate charge on the {product} plan via {channel}",
                    "cobranca duplicada no plano {product} recebida por {channel}",
                    "cargo duplicado en el plan {product} recibido por {channel}",
                ),
                (
                    "invoice total for {product} looks wrong ({channel})",
                    "o total da fatura de {product} parece errado ({channel})",
                    "el total de la factura de {product} parece incorrecto ({channel})",
                ),
                (
                    "refund for {product} never arrived ({channel})",
                    "o reembolso de {product} nunca chegou ({channel})",
                    "el reembolso de {product} nunca llego ({channel})",
                ),
            ],
        ),
        (
            "technical_support",
            "data_loss",
            [
                (
                    "{product} sync keeps failing after the last update ({channel})",
                    "a sincronizacao de {product} continua falhando apos a atualizacao ({channel})",
                    "la sincronizacion de {product} sigue fallando tras la actualizacion ({channel})",
                ),
                (
                    "{product} crashes when exporting reports ({channel})",
                    "{product} trava ao exportar relatorios ({channel})",
                    "{product} se bloquea al exportar informes ({channel})",
                ),
                (
                    "timeouts from the {product} service since this morning ({channel})",
                    "timeouts no servico {product} desde esta manha ({channel})",
                    "timeouts en el servicio {product} desde esta manana ({channel})",
                ),
            ],
        ),
        (
            "account_support",
            "security_risk",
            [
                (
                    "cannot sign in to {product} after a password reset ({channel})",
                    "nao consigo entrar em {product} apos redefinir a senha ({channel})",
                    "no puedo iniciar sesion en {product} tras restablecer la contrasena ({channel})",
                ),
                (
                    "two-factor code for {product} never arrives ({channel})",
                    "o codigo de dois fatores de {product} nunca chega ({channel})",
                    "el codigo de dos factores de {product} nunca llega ({channel})",
                ),
                (
                    "account locked out of {product} without notice ({channel})",
                    "conta bloqueada em {product} sem aviso ({channel})",
                    "cuenta bloqueada en {product} sin aviso ({channel})",
                ),
            ],
        ),
        (
            "product_support",
            "customer_blocked",
            [
                (
                    "how to configure {product} exports ({channel})",
                    "como configurar as exportacoes de {product} ({channel})",
                    "como configurar las exportaciones de {product} ({channel})",
                ),
                (
                    "missing documentation for the {product} integration ({channel})",
                    "falta documentacao para a integracao {product} ({channel})",
                    "falta documentacion para la integracion {product} ({channel})",
                ),
                (
                    "feature question about {product} roles ({channel})",
                    "duvida sobre papeis em {product} ({channel})",
                    "pregunta sobre roles en {product} ({channel})",
                ),
            ],
        ),
    ];
    let descriptions = [
        (
            "The requester reports: {summary}. The issue persists after a restart. Impact: {impact}. Reference {reference}.",
            "O solicitante informa: {summary}. O problema persiste apos reiniciar. Impacto: {impact}. Referencia {reference}.",
            "El solicitante informa: {summary}. El problema persiste tras reiniciar. Impacto: {impact}. Referencia {reference}.",
        ),
        (
            "Reported via {channel}: {summary}. First seen this week and reproducible. Impact: {impact}. Reference {reference}.",
            "Relatado via {channel}: {summary}. Visto pela primeira vez nesta semana e reproduzivel. Impacto: {impact}. Referencia {reference}.",
            "Reportado via {channel}: {summary}. Visto por primera vez esta semana y reproducible. Impacto: {impact}. Referencia {reference}.",
        ),
    ];
    for (queue, reason, summaries) in queue_specs {
        for priority in ["low", "medium", "high"] {
            for escalate in [false, true] {
                for (idx, (summary_en, summary_pt, summary_es)) in
                    summaries.iter().enumerate()
                {
                    let (desc_en, desc_pt, desc_es) = descriptions[idx % descriptions.len()];
                    let mut text = BTreeMap::new();
                    text.insert(
                        Language::En,
                        LocalizedPattern {
                            summary: summary_en.to_string(),
                            description: desc_en.to_string(),
                        },
                    );
                    text.insert(
                        Language::Pt,
                        LocalizedPattern {
                            summary: summary_pt.to_string(),
                            description: desc_pt.to_string(),
                        },
                    );
                    text.insert(
                        Language::Es,
                        LocalizedPattern {
                            summary: summary_es.to_string(),
                            description: desc_es.to_string(),
                        },
                    );
                    templates.push(TicketTemplate {
                        queue: queue.to_string(),
                        priority: priority.to_string(),
                        should_escalate: escalate,
                        escalation_reason: escalate.then(|| reason.to_string()),
                        text,
                    });
                }
            }
        }
    }
    TemplateBank {
        templates,
        channels: ["email", "chat", "phone", "web-form"]
            .map(str::to_string)
            .to_vec(),
        product_areas: [
            "integrations",
            "dashboard",
            "mobile-app",
            "billing-portal",
            "sync-engine",
            "api",
        ]
        .map(str::to_string)
        .to_vec(),
        requester_types: ["user", "admin", "partner"].map(str::to_string).to_vec(),
    }
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

fn parse_language(s: &str) -> Option<Language> {
    match s {
        "en" => Some(Language::En),
        "pt" => Some(Language::Pt),
        "es" => Some(Language::Es),
        _ => None,
    }
}

/// Deterministic template generation under stratified quotas. Counts are
/// allocated hierarchically (queue, then language, priority, escalation)
/// with largest-remainder rounding at every level, so exactly divisible
/// quotas are met exactly.
pub fn generate(
    n: usize,
    quotas: &QuotaSpec,
    seed: u64,
    bank: &TemplateBank,
) -> Result<Vec<SyntheticTicket>, SynthError> {
    quotas.validate()?;
    let impacts = [
        "delays weekly reporting",
        "blocks a customer-facing workflow",
        "slows down one internal team",
        "no workaround available yet",
    ];
    let alloc = |total: u64, dist: &BTreeMap<String, f64>| -> Vec<(String, u64)> {
        let keys: Vec<&String> = dist.keys().collect();
        let shares: Vec<f64> = keys.iter().map(|k| dist[*k]).collect();
        largest_remainder(total, &shares)
            .into_iter()
            .zip(keys)
            .map(|(count, key)| (key.clone(), count))
            .collect()
    };

    let mut tickets = Vec::with_capacity(n);
    let mut counter = 0usize;
    for (queue, queue_count) in alloc(n as u64, &quotas.queue) {
        for (lang_name, lang_count) in alloc(queue_count, &quotas.language) {
            let language = parse_language(&lang_name).ok_or_else(|| {
                SynthError::InvalidQuotas(format!("unknown language {lang_name:?}"))
            })?;
            for (priority, priority_count) in alloc(lang_count, &quotas.priority) {
                for (esc_name, esc_count) in alloc(priority_count, &quotas.escalation) {
                    if esc_count == 0 {
                        continue;
                    }
                    let escalate = match esc_name.as_str() {
                        "true" => true,
                        "false" => false,
                        other => {
                            return Err(SynthError::InvalidQuotas(format!(
                                "escalation key {other:?}, expected true/false"
                            )))
                        }
                    };
                    let templates = bank.matching(&queue, &priority, escalate);
                    if templates.is_empty() {
                        return Err(SynthError::UncoveredCell(format!(
                            "({queue}, {lang_name}, {priority}, escalate={escalate})"
                        )));
                    }
                    let cell_label =
                        format!("{queue}/{lang_name}/{priority}/{escalate}");
                    let mut rng = SplitMix64::new(salted_seed(seed, &cell_label));
                    for i in 0..esc_count {
                        let template = templates[(i as usize) % templates.len()];
                        let pattern = template.text.get(&language).ok_or_else(|| {
                            SynthError::UncoveredCell(format!(
                                "template for {cell_label} lacks language {lang_name}"
                            ))
                        })?;
                        let product = &bank.product_areas
                            [rng.next_below(bank.product_areas.len() as u64) as usize];
                        let channel =
                            &bank.channels[rng.next_below(bank.channels.len() as u64) as usize];
                        let requester = &bank.requester_types
                            [rng.next_below(bank.requester_types.len() as u64) as usize];
                        let impact = impacts[rng.next_below(impacts.len() as u64) as usize];
                        counter += 1;
                        let reference = format!("REF-{seed}-{counter:05}");
                        let summary = pattern
                            .summary
                            .replace("{product}", product)
                            .replace("{channel}", channel);
                        let description = pattern
                            .description
                            .replace("{summary}", &summary)
                            .replace("{channel}", channel)
                            .replace("{impact}", impact)
                            .replace("{reference}", &reference);
                        tickets.push(SyntheticTicket {
                            ticket_id: format!("syntpl_{seed}_{counter:05}"),
                            language,
                            channel: channel.clone(),
                            priority: template.priority.clone(),
                            queue: template.queue.clone(),
                            summary,
                            description,
                            requester_type: requester.clone(),
                            product_area: product.clone(),
                            policy_flags: vec![],
                            should_escalate: template.should_escalate,
                            escalation_reason: template.escalation_reason.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(tickets)
}

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FilterReason {
    SchemaInvalid(String),
    PolicyFlag,
    ExactDuplicate,
    NearDuplicate { similarity: f64 },
}

/// Kept tickets plus the dropped ones with their reasons.
pub type FilterOutcome = (Vec<SyntheticTicket>, Vec<(SyntheticTicket, FilterReason)>);


fn schema_error(ticket: &SyntheticTicket) -> Option<String> {
    if ticket.ticket_id.is_empty() {
        return Some("empty ticket_id".to_string());
    }
    if ticket.summary.trim().is_empty() || ticket.description.trim().is_empty() {
        return Some("empty summary or description".to_string());
    }
    if ticket.queue.is_empty() || ticket.priority.is_empty() {
        return Some("missing labels".to_string());
    }
    if ticket.should_escalate != ticket.escalation_reason.is_some() {
        return Some("escalation_reason must be present iff should_escalate".to_string());
    }
    None
}

fn normalized_text(ticket: &SyntheticTicket) -> String {
    format!("{} {}", ticket.summary, ticket.description)
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn token_set(text: &str) -> BTreeSet<u64> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(|t| crate::seeded::fnv1a64(t.as_bytes()))
        .collect()
}

fn jaccard(a: &BTreeSet<u64>, b: &BTreeSet<u64>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let intersection = a.intersection(b).count();
    let union = a.len() + b.len() - intersection;
    intersection as f64 / union as f64
}

/// Drops schema-invalid tickets, policy-flagged tickets, exact
/// duplicates (normalized summary+description), and near-duplicates at
/// or above the token-set Jaccard threshold against an earlier kept
/// ticket. First seen wins; re-filtering the kept set drops nothing.
pub fn filter(
    tickets: &[SyntheticTicket],
    similarity_threshold: f64,
) -> Result<FilterOutcome, SynthError> {
    if !(0.0..=1.0).contains(&similarity_threshold) {
        return Err(SynthError::InvalidThreshold(similarity_threshold));
    }
    let mut kept: Vec<SyntheticTicket> = Vec::new();
    let mut kept_sets: Vec<BTreeSet<u64>> = Vec::new();
    let mut seen_text: BTreeSet<String> = BTreeSet::new();
    let mut dropped = Vec::new();
    'next: for ticket in tickets {
        if let Some(reason) = schema_error(ticket) {
            dropped.push((ticket.clone(), FilterReason::SchemaInvalid(reason)));
            continue;
        }
        if !ticket.policy_flags.is_empty() {
            dropped.push((ticket.clone(), FilterReason::PolicyFlag));
            continue;
        }
        let text = normalized_text(ticket);
        if seen_text.contains(&text) {
            dropped.push((ticket.clone(), FilterReason::ExactDuplicate));
            continue;
        }
        let tokens = token_set(&text);
        for earlier in &kept_sets {
            // Size bound: jaccard <= min/max, so mismatched sizes skip.
            let (small, large) = if earlier.len() < tokens.len() {
                (earlier.len(), tokens.len())
            } else {
                (tokens.len(), earlier.len())
            };
            if large > 0 && (small as f64 / large as f64) < similarity_threshold {
                continue;
            }
            let similarity = jaccard(earlier, &tokens);
            if similarity >= similarity_threshold {
                dropped.push((ticket.clone(), FilterReason::NearDuplicate { similarity }));
                continue 'next;
            }
        }
        seen_text.insert(text);
        kept_sets.push(tokens);
        kept.push(ticket.clone());
    }
    Ok((kept, dropped))
}

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

/// Base-2 Jensen-Shannon divergence between two distributions given as
/// probability maps. Bounded to [0,1]; zero iff the distributions match.
pub fn js_divergence(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let keys: BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    let mut js = 0.0;
    for key in keys {
        let pk = p.get(key).copied().unwrap_or(0.0);
        let qk = q.get(key).copied().unwrap_or(0.0);
        let mk = 0.5 * (pk + qk);
        if pk > 0.0 {
            js += 0.5 * pk * (pk / mk).log2();
        }
        if qk > 0.0 {
            js += 0.5 * qk * (qk / mk).log2();
        }
    }
    js.max(0.0)
}

fn observed_distribution<F>(tickets: &[SyntheticTicket], key_of: F) -> BTreeMap<String, f64>
where
    F: Fn(&SyntheticTicket) -> String,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for ticket in tickets {
        *counts.entry(key_of(ticket)).or_default() += 1;
    }
    let n = tickets.len() as f64;
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / n))
        .collect()
}

/// Computes the quality report: mean per-dimension JS divergence against
/// the quota targets (Q = 1 - JS), lexical diversity, unique-summary
/// rate, escalation rate, schema/policy/duplicate failure rates measured
/// before filtering, and the count of quota cells off target by more
/// than the tolerance.
pub fn audit(tickets: &[SyntheticTicket], quotas: &QuotaSpec) -> Result<QualityReport, SynthError> {
    if tickets.is_empty() {
        return Err(SynthError::Empty);
    }
    quotas.validate()?;
    let n = tickets.len();

    let observed: [(&str, BTreeMap<String, f64>); 4] = [
        ("queue", observed_distribution(tickets, |t| t.queue.clone())),
        (
            "language",
            observed_distribution(tickets, |t| t.language.as_str().to_string()),
        ),
        (
            "priority",
            observed_distribution(tickets, |t| t.priority.clone()),
        ),
        (
            "escalation",
            observed_distribution(tickets, |t| t.should_escalate.to_string()),
        ),
    ];
    let targets = quotas.dimensions();
    let mut js_sum = 0.0;
    let mut viol = 0u64;
    for ((_, observed_dist), (_, target_dist)) in observed.iter().zip(targets.iter()) {
        js_sum += js_divergence(observed_dist, target_dist);
        let keys: BTreeSet<&String> = observed_dist.keys().chain(target_dist.keys()).collect();
        for key in keys {
            let obs = observed_dist.get(key).copied().unwrap_or(0.0);
            let target = target_dist.get(key).copied().unwrap_or(0.0);
            if (obs - target).abs() > quotas.tolerance {
                viol += 1;
            }
        }
    }
    let js = js_sum / observed.len() as f64;

    let mut total_tokens = 0usize;
    let mut distinct_tokens: BTreeSet<u64> = BTreeSet::new();
    for ticket in tickets {
        for token in ticket.description.split_whitespace() {
            let token = token.trim_matches(|c: char| !c.is_alphanumeric());
            if token.is_empty() {
                continue;
            }
            total_tokens += 1;
            distinct_tokens.insert(crate::seeded::fnv1a64(token.to_lowercase().as_bytes()));
        }
    }
    let lex = if total_tokens == 0 {
        0.0
    } else {
        distinct_tokens.len() as f64 / total_tokens as f64
    };

    let distinct_summaries: BTreeSet<String> = tickets
        .iter()
        .map(|t| t.summary.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" "))
        .collect();
    let uniq = distinct_summaries.len() as f64 / n as f64;
    let esc = tickets.iter().filter(|t| t.should_escalate).count() as f64 / n as f64;
    let sch = tickets.iter().filter(|t| schema_error(t).is_some()).count() as f64 / n as f64;
    let pol = tickets.iter().filter(|t| !t.policy_flags.is_empty()).count() as f64 / n as f64;
    let mut seen = BTreeSet::new();
    let dup = tickets
        .iter()
        .filter(|t| !seen.insert(normalized_text(t)))
        .count() as f64
        / n as f64;

    Ok(QualityReport {
        n,
        q: 1.0 - js,
        js,
        lex,
        uniq,
        esc,
        sch,
        pol,
        dup,
        viol,
    })
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct SplitOutput {
    pub train: Vec<SyntheticTicket>,
    pub val: Vec<SyntheticTicket>,
    pub test: Vec<SyntheticTicket>,
    /// Frozen regression subset, sampled only from the test split.
    pub regression: Vec<SyntheticTicket>,
    pub manifest: Manifest,
    pub regression_manifest: Manifest,
}

pub fn tickets_to_jsonl(tickets: &[SyntheticTicket]) -> Result<Vec<u8>, SynthError> {
    let mut out = Vec::new();
    for ticket in tickets {
        out.extend(serde_json::to_vec(ticket)?);
        out.push(b'\n');
    }
    Ok(out)
}

pub fn tickets_from_jsonl(bytes: &[u8]) -> Result<Vec<SyntheticTicket>, SynthError> {
    let text = String::from_utf8_lossy(bytes);
    let mut tickets = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        tickets.push(serde_json::from_str(line)?);
    }
    Ok(tickets)
}

/// Stratified 80/10/10 split by a label with per-class largest-remainder
/// allocation and a seeded shuffle, plus a frozen regression subset
/// drawn from the test split. The manifest records seed, counts, source,
/// and a digest of the serialized dataset.
pub fn stratified_split(
    tickets: &[SyntheticTicket],
    seed: u64,
    source_uri: &str,
    regression_n: Option<usize>,
) -> Result<SplitOutput, SynthError> {
    if tickets.is_empty() {
        return Err(SynthError::Empty);
    }
    let mut classes: BTreeMap<String, Vec<SyntheticTicket>> = BTreeMap::new();
    for ticket in tickets {
        classes
            .entry(ticket.queue.clone())
            .or_default()
            .push(ticket.clone());
    }
    for (label, members) in &classes {
        if members.len() < 3 {
            return Err(SynthError::ClassTooSmall {
                label: label.clone(),
                count: members.len(),
            });
        }
    }

    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for (label, mut members) in classes {
        members.sort_by(|a, b| a.ticket_id.cmp(&b.ticket_id));
        let mut rng = SplitMix64::new(salted_seed(seed, &label));
        shuffle(&mut members, &mut rng);
        let counts = largest_remainder(members.len() as u64, &[0.8, 0.1, 0.1]);
        let (n_train, n_val) = (counts[0] as usize, counts[1] as usize);
        for (idx, ticket) in members.into_iter().enumerate() {
            if idx < n_train {
                train.push(ticket);
            } else if idx < n_train + n_val {
                val.push(ticket);
            } else {
                test.push(ticket);
            }
        }
    }

    let mut regression = test.clone();
    regression.sort_by(|a, b| a.ticket_id.cmp(&b.ticket_id));
    let mut rng = SplitMix64::new(salted_seed(seed, "regression"));
    shuffle(&mut regression, &mut rng);
    regression.truncate(regression_n.unwrap_or(50).min(test.len()));

    let digest = content_digest(&tickets_to_jsonl(tickets)?);
    let manifest = Manifest {
        source_uri: source_uri.to_string(),
        seed,
        counts: BTreeMap::from([
            ("train".to_string(), train.len() as u64),
            ("val".to_string(), val.len() as u64),
            ("test".to_string(), test.len() as u64),
        ]),
        content_digest: digest,
    };
    let regression_manifest = Manifest {
        source_uri: format!("{source_uri}#test-split"),
        seed,
        counts: BTreeMap::from([("regression".to_string(), regression.len() as u64)]),
        content_digest: content_digest(&tickets_to_jsonl(&regression)?),
    };
    Ok(SplitOutput {
        train,
        val,
        test,
        regression,
        manifest,
        regression_manifest,
    })
}

// ---------------------------------------------------------------------------
// Dataset card
// ---------------------------------------------------------------------------

/// Renders the dataset card. Regenerating from identical inputs yields
/// identical bytes.
pub fn write_dataset_card(
    dataset_name: &str,
    method: &str,
    quotas: &QuotaSpec,
    manifest: &Manifest,
    audit: &QualityReport,
) -> String {
    use std::fmt::Write;
    let mut card = String::new();
    let _ = writeln!(card, "# Dataset card: {dataset_name}");
    let _ = writeln!(card);
    let _ = writeln!(card, "- Generation method: {method}");
    let _ = writeln!(card, "- Source: {}", manifest.source_uri);
    let _ = writeln!(card, "- Seed: {}", manifest.seed);
    let _ = writeln!(card, "- Content digest: {}", manifest.content_digest);
    let _ = writeln!(card);
    let _ = writeln!(card, "## Split counts");
    let _ = writeln!(card);
    for (split, count) in &manifest.counts {
        let _ = writeln!(card, "- {split}: {count}");
    }
    let _ = writeln!(card);
    let _ = writeln!(card, "## Target quotas (tolerance {})", quotas.tolerance);
    let _ = writeln!(card);
    for (dim, dist) in quotas.dimensions() {
        let rendered: Vec<String> = dist
            .iter()
            .map(|(k, v)| format!("{k}={v:.2}"))
            .collect();
        let _ = writeln!(card, "- {dim}: {}", rendered.join(", "));
    }
    let _ = writeln!(card);
    let _ = writeln!(card, "## Quality audit");
    let _ = writeln!(card);
    let _ = writeln!(card, "| n | Q | JS | Lex | Uniq | Esc | Sch | Pol | Dup | Viol |");
    let _ = writeln!(card, "|---|---|----|-----|------|-----|-----|-----|-----|------|");
    let _ = writeln!(
        card,
        "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {} |",
        audit.n,
        audit.q,
        audit.js,
        audit.lex,
        audit.uniq,
        audit.esc,
        audit.sch,
        audit.pol,
        audit.dup,
        audit.viol
    );
    let _ = writeln!(card);
    let _ = writeln!(
        card,
        "Q is defined as 1 - JS (mean base-2 Jensen-Shannon divergence \
         between observed and target quota distributions); this is the \
         harness's reading of the aggregate quality score."
    );
    let _ = writeln!(card);
    let _ = writeln!(card, "## License");
    let _ = writeln!(card);
    let _ = writeln!(
        card,
        "Synthetic content generated from templates owned by this \
         project; no third-party ticket text is included. Apache-2.0."
    );
    let _ = writeln!(card);
    let _ = writeln!(card, "## Known risks");
    let _ = writeln!(card);
    let _ = writeln!(
        card,
        "Synthetic tickets mirror template distributions, not production \
         traffic; they are intended for product regression and CI gates, \
         not as a replacement for real-world evaluation data. Augmented \
         content can inherit generator style bias and should stay \
         subject to the same filters and audits."
    );
    card
}

// ---------------------------------------------------------------------------
// Augmentation hook
// ---------------------------------------------------------------------------

/// Source of candidate tickets from an external generator (e.g. an LLM
/// expansion pass). The call itself lives outside this crate; whatever
/// comes back is filtered and audited like template output.
pub trait CandidateSource {
    fn generate(&mut self, n: usize) -> Vec<SyntheticTicket>;
}

/// Pulls `n_extra` candidates through the standard filter, deduplicating
/// against the existing corpus first.
pub fn augment(
    base: &[SyntheticTicket],
    source: &mut dyn CandidateSource,
    n_extra: usize,
    similarity_threshold: f64,
) -> Result<FilterOutcome, SynthError> {
    let candidates = source.generate(n_extra);
    let mut combined: Vec<SyntheticTicket> = base.to_vec();
    combined.extend(candidates);
    let (kept_all, dropped) = filter(&combined, similarity_threshold)?;
    // Anything from the base corpus is already vetted; only candidates
    // are reported.
    let base_ids: BTreeSet<&String> = base.iter().map(|t| &t.ticket_id).collect();
    let kept = kept_all
        .into_iter()
        .filter(|t| !base_ids.contains(&t.ticket_id))
        .collect();
    let dropped = dropped
        .into_iter()
        .filter(|(t, _)| !base_ids.contains(&t.ticket_id))
        .collect();
    Ok((kept, dropped))
}
