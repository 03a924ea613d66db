//! Harness configuration: scenario weights, budgets, prices, gate
//! thresholds, policy rules, and export precision.
//!
//! Everything has a default; a TOML file overrides selectively. Invalid
//! configuration is a startup error, never a silent fallback. Endpoint
//! and credentials may come from the environment only
//! (`HARNESS_ENDPOINT`, `HARNESS_API_KEY`) so secrets stay out of files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::artifact::Scenario;
use crate::gates::GateConfig;
use crate::metrics::{Budget, BudgetMetric, ModelPrice, PriceTable};
use crate::policy::{default_redact_fields, PolicyRuleSet, SchemaMode};
use crate::scoring::{builtin_weights, ScenarioWeights};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct ExportPrecision {
    pub rates: usize,
    pub seed_stats: usize,
    pub deltas: usize,
}

impl Default for ExportPrecision {
    fn default() -> Self {
        Self {
            rates: 3,
            seed_stats: 2,
            deltas: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub suite: String,
    pub schema_mode: SchemaMode,
    pub baseline_tag: String,
    pub weights: BTreeMap<Scenario, ScenarioWeights>,
    pub budgets: Vec<Budget>,
    pub prices: PriceTable,
    pub gate: GateConfig,
    pub policy_rules: PolicyRuleSet,
    pub redact_fields: Vec<String>,
    pub precision: ExportPrecision,
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        let weights = Scenario::ALL
            .into_iter()
            .map(|s| (s, builtin_weights(s)))
            .collect();
        let mut prices = PriceTable::default();
        for (model, input, output) in [
            ("gpt-4.1", 2.00, 8.00),
            ("gpt-4.1-mini", 0.40, 1.60),
            ("gpt-5.2", 1.25, 10.00),
            ("sim-model", 0.50, 2.00),
        ] {
            prices.models.insert(
                model.to_string(),
                ModelPrice {
                    input_usd_per_1m: input,
                    output_usd_per_1m: output,
                },
            );
        }
        Self {
            suite: "sim_core".to_string(),
            schema_mode: SchemaMode::V1,
            baseline_tag: "baseline".to_string(),
            weights,
            budgets: vec![
                Budget::new(BudgetMetric::Cost, 0.005, 0.025).expect("static budget"),
                Budget::new(BudgetMetric::Latency, 2000.0, 6000.0).expect("static budget"),
            ],
            prices,
            gate: GateConfig::default(),
            policy_rules: PolicyRuleSet::builtin(),
            redact_fields: default_redact_fields(),
            precision: ExportPrecision::default(),
            endpoint: None,
            api_key: None,
        }
    }
}

impl HarnessConfig {
    pub fn weights_for(&self, scenario: Scenario) -> ScenarioWeights {
        self.weights
            .get(&scenario)
            .cloned()
            .unwrap_or_else(|| builtin_weights(scenario))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (scenario, weights) in &self.weights {
            weights
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("weights[{scenario}]: {e}")))?;
        }
        let mut seen = Vec::new();
        for budget in &self.budgets {
            if seen.contains(&budget.metric) {
                return Err(ConfigError::Invalid(format!(
                    "duplicate budget for {:?}",
                    budget.metric
                )));
            }
            seen.push(budget.metric);
            Budget::new(budget.metric, budget.lo, budget.hi)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        for (model, price) in &self.prices.models {
            if price.input_usd_per_1m < 0.0 || price.output_usd_per_1m < 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "negative price for model {model}"
                )));
            }
        }
        self.gate
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    suite: Option<String>,
    schema_mode: Option<SchemaMode>,
    baseline_tag: Option<String>,
    policy_rules_file: Option<String>,
    weights: Option<BTreeMap<String, WeightsRow>>,
    budgets: Option<Vec<BudgetRow>>,
    prices: Option<BTreeMap<String, ModelPrice>>,
    gate: Option<GateConfig>,
    redact_fields: Option<Vec<String>>,
    precision: Option<PrecisionRow>,
    endpoint: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsRow {
    workflow: f64,
    policy: f64,
    faithfulness: f64,
    retrieval: f64,
    cost: f64,
    sla: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetRow {
    metric: BudgetMetric,
    lo: f64,
    hi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrecisionRow {
    rates: Option<usize>,
    seed_stats: Option<usize>,
    deltas: Option<usize>,
}

/// Loads the configuration, applying file overrides on top of defaults
/// and environment overrides (endpoint/credentials) on top of the file.
pub fn load_config(path: Option<&Path>) -> Result<HarnessConfig, ConfigError> {
    let mut config = HarnessConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: ConfigFile =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        apply_file(&mut config, file, path)?;
    }
    if let Ok(endpoint) = std::env::var("HARNESS_ENDPOINT") {
        if !endpoint.is_empty() {
            config.endpoint = Some(endpoint);
        }
    }
    if let Ok(key) = std::env::var("HARNESS_API_KEY") {
        if !key.is_empty() {
            config.api_key = Some(key);
        }
    }
    config.validate()?;
    Ok(config)
}

fn apply_file(
    config: &mut HarnessConfig,
    file: ConfigFile,
    config_path: &Path,
) -> Result<(), ConfigError> {
    if let Some(suite) = file.suite {
        config.suite = suite;
    }
    if let Some(mode) = file.schema_mode {
        config.schema_mode = mode;
    }
    if let Some(tag) = file.baseline_tag {
        config.baseline_tag = tag;
    }
    if let Some(weights) = file.weights {
        for (scenario_name, row) in weights {
            let scenario: Scenario = scenario_name
                .parse()
                .map_err(|e: String| ConfigError::Invalid(e))?;
            let weights = ScenarioWeights::new(
                scenario_name,
                [
                    row.workflow,
                    row.policy,
                    row.faithfulness,
                    row.retrieval,
                    row.cost,
                    row.sla,
                ],
            )
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            config.weights.insert(scenario, weights);
        }
    }
    if let Some(budgets) = file.budgets {
        config.budgets = budgets
            .into_iter()
            .map(|row| {
                Budget::new(row.metric, row.lo, row.hi)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(prices) = file.prices {
        for (model, price) in prices {
            config.prices.models.insert(model, price);
        }
    }
    if let Some(gate) = file.gate {
        config.gate = gate;
    }
    if let Some(rules_file) = file.policy_rules_file {
        // Relative rule paths resolve against the config file location.
        let rules_path = config_path
            .parent()
            .map(|dir| dir.join(&rules_file))
            .unwrap_or_else(|| rules_file.clone().into());
        let bytes = std::fs::read(&rules_path).map_err(|source| ConfigError::Io {
            path: rules_path.display().to_string(),
            source,
        })?;
        config.policy_rules =
            PolicyRuleSet::from_json(&bytes).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    if let Some(fields) = file.redact_fields {
        config.redact_fields = fields;
    }
    if let Some(precision) = file.precision {
        if let Some(rates) = precision.rates {
            config.precision.rates = rates;
        }
        if let Some(seed_stats) = precision.seed_stats {
            config.precision.seed_stats = seed_stats;
        }
        if let Some(deltas) = precision.deltas {
            config.precision.deltas = deltas;
        }
    }
    if let Some(endpoint) = file.endpoint {
        config.endpoint = Some(endpoint);
    }
    Ok(())
}
