//! Dataset loading and deterministic seeded sampling for run plans.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::artifact::content_digest;
use crate::seeded::{largest_remainder, salted_seed, shuffle, SplitMix64};

use super::RunnerError;

/// One evaluable item. Ticket items carry a gold routing label and an
/// escalation label; retrieval items are bare queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub should_escalate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub id: String,
    pub items: Vec<DatasetItem>,
    /// Digest of the source serialization; part of the plan fingerprint.
    pub digest: String,
}

impl Dataset {
    pub fn from_items(id: impl Into<String>, items: Vec<DatasetItem>) -> Self {
        let serialized: Vec<u8> = items
            .iter()
            .flat_map(|item| {
                let mut line = serde_json::to_vec(item).expect("item serializes");
                line.push(b'\n');
                line
            })
            .collect();
        Self {
            id: id.into(),
            items,
            digest: content_digest(&serialized),
        }
    }

    pub fn label_universe(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .items
            .iter()
            .filter_map(|item| item.label.clone())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }
}

/// Loads a line-delimited dataset. Field names are mapped leniently:
/// `id`/`item_id`/`ticket_id`/`query_id`; `text`/`query` or
/// `summary`+`description`; `label`/`queue`.
pub fn load_dataset(dataset_id: &str, path: &Path) -> Result<Dataset, RunnerError> {
    let bytes = std::fs::read(path).map_err(|source| RunnerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| RunnerError::Dataset(e.to_string()))?;
    let mut items = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line)
            .map_err(|e| RunnerError::Dataset(format!("line {}: {e}", idx + 1)))?;
        items.push(item_from_value(&value, idx + 1)?);
    }
    if items.is_empty() {
        return Err(RunnerError::Dataset("dataset is empty".to_string()));
    }
    let mut seen = BTreeMap::new();
    for item in &items {
        if seen.insert(item.id.clone(), ()).is_some() {
            return Err(RunnerError::Dataset(format!(
                "duplicate item id {:?}",
                item.id
            )));
        }
    }
    Ok(Dataset::from_items(dataset_id, items))
}

fn item_from_value(value: &Value, line: usize) -> Result<DatasetItem, RunnerError> {
    let obj = value
        .as_object()
        .ok_or_else(|| RunnerError::Dataset(format!("line {line}: not an object")))?;
    let str_of = |keys: &[&str]| -> Option<String> {
        keys.iter()
            .find_map(|k| obj.get(*k).and_then(Value::as_str))
            .map(str::to_string)
    };
    let id = str_of(&["id", "item_id", "ticket_id", "query_id"])
        .ok_or_else(|| RunnerError::Dataset(format!("line {line}: missing item id")))?;
    let text = str_of(&["text", "query"]).unwrap_or_else(|| {
        let summary = str_of(&["summary"]).unwrap_or_default();
        let description = str_of(&["description"]).unwrap_or_default();
        format!("{summary} {description}").trim().to_string()
    });
    if text.is_empty() {
        return Err(RunnerError::Dataset(format!(
            "line {line}: item {id:?} has no text"
        )));
    }
    Ok(DatasetItem {
        id,
        text,
        label: str_of(&["label", "queue", "gold_label"]),
        should_escalate: obj.get("should_escalate").and_then(Value::as_bool),
        language: str_of(&["language"]),
    })
}

/// Deterministic sample: items are sorted by id, Fisher-Yates shuffled
/// with a splitmix64 stream, and the first `n` taken. With strata, each
/// stratum gets a largest-remainder quota proportional to its share and
/// is sampled independently under a stratum-salted seed.
pub fn sample_dataset(
    items: &[DatasetItem],
    n: usize,
    seed: u64,
    strata: Option<&str>,
) -> Result<Vec<DatasetItem>, RunnerError> {
    if n > items.len() {
        return Err(RunnerError::SampleTooLarge {
            requested: n,
            available: items.len(),
        });
    }
    match strata {
        None => {
            let mut sorted: Vec<DatasetItem> = items.to_vec();
            sorted.sort_by(|a, b| a.id.cmp(&b.id));
            let mut rng = SplitMix64::new(seed);
            shuffle(&mut sorted, &mut rng);
            sorted.truncate(n);
            Ok(sorted)
        }
        Some(field) => {
            let mut groups: BTreeMap<String, Vec<DatasetItem>> = BTreeMap::new();
            for item in items {
                let key = stratum_of(item, field)?;
                groups.entry(key).or_default().push(item.clone());
            }
            let total = items.len() as f64;
            let shares: Vec<f64> = groups.values().map(|g| g.len() as f64 / total).collect();
            let quotas = largest_remainder(n as u64, &shares);
            let mut sample = Vec::with_capacity(n);
            for ((label, mut group), quota) in groups.into_iter().zip(quotas) {
                let quota = quota as usize;
                if quota > group.len() {
                    return Err(RunnerError::Dataset(format!(
                        "stratum {label:?} has {} items but a quota of {quota}",
                        group.len()
                    )));
                }
                group.sort_by(|a, b| a.id.cmp(&b.id));
                let mut rng = SplitMix64::new(salted_seed(seed, &label));
                shuffle(&mut group, &mut rng);
                sample.extend(group.into_iter().take(quota));
            }
            Ok(sample)
        }
    }
}

fn stratum_of(item: &DatasetItem, field: &str) -> Result<String, RunnerError> {
    let value = match field {
        "label" => item.label.clone(),
        "language" => item.language.clone(),
        other => {
            return Err(RunnerError::Dataset(format!(
                "unknown strata field {other:?} (expected label or language)"
            )))
        }
    };
    value.ok_or_else(|| {
        RunnerError::Dataset(format!("item {:?} is missing strata field {field:?}", item.id))
    })
}
