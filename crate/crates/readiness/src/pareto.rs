//! Non-dominated sets and frontier polylines over configurable
//! objective vectors.
//!
//! Weak dominance: `a` dominates `b` when it is at least as good on
//! every objective and strictly better on at least one. Ties on a
//! quality axis are broken by the other axes, which is what collapses
//! two equal-score runs onto the faster one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParetoError {
    #[error("point {run_id} is missing objective metric {metric:?}")]
    MissingMetric { run_id: String, metric: String },
    #[error("no objectives configured")]
    NoObjectives,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub metric: String,
    pub direction: Direction,
}

impl Objective {
    pub fn maximize(metric: impl Into<String>) -> Self {
        Self {
            metric: metric.into(),
            direction: Direction::Maximize,
        }
    }

    pub fn minimize(metric: impl Into<String>) -> Self {
        Self {
            metric: metric.into(),
            direction: Direction::Minimize,
        }
    }
}

/// Parses `"p95_latency_ms:min,score:max"` style objective lists.
pub fn parse_objectives(spec: &str) -> Result<Vec<Objective>, String> {
    let mut objectives = Vec::new();
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (metric, dir) = part
            .rsplit_once(':')
            .ok_or_else(|| format!("objective {part:?} must be metric:min|max"))?;
        let direction = match dir.trim() {
            "min" | "minimize" => Direction::Minimize,
            "max" | "maximize" => Direction::Maximize,
            other => return Err(format!("unknown direction {other:?}")),
        };
        objectives.push(Objective {
            metric: metric.trim().to_string(),
            direction,
        });
    }
    if objectives.is_empty() {
        return Err("empty objective list".to_string());
    }
    Ok(objectives)
}

/// One candidate in objective space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub run_id: String,
    pub coordinates: BTreeMap<String, f64>,
}

impl FrontierPoint {
    pub fn new(run_id: impl Into<String>, coordinates: BTreeMap<String, f64>) -> Self {
        Self {
            run_id: run_id.into(),
            coordinates,
        }
    }

    fn get(&self, metric: &str) -> Result<f64, ParetoError> {
        self.coordinates
            .get(metric)
            .copied()
            .ok_or_else(|| ParetoError::MissingMetric {
                run_id: self.run_id.clone(),
                metric: metric.to_string(),
            })
    }
}

/// True iff `a` is at least as good as `b` on every objective and
/// strictly better on at least one.
pub fn dominates(
    a: &FrontierPoint,
    b: &FrontierPoint,
    objectives: &[Objective],
) -> Result<bool, ParetoError> {
    if objectives.is_empty() {
        return Err(ParetoError::NoObjectives);
    }
    let mut strictly_better = false;
    for objective in objectives {
        let (va, vb) = (a.get(&objective.metric)?, b.get(&objective.metric)?);
        let (better, worse) = match objective.direction {
            Direction::Maximize => (va > vb, va < vb),
            Direction::Minimize => (va < vb, va > vb),
        };
        if worse {
            return Ok(false);
        }
        if better {
            strictly_better = true;
        }
    }
    Ok(strictly_better)
}

/// The non-dominated subset, sorted by the first objective ascending
/// (ties by the remaining objectives, then run id). Duplicate points
/// never dominate each other, so duplicates are all kept.
pub fn frontier(
    points: &[FrontierPoint],
    objectives: &[Objective],
) -> Result<Vec<FrontierPoint>, ParetoError> {
    if objectives.is_empty() {
        return Err(ParetoError::NoObjectives);
    }
    let mut kept = Vec::new();
    for (i, candidate) in points.iter().enumerate() {
        let mut dominated = false;
        for (j, other) in points.iter().enumerate() {
            if i != j && dominates(other, candidate, objectives)? {
                dominated = true;
                break;
            }
        }
        if !dominated {
            kept.push(candidate.clone());
        }
    }
    sort_points(&mut kept, objectives);
    Ok(kept)
}

fn sort_points(points: &mut [FrontierPoint], objectives: &[Objective]) {
    points.sort_by(|a, b| {
        for objective in objectives {
            let (va, vb) = (
                a.coordinates.get(&objective.metric),
                b.coordinates.get(&objective.metric),
            );
            if let (Some(va), Some(vb)) = (va, vb) {
                match va.partial_cmp(vb) {
                    Some(std::cmp::Ordering::Equal) | None => continue,
                    Some(order) => return order,
                }
            }
        }
        a.run_id.cmp(&b.run_id)
    });
}

/// Scatter plus frontier with the objective list made explicit, so
/// dominance checks stay reproducible from the exported document alone.
#[derive(Debug, Clone, Serialize)]
pub struct FrontierView {
    pub scenario: String,
    pub objectives: Vec<Objective>,
    pub scatter: Vec<FrontierPoint>,
    pub frontier: Vec<FrontierPoint>,
}

/// Builds the scatter for one scenario from pre-resolved points and
/// attaches its non-dominated subset. Point order in the scatter follows
/// the same deterministic sort as the frontier.
pub fn frontier_view(
    scenario: impl Into<String>,
    mut scatter: Vec<FrontierPoint>,
    objectives: &[Objective],
) -> Result<FrontierView, ParetoError> {
    let front = frontier(&scatter, objectives)?;
    sort_points(&mut scatter, objectives);
    Ok(FrontierView {
        scenario: scenario.into(),
        objectives: objectives.to_vec(),
        scatter,
        frontier: front,
    })
}
