//! Fairness and robustness of a training condition against a baseline, and
//! accuracy-on-the-line regression.
//!
//! F sums the ID and the OOD accuracy deltas of every model before
//! averaging, so it ranges over `[-2, 2]`; it is not a mean accuracy delta.

mod report;

pub use report::{analyze, load_analysis, read_analysis, save_analysis, write_analysis, AnalysisRow, ANALYSIS_HEADER};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracies of one model on the ID (`x`) and OOD or noisy (`y`) test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPair {
    pub model_id: String,
    pub x: f64,
    pub y: f64,
}

impl AccuracyPair {
    pub fn new(model_id: impl Into<String>, x: f64, y: f64) -> Result<Self> {
        for v in [x, y] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("accuracy {v} outside [0, 1]")));
            }
        }
        Ok(AccuracyPair {
            model_id: model_id.into(),
            x,
            y,
        })
    }
}

/// Baseline and comparison pairs matched one-to-one by model id, held in
/// model-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionComparison {
    pairs: Vec<(AccuracyPair, AccuracyPair)>,
}

fn index(pairs: Vec<AccuracyPair>) -> Result<BTreeMap<String, AccuracyPair>> {
    let mut map = BTreeMap::new();
    for p in pairs {
        if let Some(old) = map.insert(p.model_id.clone(), p) {
            return Err(Error::Duplicate(old.model_id));
        }
    }
    Ok(map)
}

impl ConditionComparison {
    pub fn new(baseline: Vec<AccuracyPair>, other: Vec<AccuracyPair>) -> Result<Self> {
        let base = index(baseline)?;
        let mut other = index(other)?;
        let mut pairs = Vec::with_capacity(base.len());
        for (id, b) in base {
            let o = other.remove(&id).ok_or(Error::Unmatched(id))?;
            pairs.push((b, o));
        }
        if let Some(id) = other.into_keys().next() {
            return Err(Error::Unmatched(id));
        }
        if pairs.is_empty() {
            return Err(Error::Empty("comparison".into()));
        }
        Ok(ConditionComparison { pairs })
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(AccuracyPair, AccuracyPair)] {
        &self.pairs
    }

    /// Baseline and other swapped.
    pub fn swapped(&self) -> Self {
        ConditionComparison {
            pairs: self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }
}

/// `F = (1/N) Σ (x'_i - x_i) + (y'_i - y_i)`.
pub fn fairness(cmp: &ConditionComparison) -> f64 {
    let sum: f64 = cmp
        .pairs
        .iter()
        .map(|(b, o)| (o.x - b.x) + (o.y - b.y))
        .sum();
    sum / cmp.n() as f64
}

/// Euclidean distance of `(x, y)` from the line `y = x`.
pub fn diag_distance(pair: &AccuracyPair) -> f64 {
    (pair.x - pair.y).abs() / std::f64::consts::SQRT_2
}

/// Treatment of comparison pairs lying (almost) on the diagonal, where the
/// distance ratio is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonPolicy {
    /// Raise `d'_i` to at least `epsilon`.
    Clamp { epsilon: f64 },
    /// Drop pairs with `d'_i < epsilon` and average over the rest.
    Exclude { epsilon: f64 },
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        EpsilonPolicy::Clamp { epsilon: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Robustness {
    pub r: f64,
    /// Pairs clamped or excluded by the policy.
    pub n_flagged: usize,
    /// Pairs contributing to the mean.
    pub n_used: usize,
}

/// `R = (1/N) Σ d_i / d'_i - 1`, with `d` the baseline and `d'` the other
/// condition's distance from the diagonal.
pub fn robustness(cmp: &ConditionComparison, policy: EpsilonPolicy) -> Result<Robustness> {
    let mut sum = 0.0;
    let (mut flagged, mut used) = (0, 0);
    for (b, o) in &cmp.pairs {
        let d = diag_distance(b);
        let dp = diag_distance(o);
        let dp = match policy {
            EpsilonPolicy::Clamp { epsilon } if dp < epsilon => {
                flagged += 1;
                epsilon
            }
            EpsilonPolicy::Exclude { epsilon } if dp < epsilon => {
                flagged += 1;
                continue;
            }
            _ => dp,
        };
        sum += d / dp;
        used += 1;
    }
    if used == 0 {
        return Err(Error::Empty("every pair was excluded".into()));
    }
    Ok(Robustness {
        r: sum / used as f64 - 1.0,
        n_flagged: flagged,
        n_used: used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`. `r_squared` is 0 when `y` is
/// constant.
pub fn line_fit(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("line fit needs at least 2 points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values are identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}
