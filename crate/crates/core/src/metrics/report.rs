use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{fairness, line_fit, robustness, AccuracyPair, ConditionComparison, EpsilonPolicy};
use crate::error::{Error, Result};
use crate::evaluation::{EvalResult, TrainCondition};

pub const ANALYSIS_HEADER: [&str; 9] = [
    "condition",
    "test_set",
    "F",
    "R",
    "n_clamped",
    "slope",
    "intercept",
    "r_squared",
    "N",
];

/// One (condition, test set) line of the analysis table. The fit columns
/// describe the condition's own models and are NaN when the fit is
/// undefined (fewer than two models or identical ID accuracies).
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub condition: TrainCondition,
    pub test_set: String,
    pub f: f64,
    pub r: f64,
    pub n_clamped: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

fn pairs_for(
    acc: &BTreeMap<(TrainCondition, &str), BTreeMap<&str, f64>>,
    cond: TrainCondition,
    id_set: &str,
    test_set: &str,
) -> Result<Vec<AccuracyPair>> {
    let xs = acc
        .get(&(cond, id_set))
        .ok_or_else(|| Error::Empty(format!("no {id_set} results for {cond}")))?;
    let ys = acc
        .get(&(cond, test_set))
        .ok_or_else(|| Error::Empty(format!("no {test_set} results for {cond}")))?;
    let ids: BTreeSet<&str> = xs.keys().chain(ys.keys()).copied().collect();
    ids.into_iter()
        .map(|id| match (xs.get(id), ys.get(id)) {
            (Some(&x), Some(&y)) => AccuracyPair::new(id, x, y),
            _ => Err(Error::Unmatched(id.to_string())),
        })
        .collect()
}

/// Compares every condition against `baseline` on every test set other than
/// `id_set`, whose accuracies supply the x coordinates. The baseline's own
/// rows have F = R = 0 and carry its fit.
pub fn analyze(
    results: &[EvalResult],
    baseline: TrainCondition,
    id_set: &str,
    policy: EpsilonPolicy,
) -> Result<Vec<AnalysisRow>> {
    let mut acc: BTreeMap<(TrainCondition, &str), BTreeMap<&str, f64>> = BTreeMap::new();
    for r in results {
        if acc
            .entry((r.train_condition, r.test_set.as_str()))
            .or_default()
            .insert(r.model_id.as_str(), r.accuracy)
            .is_some()
        {
            return Err(Error::Duplicate(format!("{}/{}/{}", r.model_id, r.train_condition, r.test_set)));
        }
    }
    let conditions: BTreeSet<TrainCondition> = acc.keys().map(|k| k.0).collect();
    let test_sets: BTreeSet<&str> = acc.keys().map(|k| k.1).filter(|t| *t != id_set).collect();
    if !conditions.contains(&baseline) {
        return Err(Error::Empty(format!("no results for baseline condition {baseline}")));
    }
    let mut rows = Vec::new();
    for &cond in &conditions {
        for &t in &test_sets {
            let base = pairs_for(&acc, baseline, id_set, t)?;
            let other = pairs_for(&acc, cond, id_set, t)?;
            let points: Vec<(f64, f64)> = other.iter().map(|p| (p.x, p.y)).collect();
            let cmp = ConditionComparison::new(base, other)?;
            let rob = robustness(&cmp, policy)?;
            let fit = line_fit(&points).ok();
            rows.push(AnalysisRow {
                condition: cond,
                test_set: t.to_string(),
                f: fairness(&cmp),
                r: rob.r,
                n_clamped: rob.n_flagged,
                slope: fit.map_or(f64::NAN, |f| f.slope),
                intercept: fit.map_or(f64::NAN, |f| f.intercept),
                r_squared: fit.map_or(f64::NAN, |f| f.r_squared),
                n: cmp.n(),
            });
        }
    }
    Ok(rows)
}

pub fn write_analysis<W: std::io::Write>(rows: &[AnalysisRow], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(ANALYSIS_HEADER)?;
    for r in rows {
        w.write_record([
            r.condition.to_string(),
            r.test_set.clone(),
            r.f.to_string(),
            r.r.to_string(),
            r.n_clamped.to_string(),
            r.slope.to_string(),
            r.intercept.to_string(),
            r.r_squared.to_string(),
            r.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Malformed(format!("analysis write: {e}")))
}

pub fn save_analysis(rows: &[AnalysisRow], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_analysis(rows, f)
}

pub fn read_analysis<R: std::io::Read>(r: R) -> Result<Vec<AnalysisRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(ANALYSIS_HEADER) {
        return Err(Error::Malformed("bad analysis header".into()));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Malformed(format!("bad number {s:?}"))) };
    let int = |s: &str| -> Result<usize> { s.parse().map_err(|_| Error::Malformed(format!("bad count {s:?}"))) };
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(AnalysisRow {
                condition: rec[0].parse()?,
                test_set: rec[1].to_string(),
                f: num(&rec[2])?,
                r: num(&rec[3])?,
                n_clamped: int(&rec[4])?,
                slope: num(&rec[5])?,
                intercept: num(&rec[6])?,
                r_squared: num(&rec[7])?,
                n: int(&rec[8])?,
            })
        })
        .collect()
}

pub fn load_analysis(path: &Path) -> Result<Vec<AnalysisRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_analysis(f)
}
