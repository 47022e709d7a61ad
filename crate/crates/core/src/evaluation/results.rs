use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{DepthVariant, Family, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainCondition {
    Clean,
    Specaug,
    Env,
    Imp,
    EnvImp,
}

impl TrainCondition {
    pub const ALL: [TrainCondition; 5] = [
        TrainCondition::Clean,
        TrainCondition::Specaug,
        TrainCondition::Env,
        TrainCondition::Imp,
        TrainCondition::EnvImp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TrainCondition::Clean => "clean",
            TrainCondition::Specaug => "specaug",
            TrainCondition::Env => "env",
            TrainCondition::Imp => "imp",
            TrainCondition::EnvImp => "env_imp",
        }
    }
}

impl fmt::Display for TrainCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TrainCondition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown train condition {s:?}")))
    }
}

/// Accuracy of one trained model on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub model_id: String,
    pub family: Family,
    pub width_factor: f64,
    pub depth_variant: DepthVariant,
    pub param_count: usize,
    pub train_condition: TrainCondition,
    pub feature_type: String,
    pub test_set: String,
    pub n_utterances: usize,
    pub accuracy: f64,
    pub error_rate: f64,
    pub seed: u64,
}

impl EvalResult {
    pub fn new(
        spec: &ModelSpec,
        param_count: usize,
        train_condition: TrainCondition,
        feature_type: &str,
        test_set: &str,
        correct: usize,
        n_utterances: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_utterances == 0 || correct > n_utterances {
            return Err(Error::InvalidArgument(format!(
                "{correct} correct out of {n_utterances}"
            )));
        }
        let accuracy = correct as f64 / n_utterances as f64;
        Ok(EvalResult {
            model_id: spec.id(),
            family: spec.family,
            width_factor: spec.width_factor,
            depth_variant: spec.depth,
            param_count,
            train_condition,
            feature_type: feature_type.to_string(),
            test_set: test_set.to_string(),
            n_utterances,
            accuracy,
            error_rate: 1.0 - accuracy,
            seed,
        })
    }

    /// `(model_id, train_condition, test_set)`, the unique key of a row.
    pub fn cell(&self) -> (String, TrainCondition, String) {
        (self.model_id.clone(), self.train_condition, self.test_set.clone())
    }
}

pub const RESULTS_HEADER: [&str; 12] = [
    "model_id",
    "family",
    "width_factor",
    "depth_variant",
    "param_count",
    "train_condition",
    "feature_type",
    "test_set",
    "n_utterances",
    "accuracy",
    "error_rate",
    "seed",
];

/// Sorts by cell key and rejects duplicate cells.
pub fn sort_results(results: &mut [EvalResult]) -> Result<()> {
    results.sort_by(|a, b| {
        (&a.model_id, a.train_condition.as_str(), &a.test_set).cmp(&(
            &b.model_id,
            b.train_condition.as_str(),
            &b.test_set,
        ))
    });
    let mut seen = BTreeSet::new();
    for r in results.iter() {
        if !seen.insert(r.cell()) {
            return Err(Error::Duplicate(format!(
                "{}/{}/{}",
                r.model_id, r.train_condition, r.test_set
            )));
        }
    }
    Ok(())
}

pub fn write_results<W: std::io::Write>(results: &[EvalResult], w: W) -> Result<()> {
    let mut sorted = results.to_vec();
    sort_results(&mut sorted)?;
    let mut w = csv::Writer::from_writer(w);
    w.write_record(RESULTS_HEADER)?;
    for r in &sorted {
        w.write_record([
            r.model_id.clone(),
            r.family.to_string(),
            r.width_factor.to_string(),
            r.depth_variant.to_string(),
            r.param_count.to_string(),
            r.train_condition.to_string(),
            r.feature_type.clone(),
            r.test_set.clone(),
            r.n_utterances.to_string(),
            r.accuracy.to_string(),
            r.error_rate.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Malformed(format!("flushing results: {e}")))
}

/// Writes `results` sorted by `(model_id, train_condition, test_set)`.
pub fn save_results(results: &[EvalResult], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_results(results, std::io::BufWriter::new(f))
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec[i]
        .parse()
        .map_err(|_| Error::Malformed(format!("bad {} value {:?}", RESULTS_HEADER[i], &rec[i])))
}

pub fn read_results<R: std::io::Read>(r: R) -> Result<Vec<EvalResult>> {
    let mut rdr = csv::Reader::from_reader(r);
    if rdr.headers()?.iter().ne(RESULTS_HEADER) {
        return Err(Error::Malformed(format!(
            "results header must be {}",
            RESULTS_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let accuracy: f64 = field(&rec, 9)?;
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::Malformed(format!("accuracy {accuracy} outside [0, 1]")));
        }
        out.push(EvalResult {
            model_id: rec[0].to_string(),
            family: field(&rec, 1)?,
            width_factor: field(&rec, 2)?,
            depth_variant: field(&rec, 3)?,
            param_count: field(&rec, 4)?,
            train_condition: field(&rec, 5)?,
            feature_type: rec[6].to_string(),
            test_set: rec[7].to_string(),
            n_utterances: field(&rec, 8)?,
            accuracy,
            error_rate: field(&rec, 10)?,
            seed: field(&rec, 11)?,
        });
    }
    sort_results(&mut out)?;
    Ok(out)
}

pub fn load_results(path: &Path) -> Result<Vec<EvalResult>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_results(std::io::BufReader::new(f))
}
