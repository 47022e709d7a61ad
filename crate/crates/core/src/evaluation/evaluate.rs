use ndarray::Array2;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::scalar::Scalar;
use crate::training::{fix_length, Dataset, LabelMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Accuracy {
    pub correct: usize,
    pub n: usize,
}

impl Accuracy {
    pub fn value(&self) -> f64 {
        self.correct as f64 / self.n as f64
    }
}

/// Resolves label names to class indices, sorted.
pub fn label_subset(labels: &LabelMap, names: &[String]) -> Result<Vec<usize>> {
    let mut idx = names.iter().map(|n| labels.index(n)).collect::<Result<Vec<_>>>()?;
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

/// Highest-scoring class among `allowed` (all classes when `None`); the
/// lowest index wins ties.
pub fn predict_class<T: Scalar>(logits: &[T], allowed: Option<&[usize]>) -> usize {
    let mut best: Option<(usize, T)> = None;
    let mut consider = |i: usize| {
        let v = logits[i];
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    };
    match allowed {
        Some(a) => a.iter().copied().for_each(&mut consider),
        None => (0..logits.len()).for_each(&mut consider),
    }
    best.map(|b| b.0).unwrap_or(0)
}

/// Accuracy of `model` on `data`, inputs cropped or padded to `frames`.
///
/// With a `subset`, every label must belong to it and the argmax only
/// ranges over its classes.
pub fn evaluate<T: Scalar>(
    model: &Model<T>,
    data: &Dataset<T>,
    subset: Option<&[usize]>,
    frames: usize,
) -> Result<Accuracy> {
    if data.is_empty() {
        return Err(Error::Empty("test set".into()));
    }
    let k = model.spec.n_classes;
    for e in &data.examples {
        let ok = e.label < k && subset.is_none_or(|s| s.contains(&e.label));
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "test label {} outside the evaluated class set",
                e.label
            )));
        }
    }
    let inputs: Vec<Array2<T>> = data
        .examples
        .iter()
        .map(|e| fix_length(&e.variants[0], frames))
        .collect();
    let logits = model.forward_batch(&inputs)?;
    let correct = logits
        .iter()
        .zip(&data.examples)
        .filter(|(l, e)| predict_class(l.as_slice().expect("contiguous"), subset) == e.label)
        .count();
    Ok(Accuracy {
        correct,
        n: data.len(),
    })
}
