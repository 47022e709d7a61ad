use std::path::Path;

use ndarray::{s, Array2};
use rayon::prelude::*;

use crate::audio::{CorpusManifest, ManifestEntry};
use crate::corruption::{speed_perturb, SpecAugmentPolicy};
use crate::error::{Error, Result};
use crate::features::{load_external_features, FeatureExtractor, FeatureType};
use crate::scalar::Scalar;

/// Fixed training length in frames (1 s at a 10 ms hop with a 25 ms window).
pub const TRAIN_FRAMES: usize = 98;

/// Sorted label inventory mapping names to class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<String>,
}

impl LabelMap {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(labels: I) -> Result<Self> {
        let mut labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        labels.sort();
        let n = labels.len();
        labels.dedup();
        if labels.len() != n {
            return Err(Error::InvalidArgument("duplicate labels in inventory".into()));
        }
        if labels.len() < 2 {
            return Err(Error::InvalidArgument("need at least 2 labels".into()));
        }
        Ok(LabelMap { labels })
    }

    pub fn from_manifest(manifest: &CorpusManifest) -> Result<Self> {
        Self::new(manifest.labels())
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(label))
            .map_err(|_| Error::UnknownLabel(label.to_string()))
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Writes one label per line, in class-index order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.labels.join("\n");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let labels: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Malformed(format!("{}: labels must be sorted and unique", path.display())));
        }
        Self::new(labels)
    }
}

/// Crops to the first `frames` frames or zero-pads at the end.
pub fn fix_length<T: Scalar>(x: &Array2<T>, frames: usize) -> Array2<T> {
    let mut out = Array2::zeros((frames, x.ncols()));
    let n = x.nrows().min(frames);
    out.slice_mut(s![..n, ..]).assign(&x.slice(s![..n, ..]));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    /// Feature matrices, one per speed factor (a single entry without
    /// augmentation).
    pub variants: Vec<Array2<T>>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub examples: Vec<Example<T>>,
    pub dims: usize,
}

/// How manifest entries are turned into feature matrices.
#[derive(Clone, Copy)]
pub struct FeatureSource<'a, T: Scalar> {
    pub extractor: &'a FeatureExtractor<T>,
    pub feature: FeatureType,
}

impl<T: Scalar> FeatureSource<'_, T> {
    fn features(&self, manifest: &CorpusManifest, entry: &ManifestEntry, speeds: &[f64]) -> Result<Vec<Array2<T>>> {
        if self.feature == FeatureType::External {
            let f = load_external_features(manifest.resolve(entry))?;
            return Ok(vec![f.data]);
        }
        let clip = manifest.load_audio::<T>(entry, self.extractor.config().sample_rate)?;
        speeds
            .iter()
            .map(|&s| {
                let c = speed_perturb(&clip, s)?;
                Ok(self.extractor.extract(&c, self.feature)?.data)
            })
            .collect()
    }
}

impl<T: Scalar> Dataset<T> {
    pub fn new(examples: Vec<Example<T>>) -> Result<Self> {
        let first = examples
            .first()
            .ok_or_else(|| Error::Empty("dataset".into()))?;
        let dims = first.variants[0].ncols();
        if examples
            .iter()
            .flat_map(|e| &e.variants)
            .any(|v| v.ncols() != dims)
        {
            return Err(Error::Shape("examples have differing feature widths".into()));
        }
        Ok(Dataset { examples, dims })
    }

    /// Featurizes every entry. With `augment`, one variant per speed factor
    /// is precomputed; masks are drawn during training.
    pub fn from_manifest(
        manifest: &CorpusManifest,
        labels: &LabelMap,
        source: &FeatureSource<'_, T>,
        augment: Option<&SpecAugmentPolicy>,
    ) -> Result<Self> {
        if manifest.is_empty() {
            return Err(Error::Empty("manifest".into()));
        }
        let speeds: Vec<f64> = match augment {
            Some(p) => {
                p.validate()?;
                // Unit speed first so variant 0 is the unperturbed input.
                let mut v = p.speed_factors.clone();
                v.sort_by_key(|&s| s != 1.0);
                v
            }
            None => vec![1.0],
        };
        let examples = manifest
            .entries
            .par_iter()
            .map(|e| {
                Ok(Example {
                    variants: source.features(manifest, e, &speeds)?,
                    label: labels.index(&e.label)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(examples)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Unaugmented inputs (first variant) at a fixed length, with labels.
    pub fn plain(&self, frames: usize) -> (Vec<Array2<T>>, Vec<usize>) {
        self.examples
            .iter()
            .map(|e| (fix_length(&e.variants[0], frames), e.label))
            .unzip()
    }
}
