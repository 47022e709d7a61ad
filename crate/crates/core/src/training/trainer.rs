use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{fix_length, Dataset, TRAIN_FRAMES};
use super::optim::{adam_step, cross_entropy, lr_at, AdamConfig, AdamState};
use crate::corruption::{draw_masks, apply_masks, FillValue, SpecAugmentPolicy};
use crate::error::{Error, Result};
use crate::models::{Gradients, Model};
use crate::scalar::Scalar;
use crate::seed::SeedStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Stop after this many epochs without a new best validation error.
    /// `None` always runs every epoch.
    pub patience: Option<usize>,
    pub frames: usize,
    /// Masking and speed perturbation of training inputs.
    pub specaug: Option<SpecAugmentPolicy>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            lr_start: 1e-3,
            lr_end: 1e-4,
            adam: AdamConfig::default(),
            seed: 0,
            patience: None,
            frames: TRAIN_FRAMES,
            specaug: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.frames == 0 {
            return Err(Error::Config("epochs, batch_size and frames must be positive".into()));
        }
        if !(self.lr_end > 0.0 && self.lr_end <= self.lr_start) {
            return Err(Error::Config(format!(
                "need 0 < lr_end <= lr_start, got {} and {}",
                self.lr_end, self.lr_start
            )));
        }
        if let Some(p) = &self.specaug {
            p.validate()?;
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> Result<f64> {
        lr_at(epoch, self.epochs, self.lr_start, self.lr_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub valid_err: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

const HISTORY_HEADER: [&str; 5] = ["epoch", "train_loss", "train_acc", "valid_err", "lr"];

impl TrainHistory {
    /// Earliest epoch with the minimal validation error.
    pub fn argmin_valid(&self) -> Option<usize> {
        self.epochs
            .iter()
            .min_by(|a, b| a.valid_err.total_cmp(&b.valid_err).then(a.epoch.cmp(&b.epoch)))
            .map(|r| r.epoch)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(HISTORY_HEADER)?;
        for r in &self.epochs {
            w.write_record([
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.train_acc.to_string(),
                r.valid_err.to_string(),
                r.lr.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        if r.headers()?.iter().ne(HISTORY_HEADER) {
            return Err(Error::Malformed(format!("{}: bad history header", path.display())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Malformed(format!("bad number {s:?} in history")))
        };
        let mut h = TrainHistory::default();
        for rec in r.records() {
            let rec = rec?;
            h.epochs.push(EpochRecord {
                epoch: num(&rec[0])? as usize,
                train_loss: num(&rec[1])?,
                train_acc: num(&rec[2])?,
                valid_err: num(&rec[3])?,
                lr: num(&rec[4])?,
            });
        }
        h.best_epoch = h.argmin_valid().unwrap_or(0);
        Ok(h)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Checkpoint with the lowest validation error (earliest on ties).
    pub best: Model<T>,
    /// Model after the last epoch run.
    pub last: Model<T>,
    pub history: TrainHistory,
}

/// Error rate of `model` on fixed-length inputs.
pub fn error_rate<T: Scalar>(model: &Model<T>, inputs: &[Array2<T>], labels: &[usize]) -> Result<f64> {
    let logits = model.forward_batch(inputs)?;
    let wrong = logits
        .iter()
        .zip(labels)
        .filter(|(l, &y)| argmax(l.iter().copied()) != y)
        .count();
    Ok(wrong as f64 / labels.len().max(1) as f64)
}

/// Index of the first maximum.
pub fn argmax<T: PartialOrd>(xs: impl IntoIterator<Item = T>) -> usize {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in xs.into_iter().enumerate() {
        match &best {
            Some((_, b)) if !(v > *b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|b| b.0).unwrap_or(0)
}

fn augmented<T: Scalar, R: Rng>(variants: &[Array2<T>], policy: &SpecAugmentPolicy, frames: usize, rng: &mut R) -> Array2<T> {
    let pick = rng.random_range(0..variants.len());
    let mut x = fix_length(&variants[pick], frames);
    let masks = draw_masks(x.nrows(), x.ncols(), policy, rng);
    let fill = match policy.fill_value {
        FillValue::Mean => x.mean().unwrap_or_else(T::zero),
        FillValue::Constant(v) => T::lit(v),
    };
    apply_masks(&mut x, &masks, fill);
    x
}

/// Trains `model` with mini-batch Adam and returns the best and final
/// checkpoints. Fully determined by `config.seed` and the data.
pub fn train<T: Scalar>(
    mut model: Model<T>,
    train_set: &Dataset<T>,
    valid_set: &Dataset<T>,
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if train_set.is_empty() || valid_set.is_empty() {
        return Err(Error::Empty("training or validation set".into()));
    }
    let n_classes = model.spec.n_classes;
    if let Some(e) = train_set
        .examples
        .iter()
        .chain(&valid_set.examples)
        .find(|e| e.label >= n_classes)
    {
        return Err(Error::InvalidArgument(format!(
            "label {} exceeds model's {n_classes} classes",
            e.label
        )));
    }
    let (valid_x, valid_y) = valid_set.plain(config.frames);
    let plain_train = config.specaug.is_none().then(|| train_set.plain(config.frames).0);
    let stream = SeedStream::new(config.seed).child("train");
    let mut adam = AdamState::new(model.params().into_iter().map(|(_, p)| p));
    let mut grads = Gradients::zeros_like(&model);
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Model<T>)> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch)?;
        let mut rng = stream.index(epoch as u64).rng();
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0f64, 0usize);
        for batch in order.chunks(config.batch_size) {
            grads.fill_zero();
            let scale = T::one() / T::from_usize_lossy(batch.len());
            for &i in batch {
                let ex = &train_set.examples[i];
                let owned;
                let x = match (&plain_train, &config.specaug) {
                    (Some(xs), _) => &xs[i],
                    (None, Some(p)) => {
                        owned = augmented(&ex.variants, p, config.frames, &mut rng);
                        &owned
                    }
                    (None, None) => unreachable!(),
                };
                let pass = model.forward(x.view())?;
                let (loss, dlogits) = cross_entropy(pass.logits.view(), ex.label)?;
                let loss = loss.as_f64();
                if !loss.is_finite() {
                    return Err(Error::TrainingAborted {
                        epoch,
                        reason: "non-finite loss".into(),
                    });
                }
                loss_sum += loss;
                correct += (argmax(pass.logits.iter().copied()) == ex.label) as usize;
                model.backward_into(&pass, (dlogits * scale).view(), &mut grads)?;
            }
            let mut params = model.params_mut();
            adam_step(&mut params, &grads.tensors, &mut adam, lr, &config.adam).map_err(|e| match e {
                Error::NonFinite(what) => Error::TrainingAborted {
                    epoch,
                    reason: format!("non-finite {what}"),
                },
                other => other,
            })?;
        }
        let valid_err = error_rate(&model, &valid_x, &valid_y)?;
        let n = train_set.len() as f64;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n,
            train_acc: correct as f64 / n,
            valid_err,
            lr,
        });
        log::debug!(
            "{} epoch {epoch}: loss {:.4} acc {:.3} valid_err {valid_err:.4}",
            model.spec.id(),
            loss_sum / n,
            correct as f64 / n
        );
        if best.as_ref().is_none_or(|(e, _)| valid_err < *e) {
            best = Some((valid_err, model.clone()));
            history.best_epoch = epoch;
        }
        if let Some(p) = config.patience {
            if epoch - history.best_epoch >= p {
                break;
            }
        }
    }
    let (_, best) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        best,
        last: model,
        history,
    })
}
