use ndarray::{s, Array2};
use rand::Rng;

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillValue {
    /// Mean of the input matrix (per-utterance mean log-energy).
    Mean,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpecAugmentPolicy {
    pub max_time_masks: usize,
    pub max_time_mask_width: usize,
    pub max_freq_masks: usize,
    pub max_freq_mask_width: usize,
    pub speed_factors: Vec<f64>,
    pub fill_value: FillValue,
}

impl Default for SpecAugmentPolicy {
    /// Two time masks of up to 10% of a 98-frame input, two frequency masks
    /// of up to 8 bins, speeds {0.9, 1.0, 1.1}, mean fill.
    fn default() -> Self {
        SpecAugmentPolicy {
            max_time_masks: 2,
            max_time_mask_width: 9,
            max_freq_masks: 2,
            max_freq_mask_width: 8,
            speed_factors: vec![0.9, 1.0, 1.1],
            fill_value: FillValue::Mean,
        }
    }
}

impl SpecAugmentPolicy {
    pub fn identity() -> Self {
        SpecAugmentPolicy {
            max_time_masks: 0,
            max_time_mask_width: 0,
            max_freq_masks: 0,
            max_freq_mask_width: 0,
            speed_factors: vec![1.0],
            fill_value: FillValue::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.speed_factors.is_empty() || self.speed_factors.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::InvalidArgument("speed factors must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskAxis {
    Time,
    Freq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mask {
    pub axis: MaskAxis,
    pub start: usize,
    pub width: usize,
}

/// Draws up to the policy's masks for a `frames × bins` input. Widths are
/// uniform in `[0, max]`, clamped to the axis length.
pub fn draw_masks<R: Rng>(frames: usize, bins: usize, policy: &SpecAugmentPolicy, rng: &mut R) -> Vec<Mask> {
    let mut masks = Vec::new();
    for (axis, count, max_w, len) in [
        (MaskAxis::Time, policy.max_time_masks, policy.max_time_mask_width, frames),
        (MaskAxis::Freq, policy.max_freq_masks, policy.max_freq_mask_width, bins),
    ] {
        for _ in 0..count {
            let width = rng.random_range(0..=max_w.min(len));
            let start = rng.random_range(0..=len - width);
            masks.push(Mask { axis, start, width });
        }
    }
    masks
}

/// Overwrites the masked ranges with `fill`.
pub fn apply_masks<T: Scalar>(features: &mut Array2<T>, masks: &[Mask], fill: T) {
    for m in masks {
        let mut view = match m.axis {
            MaskAxis::Time => features.slice_mut(s![m.start..m.start + m.width, ..]),
            MaskAxis::Freq => features.slice_mut(s![.., m.start..m.start + m.width]),
        };
        view.fill(fill);
    }
}

/// Time and frequency masking of a `frames × bins` feature matrix.
pub fn spec_augment<T: Scalar, R: Rng>(features: &Array2<T>, policy: &SpecAugmentPolicy, rng: &mut R) -> Array2<T> {
    let mut out = features.clone();
    if features.is_empty() {
        return out;
    }
    let masks = draw_masks(features.nrows(), features.ncols(), policy, rng);
    let fill = match policy.fill_value {
        FillValue::Mean => features.mean().unwrap_or_else(T::zero),
        FillValue::Constant(v) => T::lit(v),
    };
    apply_masks(&mut out, &masks, fill);
    out
}

/// Linear-interpolation resampling of the time axis by `factor`; output
/// length is `round(len / factor)`.
pub fn speed_perturb<T: Scalar>(clip: &AudioClip<T>, factor: f64) -> Result<AudioClip<T>> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::InvalidArgument(format!("speed factor {factor} must be positive")));
    }
    if factor == 1.0 {
        return Ok(clip.clone());
    }
    let x = clip.samples();
    let out_len = (x.len() as f64 / factor).round() as usize;
    let last = x.len().saturating_sub(1);
    let y = (0..out_len)
        .map(|i| {
            let pos = i as f64 * factor;
            let i0 = (pos.floor() as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = T::lit(pos - i0 as f64);
            x[i0] + (x[i1] - x[i0]) * frac
        })
        .collect();
    AudioClip::new(y, clip.sample_rate())
}
