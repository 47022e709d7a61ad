use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub fft_size: usize,
    pub window_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f64,
    /// Per-utterance, per-dimension mean/variance normalization.
    pub normalize: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            fft_size: 400,
            window_size: 400,
            hop: 160,
            sample_rate: 16_000,
            n_mels: 64,
            n_mfcc: 20,
            fmin: 0.0,
            fmax: 8000.0,
            log_floor: 1e-10,
            normalize: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("feature config: {m}")));
        if self.window_size == 0 || self.window_size > self.fft_size {
            return bad("need 0 < window_size <= fft_size");
        }
        if self.hop == 0 {
            return bad("hop must be positive");
        }
        if self.n_mels == 0 || self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return bad("need 0 < n_mfcc <= n_mels");
        }
        if !(0.0 <= self.fmin && self.fmin < self.fmax && self.fmax <= self.sample_rate as f64 / 2.0) {
            return bad("need 0 <= fmin < fmax <= sample_rate / 2");
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive");
        }
        Ok(())
    }

    /// Frames produced for a clip of `len` samples.
    pub fn frame_count(&self, len: usize) -> Option<usize> {
        (len >= self.window_size).then(|| 1 + (len - self.window_size) / self.hop)
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop as f64
    }

    /// Frames in a one-second clip (98 at the defaults).
    pub fn frames_per_second(&self) -> usize {
        self.frame_count(self.sample_rate as usize).unwrap_or(0)
    }

    pub fn dims(&self, feature: FeatureType) -> Option<usize> {
        match feature {
            FeatureType::Raw => Some(self.window_size),
            FeatureType::Mel => Some(self.n_mels),
            FeatureType::Mfcc => Some(self.n_mfcc),
            FeatureType::External => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureType {
    Raw,
    Mel,
    Mfcc,
    /// Precomputed features read from RLFT files.
    External,
}

impl FeatureType {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureType::Raw => "raw",
            FeatureType::Mel => "mel",
            FeatureType::Mfcc => "mfcc",
            FeatureType::External => "external",
        }
    }
}

impl fmt::Display for FeatureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(FeatureType::Raw),
            "mel" => Ok(FeatureType::Mel),
            "mfcc" => Ok(FeatureType::Mfcc),
            "external" => Ok(FeatureType::External),
            other => Err(Error::InvalidArgument(format!("unknown feature type {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = FeatureConfig::default();
        c.validate().unwrap();
        assert_eq!(c.frame_count(16_000), Some(98));
        assert_eq!(c.frame_count(399), None);
        assert_eq!(c.dims(FeatureType::Mel), Some(64));
        assert_eq!(c.dims(FeatureType::Mfcc), Some(20));
    }

    #[test]
    fn invalid_configs() {
        for c in [
            FeatureConfig { window_size: 512, ..Default::default() },
            FeatureConfig { hop: 0, ..Default::default() },
            FeatureConfig { n_mfcc: 65, ..Default::default() },
            FeatureConfig { fmax: 9000.0, ..Default::default() },
            FeatureConfig { fmin: 8000.0, ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
    }
}
