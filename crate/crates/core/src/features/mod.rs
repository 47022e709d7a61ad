//! Framing, STFT, log-mel, MFCC, raw frames and external feature files.

mod config;
mod external;
mod extract;

use ndarray::Array2;

pub use config::{FeatureConfig, FeatureType};
pub use external::{load_external_features, parse_external_features, write_external_features, RLFT_MAGIC};
pub use extract::{
    hz_to_mel, log_mel, mel_points, mel_to_hz, mfcc, normalize, raw_frames, stft_magnitude, FeatureExtractor,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `frames × dims` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub data: Array2<T>,
    /// Frames per second, when known.
    pub frame_rate: Option<f64>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(data: Array2<T>, frame_rate: Option<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(FeatureMatrix { data, frame_rate })
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dims(&self) -> usize {
        self.data.ncols()
    }
}
