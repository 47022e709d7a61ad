//! Noise-robustness benchmarking for small spoken-command classifiers.
//!
//! Builds SNR-controlled noisy corpora, trains a grid of compact models from
//! scratch and measures how robustness tracks clean accuracy across the grid.
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod audio;
pub mod corruption;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod metrics;
pub mod models;
pub mod report;
mod scalar;
pub mod seed;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type AudioClip32 = audio::AudioClip<f32>;
pub type AudioClip64 = audio::AudioClip<f64>;
pub type FeatureMatrix32 = features::FeatureMatrix<f32>;
pub type FeatureMatrix64 = features::FeatureMatrix<f64>;
pub type Model32 = models::Model<f32>;
pub type Model64 = models::Model<f64>;
pub type Dataset32 = training::Dataset<f32>;
pub type Dataset64 = training::Dataset<f64>;
pub type PreparedData32 = evaluation::PreparedData<f32>;
pub type PreparedData64 = evaluation::PreparedData<f64>;
