//! Loss, optimizer, schedule and the training loop.

mod data;
mod optim;
mod trainer;

pub use data::{fix_length, Dataset, Example, FeatureSource, LabelMap, TRAIN_FRAMES};
pub use optim::{adam_step, cross_entropy, lr_at, AdamConfig, AdamState};
pub use trainer::{argmax, error_rate, train, EpochRecord, TrainConfig, TrainHistory, TrainOutcome};
