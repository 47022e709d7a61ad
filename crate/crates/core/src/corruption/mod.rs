//! SNR-controlled mixing, noise-segment sampling, parallel noisy sets and
//! feature-domain augmentation.

mod augment;
mod parallel;
mod records;
mod segment;
mod snr;

pub use augment::{apply_masks, draw_masks, spec_augment, speed_perturb, FillValue, Mask, MaskAxis, SpecAugmentPolicy};
pub use parallel::{
    build_parallel_noisy_sets, mix_parallel, mix_single, replay_parallel, NoiseBank, NoiseSource,
    NoisyTriple, ParallelSets, SnrRange,
};
pub use records::{read_mix_records, write_mix_records, MixRecord, NoiseUse, MIX_RECORD_HEADER};
pub use segment::{replay_segment, sample_segment};
pub use snr::{gain_for_snr, measured_snr_db, mix_at_snr, Mixture};
