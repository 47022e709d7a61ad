//! Audio representation, WAV I/O, manifests and the synthetic corpus.

mod clip;
mod manifest;
pub mod synth;
mod wav;

pub use clip::{rms_power, AudioClip, DEFAULT_SAMPLE_RATE};
pub(crate) use clip::power_of;
pub use manifest::{make_splits, CorpusManifest, ManifestEntry, Split};
pub use synth::{class_index, synth_clip, SynthKind, COMMANDS};
pub use wav::{read_wav, write_wav, write_wav_as, WavEncoding};
