use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::clip::AudioClip;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const PCM16_SCALE: f64 = 32768.0;

/// Sample encoding used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Reads a mono PCM16 or float32 WAV file.
pub fn read_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<AudioClip<T>> {
    let path = path.as_ref();
    let reader = WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Multichannel(spec.channels));
    }
    let samples: Vec<T> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| T::lit(v as f64 / PCM16_SCALE)))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| T::lit(v as f64)))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding(format!("{fmt:?} {bits}-bit")));
        }
    };
    AudioClip::new(samples, spec.sample_rate)
}

/// Writes a mono PCM16 WAV file. Amplitudes must lie in [-1, 1].
pub fn write_wav<T: Scalar>(clip: &AudioClip<T>, path: impl AsRef<Path>) -> Result<()> {
    write_wav_as(clip, path, WavEncoding::Pcm16)
}

pub fn write_wav_as<T: Scalar>(
    clip: &AudioClip<T>,
    path: impl AsRef<Path>,
    encoding: WavEncoding,
) -> Result<()> {
    if let Some(&s) = clip.samples().iter().find(|s| s.abs() > T::one()) {
        return Err(Error::OutOfRange(s.as_f64()));
    }
    let spec = match encoding {
        WavEncoding::Pcm16 => WavSpec {
            channels: 1,
            sample_rate: clip.sample_rate(),
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        },
        WavEncoding::Float32 => WavSpec {
            channels: 1,
            sample_rate: clip.sample_rate(),
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        },
    };
    let path = path.as_ref();
    let mut writer = WavWriter::create(path, spec)?;
    for &s in clip.samples() {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (s.as_f64() * PCM16_SCALE).round().clamp(-32768.0, 32767.0);
                writer.write_sample(q as i16)?;
            }
            WavEncoding::Float32 => writer.write_sample(s.as_f64() as f32)?,
        }
    }
    writer.finalize()?;
    Ok(())
}
