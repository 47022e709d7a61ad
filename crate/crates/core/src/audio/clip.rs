use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono PCM signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Scalar> AudioClip<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample_rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        AudioClip {
            samples: vec![T::zero(); len],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |m, &s| if s.abs() > m { s.abs() } else { m })
    }

    pub fn scaled(&self, gain: T) -> Self {
        AudioClip {
            samples: self.samples.iter().map(|&s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> Self {
        AudioClip {
            samples: self.samples[start..start + len].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn cast<U: Scalar>(&self) -> AudioClip<U> {
        AudioClip {
            samples: self.samples.iter().map(|&s| U::lit(s.as_f64())).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Mean squared amplitude over the whole clip.
pub fn rms_power<T: Scalar>(clip: &AudioClip<T>) -> Result<T> {
    power_of(clip.samples())
}

pub(crate) fn power_of<T: Scalar>(samples: &[T]) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::Empty("clip has no samples".into()));
    }
    let sum: T = samples.iter().map(|&s| s * s).sum();
    Ok(sum / T::from_usize_lossy(samples.len()))
}
