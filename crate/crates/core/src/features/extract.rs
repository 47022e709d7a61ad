use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::config::{FeatureConfig, FeatureType};
use super::FeatureMatrix;
use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Corner frequencies (Hz) of the triangular filters: `n_mels + 2` points
/// equally spaced on the HTK mel scale.
pub fn mel_points(config: &FeatureConfig) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(config.fmin), hz_to_mel(config.fmax));
    let n = config.n_mels + 1;
    (0..=n)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / n as f64))
        .collect()
}

/// Reusable STFT / mel / DCT machinery for one configuration.
pub struct FeatureExtractor<T: Scalar> {
    config: FeatureConfig,
    fft: Arc<dyn Fft<T>>,
    window: Vec<T>,
    /// `n_bins × n_mels`, unit-peak triangles.
    filterbank: Array2<T>,
    /// `n_mels × n_mfcc` orthonormal DCT-II basis.
    dct: Array2<T>,
}

impl<T: Scalar> FeatureExtractor<T> {
    pub fn new(config: &FeatureConfig) -> Result<Self> {
        config.validate()?;
        let fft = FftPlanner::new().plan_fft_forward(config.fft_size);
        let n = config.window_size as f64;
        // periodic Hann
        let window = (0..config.window_size)
            .map(|i| T::lit(0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos()))
            .collect();

        let points = mel_points(config);
        let bin_hz = config.sample_rate as f64 / config.fft_size as f64;
        let filterbank = Array2::from_shape_fn((config.n_bins(), config.n_mels), |(b, m)| {
            let f = b as f64 * bin_hz;
            let (l, c, r) = (points[m], points[m + 1], points[m + 2]);
            let w = ((f - l) / (c - l)).min((r - f) / (r - c));
            T::lit(w.max(0.0))
        });

        let nm = config.n_mels as f64;
        let dct = Array2::from_shape_fn((config.n_mels, config.n_mfcc), |(i, k)| {
            let scale = if k == 0 { (1.0 / nm).sqrt() } else { (2.0 / nm).sqrt() };
            T::lit(scale * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * nm)).cos())
        });

        Ok(FeatureExtractor {
            config: config.clone(),
            fft,
            window,
            filterbank,
            dct,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn filterbank(&self) -> &Array2<T> {
        &self.filterbank
    }

    fn frames(&self, clip: &AudioClip<T>) -> Result<usize> {
        self.config.frame_count(clip.len()).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "clip of {} samples is shorter than one {}-sample window",
                clip.len(),
                self.config.window_size
            ))
        })
    }

    pub fn raw_frames(&self, clip: &AudioClip<T>) -> Result<Array2<T>> {
        let frames = self.frames(clip)?;
        let (w, hop) = (self.config.window_size, self.config.hop);
        let x = clip.samples();
        Ok(Array2::from_shape_fn((frames, w), |(t, i)| x[t * hop + i]))
    }

    /// `frames × (fft_size/2 + 1)` power spectrum of Hann-windowed frames.
    pub fn power_spectrum(&self, clip: &AudioClip<T>) -> Result<Array2<T>> {
        let frames = self.frames(clip)?;
        let n_bins = self.config.n_bins();
        let mut out = Array2::zeros((frames, n_bins));
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.config.fft_size];
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); self.fft.get_inplace_scratch_len()];
        let x = clip.samples();
        for t in 0..frames {
            let start = t * self.config.hop;
            for (i, c) in buf.iter_mut().enumerate() {
                let v = if i < self.config.window_size {
                    x[start + i] * self.window[i]
                } else {
                    T::zero()
                };
                *c = Complex::new(v, T::zero());
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (o, c) in out.row_mut(t).iter_mut().zip(&buf[..n_bins]) {
                *o = c.norm_sqr();
            }
        }
        Ok(out)
    }

    pub fn stft_magnitude(&self, clip: &AudioClip<T>) -> Result<Array2<T>> {
        Ok(self.power_spectrum(clip)?.mapv(|p| p.sqrt()))
    }

    pub fn log_mel(&self, clip: &AudioClip<T>) -> Result<Array2<T>> {
        let mel = self.power_spectrum(clip)?.dot(&self.filterbank);
        let floor = T::lit(self.config.log_floor);
        Ok(mel.mapv(|e| e.max(floor).ln()))
    }

    pub fn mfcc_from_log_mel(&self, log_mel: &Array2<T>) -> Array2<T> {
        log_mel.dot(&self.dct)
    }

    pub fn mfcc(&self, clip: &AudioClip<T>) -> Result<Array2<T>> {
        Ok(self.mfcc_from_log_mel(&self.log_mel(clip)?))
    }

    /// Extracts `feature` and applies the configured normalization.
    pub fn extract(&self, clip: &AudioClip<T>, feature: FeatureType) -> Result<FeatureMatrix<T>> {
        let data = match feature {
            FeatureType::Raw => self.raw_frames(clip)?,
            FeatureType::Mel => self.log_mel(clip)?,
            FeatureType::Mfcc => self.mfcc(clip)?,
            FeatureType::External => {
                return Err(Error::InvalidArgument(
                    "external features are loaded from files, not extracted".into(),
                ))
            }
        };
        let data = if self.config.normalize { normalize(data) } else { data };
        FeatureMatrix::new(data, Some(self.config.frame_rate()))
    }
}

/// Per-dimension zero-mean, unit-variance over frames. Constant dimensions
/// map to zero.
pub fn normalize<T: Scalar>(mut x: Array2<T>) -> Array2<T> {
    if x.nrows() == 0 {
        return x;
    }
    let floor = T::lit(1e-5);
    for mut col in x.axis_iter_mut(Axis(1)) {
        let n = T::from_usize_lossy(col.len());
        let mean = col.sum() / n;
        let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let std = var.sqrt();
        if std < floor {
            col.fill(T::zero());
        } else {
            col.mapv_inplace(|v| (v - mean) / std);
        }
    }
    x
}

pub fn stft_magnitude<T: Scalar>(clip: &AudioClip<T>, config: &FeatureConfig) -> Result<Array2<T>> {
    FeatureExtractor::new(config)?.stft_magnitude(clip)
}

pub fn log_mel<T: Scalar>(clip: &AudioClip<T>, config: &FeatureConfig) -> Result<Array2<T>> {
    FeatureExtractor::new(config)?.log_mel(clip)
}

pub fn mfcc<T: Scalar>(clip: &AudioClip<T>, config: &FeatureConfig) -> Result<Array2<T>> {
    FeatureExtractor::new(config)?.mfcc(clip)
}

pub fn raw_frames<T: Scalar>(clip: &AudioClip<T>, config: &FeatureConfig) -> Result<Array2<T>> {
    FeatureExtractor::new(config)?.raw_frames(clip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> FeatureConfig {
        FeatureConfig::default()
    }

    fn tone(freq: f64, amp: f64) -> AudioClip<f64> {
        AudioClip::new(
            (0..16_000).map(|i| amp * (2.0 * PI * freq * i as f64 / 16_000.0).sin()).collect(),
            16_000,
        )
        .unwrap()
    }

    fn random_clip(seed: u64, len: usize) -> AudioClip<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioClip::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 16_000).unwrap()
    }

    #[test]
    fn frame_count_and_zero_signal() {
        let z = AudioClip::<f64>::zeros(16_000, 16_000);
        let m = stft_magnitude(&z, &cfg()).unwrap();
        assert_eq!(m.dim(), (98, 201));
        assert!(m.iter().all(|&v| v == 0.0));
        let lm = log_mel(&z, &cfg()).unwrap();
        assert_eq!(lm.ncols(), 64);
        assert!(lm.iter().all(|&v| v == (1e-10f64).ln()));
    }

    #[test]
    fn short_clip_rejected() {
        let c = AudioClip::<f64>::zeros(399, 16_000);
        assert!(stft_magnitude(&c, &cfg()).is_err());
        assert!(log_mel(&c, &cfg()).is_err());
        assert!(mfcc(&c, &cfg()).is_err());
        assert!(raw_frames(&c, &cfg()).is_err());
    }

    #[test]
    fn bin_centered_tone_peaks_at_its_bin() {
        // bin 25 = 1000 Hz at 40 Hz resolution
        let m = stft_magnitude(&tone(1000.0, 0.5), &cfg()).unwrap();
        for row in m.rows() {
            let arg = (0..row.len()).max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap()).unwrap();
            assert_eq!(arg, 25);
        }
    }

    #[test]
    fn tone_at_filter_center_peaks_in_that_filter() {
        let c = cfg();
        let pts = mel_points(&c);
        for k in [10usize, 20, 30, 40, 50, 60] {
            let lm = log_mel(&tone(pts[k + 1], 0.5), &c).unwrap();
            for row in lm.rows() {
                let arg = (0..64).max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap()).unwrap();
                assert_eq!(arg, k, "filter {k}");
            }
        }
    }

    #[test]
    fn mfcc_of_constant_log_mel() {
        let ex = FeatureExtractor::<f64>::new(&cfg()).unwrap();
        let lm = Array2::from_elem((3, 64), -2.5);
        let cc = ex.mfcc_from_log_mel(&lm);
        assert_eq!(cc.ncols(), 20);
        for row in cc.rows() {
            assert!((row[0] - (-2.5 * 8.0)).abs() < 1e-12);
            assert!(row.iter().skip(1).all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn raw_frames_share_framing() {
        let c = random_clip(4, 5000);
        let r = raw_frames(&c, &cfg()).unwrap();
        assert_eq!(r.nrows(), stft_magnitude(&c, &cfg()).unwrap().nrows());
        assert_eq!(r.row(0).to_vec(), c.samples()[..400].to_vec());
        for t in 0..r.nrows() {
            assert_eq!(r[(t, 0)], c.samples()[t * 160]);
        }
    }

    #[test]
    fn louder_never_lowers_log_mel() {
        let c = random_clip(9, 16_000);
        let a = log_mel(&c, &cfg()).unwrap();
        let b = log_mel(&c.scaled(1.7), &cfg()).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| y >= x));
    }

    #[test]
    fn normalization() {
        let ex = FeatureExtractor::<f64>::new(&cfg()).unwrap();
        let f = ex.extract(&random_clip(2, 16_000), FeatureType::Mel).unwrap();
        for col in f.data.columns() {
            let mean = col.mean().unwrap();
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-9 && (var - 1.0).abs() < 1e-6);
        }
        let z = ex.extract(&AudioClip::zeros(16_000, 16_000), FeatureType::Mfcc).unwrap();
        assert!(z.data.iter().all(|&v| v == 0.0));
    }
}
