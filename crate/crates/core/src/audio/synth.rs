//! Deterministic synthetic speech commands and noise textures.
//!
//! Keywords are sequences of voiced syllables (harmonic stacks shaped by a
//! class-specific formant pattern) with optional fricative bursts. Speaker
//! seeds perturb pitch, vocal-tract scale, speaking rate and loudness.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::clip::AudioClip;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{stable_hash, SeedStream};

/// Command vocabulary, in class-index order.
pub const COMMANDS: [&str; 35] = [
    "yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go", "zero", "one", "two",
    "three", "four", "five", "six", "seven", "eight", "nine", "bed", "bird", "cat", "dog", "happy",
    "house", "marvin", "sheila", "tree", "wow", "backward", "forward", "follow", "learn", "visual",
];

pub fn class_index(label: &str) -> Option<usize> {
    COMMANDS.iter().position(|&c| c == label)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// An utterance of `class_id` by the speaker `speaker_seed`; `take`
    /// selects one of the speaker's repetitions.
    Keyword {
        class_id: usize,
        speaker_seed: u64,
        take: u64,
    },
    /// Like `Keyword`, but from a shifted speaker population recorded through
    /// a different channel. Used for speaker/corpus-shift test sets.
    ShiftedKeyword {
        class_id: usize,
        speaker_seed: u64,
        take: u64,
    },
    /// Long quasi-stationary colored noise with engine-like hum.
    EnvNoise { seed: u64 },
    /// A short decaying burst embedded in near-silence.
    ImpNoise { seed: u64 },
    /// Tonal babble over pink-ish noise, unlike either training bank.
    ExtNoise { seed: u64 },
}

impl SynthKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            SynthKind::Keyword { .. } => "keyword",
            SynthKind::ShiftedKeyword { .. } => "keyword_shifted",
            SynthKind::EnvNoise { .. } => "env_noise",
            SynthKind::ImpNoise { .. } => "imp_noise",
            SynthKind::ExtNoise { .. } => "ext_noise",
        }
    }

    /// Resolves a `synth://kind/seed` pseudo-path. Keyword kinds take their
    /// class from `label` and their speaker from `speaker_id`.
    pub fn from_pseudo_path(path: &str, label: &str, speaker_id: &str) -> Result<Self> {
        let rest = path
            .strip_prefix("synth://")
            .ok_or_else(|| Error::InvalidArgument(format!("not a synth path: {path}")))?;
        let (kind, seed) = rest
            .split_once('/')
            .ok_or_else(|| Error::InvalidArgument(format!("missing seed in {path}")))?;
        let seed: u64 = seed
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad seed in {path}")))?;
        let keyword = |shifted: bool| -> Result<Self> {
            let class_id =
                class_index(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            let speaker_seed = stable_hash(speaker_id);
            Ok(if shifted {
                SynthKind::ShiftedKeyword {
                    class_id,
                    speaker_seed,
                    take: seed,
                }
            } else {
                SynthKind::Keyword {
                    class_id,
                    speaker_seed,
                    take: seed,
                }
            })
        };
        match kind {
            "keyword" => keyword(false),
            "keyword_shifted" => keyword(true),
            "env_noise" => Ok(SynthKind::EnvNoise { seed }),
            "imp_noise" => Ok(SynthKind::ImpNoise { seed }),
            "ext_noise" => Ok(SynthKind::ExtNoise { seed }),
            other => Err(Error::InvalidArgument(format!("unknown synth kind {other:?}"))),
        }
    }
}

/// Generates a clip of `duration` seconds at `sample_rate`.
pub fn synth_clip<T: Scalar>(kind: SynthKind, duration: f64, sample_rate: u32) -> Result<AudioClip<T>> {
    if !(duration > 0.0) {
        return Err(Error::InvalidArgument(format!("duration {duration} must be positive")));
    }
    let n = (duration * sample_rate as f64).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument("duration shorter than one sample".into()));
    }
    let fs = sample_rate as f64;
    let samples = match kind {
        SynthKind::Keyword {
            class_id,
            speaker_seed,
            take,
        } => keyword(class_id, &Speaker::regular(speaker_seed), take, n, fs, false),
        SynthKind::ShiftedKeyword {
            class_id,
            speaker_seed,
            take,
        } => keyword(class_id, &Speaker::shifted(speaker_seed), take, n, fs, true),
        SynthKind::EnvNoise { seed } => env_noise(seed, n, fs),
        SynthKind::ImpNoise { seed } => imp_noise(seed, n, fs),
        SynthKind::ExtNoise { seed } => ext_noise(seed, n, fs),
    };
    AudioClip::new(samples.into_iter().map(T::lit).collect(), sample_rate)
}

struct Speaker {
    f0: f64,
    tract_scale: f64,
    rate: f64,
    level: f64,
    breath: f64,
}

impl Speaker {
    fn regular(seed: u64) -> Self {
        let mut rng = SeedStream::new(seed).child("speaker").rng();
        Speaker {
            f0: rng.random_range(95.0..230.0),
            tract_scale: rng.random_range(0.88..1.12),
            rate: rng.random_range(0.85..1.15),
            level: rng.random_range(0.25..0.5),
            breath: rng.random_range(0.005..0.02),
        }
    }

    fn shifted(seed: u64) -> Self {
        let mut rng = SeedStream::new(seed).child("speaker-shifted").rng();
        Speaker {
            f0: rng.random_range(80.0..280.0),
            tract_scale: rng.random_range(0.82..1.2),
            rate: rng.random_range(0.75..1.25),
            level: rng.random_range(0.2..0.6),
            breath: rng.random_range(0.005..0.03),
        }
    }
}

struct Syllable {
    formants: [f64; 3],
    duration: f64,
    pitch_slope: f64,
    fricative: Option<(f64, f64)>,
}

fn class_template(class_id: usize) -> Vec<Syllable> {
    let mut rng = SeedStream::new(0x6b65_7977_6f72_64).index(class_id as u64).rng();
    let n_syll = 1 + (class_id % 3).min(1) + usize::from(rng.random_bool(0.3));
    (0..n_syll)
        .map(|j| {
            // spread class templates over the vowel space
            let f1 = 280.0 + ((class_id * 5 + j * 3) % 8) as f64 * 80.0 + rng.random_range(0.0..40.0);
            let f2 = 850.0 + ((class_id * 3 + j * 7) % 9) as f64 * 180.0 + rng.random_range(0.0..80.0);
            let f3 = 2300.0 + rng.random_range(0.0..900.0);
            let fricative = if (class_id + j) % 4 == 1 {
                let lo = rng.random_range(2500.0..4500.0);
                Some((lo, lo + rng.random_range(1000.0..2500.0)))
            } else {
                None
            };
            Syllable {
                formants: [f1, f2, f3],
                duration: rng.random_range(0.14..0.24),
                pitch_slope: rng.random_range(-0.25..0.15),
                fricative,
            }
        })
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn keyword(class_id: usize, speaker: &Speaker, take: u64, n: usize, fs: f64, shifted: bool) -> Vec<f64> {
    let template = class_template(class_id);
    let mut rng = SeedStream::new(take)
        .child(&format!("take/{class_id}/{}", speaker.f0.to_bits()))
        .rng();
    let mut out = vec![0.0; n];
    let rate = speaker.rate * rng.random_range(0.93..1.07);
    let f0 = speaker.f0 * rng.random_range(0.95..1.05);
    let level = speaker.level * rng.random_range(0.8..1.2);
    let scale = speaker.tract_scale * rng.random_range(0.97..1.03);

    let total: f64 = template.iter().map(|s| s.duration / rate).sum::<f64>()
        + 0.03 * template.len() as f64;
    let span = n as f64 / fs;
    let max_onset = (span - total - 0.04).max(0.02);
    let mut t0 = rng.random_range(0.02..=max_onset.max(0.021));

    for syl in &template {
        let dur = syl.duration / rate;
        let start = (t0 * fs) as usize;
        let len = ((dur * fs) as usize).min(n.saturating_sub(start));
        let formants = syl.formants.map(|f| f * scale * rng.random_range(0.97..1.03));
        let bandwidths = [90.0, 120.0, 170.0];
        let mut phase = rng.random_range(0.0..2.0 * PI);
        for i in 0..len {
            let u = i as f64 / len.max(1) as f64;
            let env = (PI * u).sin().powf(0.6);
            let pitch = f0 * (1.0 + syl.pitch_slope * u);
            phase += 2.0 * PI * pitch / fs;
            let mut v = 0.0;
            let mut k = 1.0;
            while k * pitch < 3800.0 {
                let f = k * pitch;
                let gain: f64 = formants
                    .iter()
                    .zip(bandwidths)
                    .map(|(&fc, bw)| 1.0 / (1.0 + ((f - fc) / bw).powi(2)))
                    .sum();
                v += gain * (k * phase).sin() / k.sqrt();
                k += 1.0;
            }
            out[start + i] += level * 0.35 * env * v;
        }
        if let Some((lo, hi)) = syl.fricative {
            let flen = ((0.06 / rate) * fs) as usize;
            let fstart = (start + len).min(n);
            let band = band_noise(&mut rng, flen.min(n - fstart), fs, lo * scale, hi * scale, 12);
            for (i, b) in band.into_iter().enumerate() {
                let u = i as f64 / flen as f64;
                out[fstart + i] += level * 0.5 * (PI * u).sin() * b;
            }
        }
        t0 += dur + 0.03;
    }
    for s in out.iter_mut() {
        *s += speaker.breath * 0.2 * gaussian(&mut rng);
    }
    if shifted {
        // different channel: first-order high-shelf tilt
        let mut prev = 0.0;
        for s in out.iter_mut() {
            let x = *s;
            *s = x - 0.6 * prev;
            prev = x;
        }
    }
    normalize_peak(&mut out, 0.95);
    out
}

/// Sum of random-phase sinusoids spanning `[lo, hi]` Hz, unit-ish RMS.
fn band_noise(rng: &mut ChaCha8Rng, n: usize, fs: f64, lo: f64, hi: f64, partials: usize) -> Vec<f64> {
    let comps: Vec<(f64, f64)> = (0..partials)
        .map(|_| (rng.random_range(lo..hi), rng.random_range(0.0..2.0 * PI)))
        .collect();
    let norm = (2.0 / partials as f64).sqrt();
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            norm * comps
                .iter()
                .map(|&(f, p)| (2.0 * PI * f * t + p).sin())
                .sum::<f64>()
        })
        .collect()
}

fn env_noise(seed: u64, n: usize, fs: f64) -> Vec<f64> {
    let mut rng = SeedStream::new(seed).child("env").rng();
    let cutoff = rng.random_range(250.0..1600.0);
    let alpha = (-2.0 * PI * cutoff / fs).exp();
    let hum_f0 = rng.random_range(28.0..75.0);
    let hum_level = rng.random_range(0.2..0.8);
    let am_rate = rng.random_range(0.2..1.5);
    let broadband = rng.random_range(0.05..0.25);
    let phases: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let (mut y1, mut y2) = (0.0, 0.0);
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let w = gaussian(&mut rng);
            // two cascaded one-pole low-pass sections
            y1 = alpha * y1 + (1.0 - alpha) * w;
            y2 = alpha * y2 + (1.0 - alpha) * y1;
            let t = i as f64 / fs;
            let am = 1.0 + 0.3 * (2.0 * PI * am_rate * t).sin();
            let hum: f64 = phases
                .iter()
                .enumerate()
                .map(|(k, &p)| ((2.0 * PI * hum_f0 * (k + 1) as f64 * t) + p).sin() / (k + 1) as f64)
                .sum();
            am * (y2 * 8.0 + hum_level * 0.3 * hum) + broadband * w * 0.3
        })
        .collect();
    normalize_rms(&mut out, 0.1);
    out
}

fn imp_noise(seed: u64, n: usize, fs: f64) -> Vec<f64> {
    let mut rng = SeedStream::new(seed).child("imp").rng();
    let floor = 1e-4;
    let mut out: Vec<f64> = (0..n).map(|_| floor * gaussian(&mut rng)).collect();
    let tau = rng.random_range(0.008..0.035);
    let window = (0.1 * fs) as usize;
    let latest = n.saturating_sub(window).max(1);
    let onset = rng.random_range(0..latest);
    let bright = rng.random_range(0.2..0.95);
    let mut lp = 0.0;
    for (i, s) in out[onset..].iter_mut().enumerate() {
        let t = i as f64 / fs;
        let w = gaussian(&mut rng);
        lp = bright * w + (1.0 - bright) * lp;
        *s += 0.8 * (-t / tau).exp() * lp;
    }
    normalize_peak(&mut out, 0.9);
    out
}

fn ext_noise(seed: u64, n: usize, fs: f64) -> Vec<f64> {
    let mut rng = SeedStream::new(seed).child("ext").rng();
    // pink-ish noise via a bank of one-pole filters (Kellet-style)
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let voices: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(180.0..900.0),
                rng.random_range(1.0..4.0),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let w = gaussian(&mut rng);
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            let pink = b0 + b1 + b2 + w * 0.1848;
            let t = i as f64 / fs;
            let tonal: f64 = voices
                .iter()
                .map(|&(f, vib, p)| {
                    let inst = f * (1.0 + 0.02 * (2.0 * PI * vib * t).sin());
                    (2.0 * PI * inst * t + p).sin() * (0.5 + 0.5 * (2.0 * PI * 0.7 * vib * t).sin())
                })
                .sum();
            0.05 * pink + 0.3 * tonal
        })
        .collect();
    normalize_rms(&mut out, 0.1);
    out
}

fn normalize_peak(x: &mut [f64], target: f64) {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= target / peak);
    }
}

fn normalize_rms(x: &mut [f64], target: f64) {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v *= target / rms);
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 1.0 {
        x.iter_mut().for_each(|v| *v /= peak);
    }
}
