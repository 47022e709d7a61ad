//! Parallel noisy-set construction.
//!
//! For each utterance one environmental segment, one impulsive segment and
//! one SNR are drawn. The env set adds the first, the imp set the second and
//! the env+imp set both, with gains computed per component against the
//! clean signal. One [`MixRecord`] describes all three clips.

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use super::records::{MixRecord, NoiseUse};
use super::segment::{replay_segment, sample_segment};
use super::snr::{check_compatible, clip_rescale, gain_for_snr};
use crate::audio::{power_of, read_wav, write_wav_as, AudioClip, CorpusManifest, WavEncoding};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SnrRange {
    pub min_db: f64,
    pub max_db: f64,
}

impl SnrRange {
    pub fn fixed(db: f64) -> Self {
        SnrRange { min_db: db, max_db: db }
    }

    pub fn new(min_db: f64, max_db: f64) -> Result<Self> {
        if !(min_db <= max_db) || !min_db.is_finite() || !max_db.is_finite() {
            return Err(Error::InvalidArgument(format!("bad SNR range [{min_db}, {max_db}]")));
        }
        Ok(SnrRange { min_db, max_db })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.min_db == self.max_db {
            self.min_db
        } else {
            rng.random_range(self.min_db..=self.max_db)
        }
    }
}

impl Default for SnrRange {
    /// Training range, -5 to 25 dB.
    fn default() -> Self {
        SnrRange {
            min_db: -5.0,
            max_db: 25.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseSource<T> {
    pub id: String,
    pub clip: AudioClip<T>,
}

/// Named collection of noise recordings.
#[derive(Debug, Clone)]
pub struct NoiseBank<T> {
    pub sources: Vec<NoiseSource<T>>,
}

impl<T: Scalar> NoiseBank<T> {
    pub fn new(sources: Vec<NoiseSource<T>>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::Empty("noise bank".into()));
        }
        if let Some(s) = sources.iter().find(|s| s.clip.is_empty()) {
            return Err(Error::Empty(format!("noise source {}", s.id)));
        }
        Ok(NoiseBank { sources })
    }

    /// Loads every `.wav` in a directory, ordered by file name.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        paths.sort();
        let sources = paths
            .iter()
            .map(|p| {
                Ok(NoiseSource {
                    id: p.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                    clip: read_wav(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        NoiseBank::new(sources)
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&NoiseSource<T>> {
        self.sources
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("noise {id:?} not in bank")))
    }

    /// Splits by file into (seen, unseen) halves: even positions are seen.
    pub fn halves(&self) -> Result<(NoiseBank<T>, NoiseBank<T>)> {
        if self.len() < 2 {
            return Err(Error::InvalidArgument("need at least 2 noise files to split".into()));
        }
        let pick = |parity| {
            self.sources
                .iter()
                .enumerate()
                .filter(|(i, _)| i % 2 == parity)
                .map(|(_, s)| s.clone())
                .collect()
        };
        Ok((NoiseBank::new(pick(0))?, NoiseBank::new(pick(1))?))
    }

    fn draw<R: Rng>(&self, length: usize, rng: &mut R) -> Result<(&NoiseSource<T>, AudioClip<T>, usize)> {
        let src = &self.sources[rng.random_range(0..self.sources.len())];
        let (seg, offset) = sample_segment(&src.clip, length, rng)?;
        Ok((src, seg, offset))
    }
}

/// The three parallel corruptions of one utterance.
#[derive(Debug, Clone)]
pub struct NoisyTriple<T> {
    pub record: MixRecord,
    pub env: AudioClip<T>,
    pub imp: AudioClip<T>,
    pub env_imp: AudioClip<T>,
}

fn add<T: Scalar>(a: &[T], b: &[T], g: T) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + g * y).collect()
}

fn finish<T: Scalar>(
    clean: &AudioClip<T>,
    env_seg: &AudioClip<T>,
    imp_seg: &AudioClip<T>,
    env_gain: T,
    imp_gain: T,
    rescale: Option<T>,
) -> Result<(AudioClip<T>, AudioClip<T>, AudioClip<T>, T)> {
    let env = add(clean.samples(), env_seg.samples(), env_gain);
    let imp = add(clean.samples(), imp_seg.samples(), imp_gain);
    let env_imp = add(&env, imp_seg.samples(), imp_gain);
    let fs = clean.sample_rate();
    let (env, imp, env_imp) = (
        AudioClip::new(env, fs)?,
        AudioClip::new(imp, fs)?,
        AudioClip::new(env_imp, fs)?,
    );
    let r = rescale.unwrap_or_else(|| {
        [env.peak(), imp.peak(), env_imp.peak()]
            .into_iter()
            .map(clip_rescale)
            .fold(T::one(), T::min)
    });
    if r < T::one() {
        Ok((env.scaled(r), imp.scaled(r), env_imp.scaled(r), r))
    } else {
        Ok((env, imp, env_imp, r))
    }
}

/// Corrupts one clean utterance into its env, imp and env+imp versions.
///
/// Draws come from a stream keyed by `utterance_id`, so results do not
/// depend on corpus order. A single rescale (the strictest of the three
/// clipping factors) is applied to all three clips.
pub fn mix_parallel<T: Scalar>(
    utterance_id: &str,
    clean: &AudioClip<T>,
    env_bank: &NoiseBank<T>,
    imp_bank: &NoiseBank<T>,
    snr: SnrRange,
    stream: SeedStream,
) -> Result<NoisyTriple<T>> {
    let mut rng = stream.child(utterance_id).rng();
    let (env_src, env_seg, env_off) = env_bank.draw(clean.len(), &mut rng)?;
    let (imp_src, imp_seg, imp_off) = imp_bank.draw(clean.len(), &mut rng)?;
    let snr_db = snr.draw(&mut rng);
    check_compatible(clean, &env_seg)?;
    check_compatible(clean, &imp_seg)?;
    let ps = power_of(clean.samples())?;
    let env_gain = gain_for_snr(ps, power_of(env_seg.samples())?, T::lit(snr_db))?;
    let imp_gain = gain_for_snr(ps, power_of(imp_seg.samples())?, T::lit(snr_db))?;
    let (env, imp, env_imp, rescale) = finish(clean, &env_seg, &imp_seg, env_gain, imp_gain, None)?;
    Ok(NoisyTriple {
        record: MixRecord {
            utterance_id: utterance_id.to_string(),
            env: Some(NoiseUse {
                noise_id: env_src.id.clone(),
                offset: env_off,
                gain: env_gain.as_f64(),
            }),
            imp: Some(NoiseUse {
                noise_id: imp_src.id.clone(),
                offset: imp_off,
                gain: imp_gain.as_f64(),
            }),
            snr_db,
            rescale: rescale.as_f64(),
        },
        env,
        imp,
        env_imp,
    })
}

/// Rebuilds the three clips of a record bit-identically.
pub fn replay_parallel<T: Scalar>(
    clean: &AudioClip<T>,
    record: &MixRecord,
    env_bank: &NoiseBank<T>,
    imp_bank: &NoiseBank<T>,
) -> Result<NoisyTriple<T>> {
    let (env_use, imp_use) = match (&record.env, &record.imp) {
        (Some(e), Some(i)) => (e, i),
        _ => return Err(Error::InvalidArgument("record lacks a noise component".into())),
    };
    let env_seg = replay_segment(&env_bank.get(&env_use.noise_id)?.clip, clean.len(), env_use.offset)?;
    let imp_seg = replay_segment(&imp_bank.get(&imp_use.noise_id)?.clip, clean.len(), imp_use.offset)?;
    let (env, imp, env_imp, _) = finish(
        clean,
        &env_seg,
        &imp_seg,
        T::lit(env_use.gain),
        T::lit(imp_use.gain),
        Some(T::lit(record.rescale)),
    )?;
    Ok(NoisyTriple {
        record: record.clone(),
        env,
        imp,
        env_imp,
    })
}

/// Corrupts with a single bank; the record uses its `env` slot.
pub fn mix_single<T: Scalar>(
    utterance_id: &str,
    clean: &AudioClip<T>,
    bank: &NoiseBank<T>,
    snr: SnrRange,
    stream: SeedStream,
) -> Result<(AudioClip<T>, MixRecord)> {
    let mut rng = stream.child(utterance_id).rng();
    let (src, seg, offset) = bank.draw(clean.len(), &mut rng)?;
    let snr_db = snr.draw(&mut rng);
    let m = super::snr::mix_at_snr(clean, &seg, T::lit(snr_db))?;
    Ok((
        m.clip,
        MixRecord {
            utterance_id: utterance_id.to_string(),
            env: Some(NoiseUse {
                noise_id: src.id.clone(),
                offset,
                gain: m.gain.as_f64(),
            }),
            imp: None,
            snr_db,
            rescale: m.rescale.as_f64(),
        },
    ))
}

/// Manifests and records of a parallel noisy-set build.
#[derive(Debug, Clone)]
pub struct ParallelSets {
    pub env: CorpusManifest,
    pub imp: CorpusManifest,
    pub env_imp: CorpusManifest,
    pub records: Vec<MixRecord>,
}

/// Builds the three noisy corpora for every entry of `manifest`, writing
/// float32 WAVs under `out_dir/{env,imp,env_imp}/`.
pub fn build_parallel_noisy_sets(
    manifest: &CorpusManifest,
    env_bank: &NoiseBank<f64>,
    imp_bank: &NoiseBank<f64>,
    snr: SnrRange,
    seed: u64,
    sample_rate: u32,
    out_dir: impl AsRef<Path>,
) -> Result<ParallelSets> {
    if manifest.is_empty() {
        return Err(Error::Empty("manifest".into()));
    }
    let out_dir = out_dir.as_ref();
    for sub in ["env", "imp", "env_imp"] {
        let d = out_dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let stream = SeedStream::new(seed).child("corruption");
    let outputs = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let clean = manifest.load_audio::<f64>(entry, sample_rate)?;
            let uid = entry.utterance_id();
            let triple = mix_parallel(&uid, &clean, env_bank, imp_bank, snr, stream)?;
            let name = format!("{i:06}.wav");
            let mut rows = Vec::with_capacity(3);
            for (sub, clip) in [("env", &triple.env), ("imp", &triple.imp), ("env_imp", &triple.env_imp)] {
                write_wav_as(clip, out_dir.join(sub).join(&name), WavEncoding::Float32)?;
                let mut e = entry.clone();
                e.path = format!("{sub}/{name}");
                e.mix_record = Some(uid.clone());
                rows.push(e);
            }
            Ok((rows, triple.record))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sets = ParallelSets {
        env: CorpusManifest::default(),
        imp: CorpusManifest::default(),
        env_imp: CorpusManifest::default(),
        records: Vec::with_capacity(outputs.len()),
    };
    for set in [&mut sets.env, &mut sets.imp, &mut sets.env_imp] {
        set.base_dir = out_dir.to_path_buf();
    }
    for (rows, record) in outputs {
        let [a, b, c]: [_; 3] = rows.try_into().expect("three rows");
        sets.env.entries.push(a);
        sets.imp.entries.push(b);
        sets.env_imp.entries.push(c);
        sets.records.push(record);
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{synth_clip, ManifestEntry, SynthKind};

    fn banks() -> (NoiseBank<f64>, NoiseBank<f64>) {
        let env = (0..3)
            .map(|s| NoiseSource {
                id: format!("env{s}"),
                clip: synth_clip(SynthKind::EnvNoise { seed: s }, 3.0, 16_000).unwrap(),
            })
            .collect();
        let imp = (0..3)
            .map(|s| NoiseSource {
                id: format!("imp{s}"),
                clip: synth_clip(SynthKind::ImpNoise { seed: s }, 0.4, 16_000).unwrap(),
            })
            .collect();
        (NoiseBank::new(env).unwrap(), NoiseBank::new(imp).unwrap())
    }

    fn clean(take: u64) -> AudioClip<f64> {
        synth_clip(
            SynthKind::Keyword {
                class_id: take as usize % 5,
                speaker_seed: take,
                take,
            },
            1.0,
            16_000,
        )
        .unwrap()
    }

    #[test]
    fn superposition_and_replay() {
        let (env, imp) = banks();
        let stream = SeedStream::new(5);
        for u in 0..10 {
            let c = clean(u);
            let t = mix_parallel(&format!("u{u}"), &c, &env, &imp, SnrRange::default(), stream).unwrap();
            let r = t.record.rescale;
            for i in 0..c.len() {
                let env_part = t.env.samples()[i] - r * c.samples()[i];
                let imp_part = t.imp.samples()[i] - r * c.samples()[i];
                let resid = t.env_imp.samples()[i] - env_part - imp_part - r * c.samples()[i];
                assert!(resid.abs() <= 1e-9);
            }
            assert!((-5.0..=25.0).contains(&t.record.snr_db));
            let again = replay_parallel(&c, &t.record, &env, &imp).unwrap();
            assert_eq!(again.env, t.env);
            assert_eq!(again.imp, t.imp);
            assert_eq!(again.env_imp, t.env_imp);
        }
    }

    #[test]
    fn fixed_range_and_determinism() {
        let (env, imp) = banks();
        let c = clean(1);
        let a = mix_parallel("x", &c, &env, &imp, SnrRange::fixed(5.0), SeedStream::new(1)).unwrap();
        let b = mix_parallel("x", &c, &env, &imp, SnrRange::fixed(5.0), SeedStream::new(1)).unwrap();
        assert_eq!(a.record.snr_db, 5.0);
        assert_eq!(a.record, b.record);
        assert_eq!(a.env_imp, b.env_imp);
    }

    #[test]
    fn empty_bank_rejected() {
        assert!(NoiseBank::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn file_build_writes_three_sets() {
        let (env, imp) = banks();
        let m = CorpusManifest::new(
            (0..4)
                .map(|k| ManifestEntry::new(format!("synth://keyword/{k}"), "yes", format!("s{k}")))
                .collect(),
        );
        let dir = tempfile::tempdir().unwrap();
        let a = build_parallel_noisy_sets(&m, &env, &imp, SnrRange::default(), 3, 16_000, dir.path()).unwrap();
        assert_eq!(a.records.len(), 4);
        assert_eq!(a.env_imp.len(), 4);
        let clip: AudioClip<f64> = a.env_imp.load_audio(&a.env_imp.entries[2], 16_000).unwrap();
        assert_eq!(clip.len(), 16_000);
        let dir2 = tempfile::tempdir().unwrap();
        let b = build_parallel_noisy_sets(&m, &env, &imp, SnrRange::default(), 3, 16_000, dir2.path()).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.env.entries, b.env.entries);
    }
}
