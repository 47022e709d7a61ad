use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::label_subset;
use super::results::TrainCondition;
use crate::audio::{make_splits, AudioClip, CorpusManifest, ManifestEntry, Split, COMMANDS};
use crate::corruption::{mix_parallel, mix_single, NoiseBank, NoiseSource, SnrRange, SpecAugmentPolicy};
use crate::audio::{synth_clip, SynthKind};
use crate::error::{Error, Result};
use crate::features::{load_external_features, FeatureConfig, FeatureExtractor, FeatureType};
use crate::models::{full_grid, ModelSpec};
use crate::scalar::Scalar;
use crate::seed::SeedStream;
use crate::training::{Dataset, Example, LabelMap, TrainConfig};

/// Built-in synthetic corpus and noise banks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticCorpus {
    pub classes: usize,
    pub speakers: usize,
    /// Repetitions per speaker and class.
    pub takes: usize,
    pub split: [f64; 3],
    /// Speakers of the shifted population used for the speaker-shift set.
    pub ood_speakers: usize,
    pub ood_takes: usize,
    /// Leading labels of the inventory evaluated on the speaker-shift set.
    pub ood_classes: usize,
    pub env_noises: usize,
    pub imp_noises: usize,
    pub ext_noises: usize,
    pub noise_seconds: f64,
}

impl Default for SyntheticCorpus {
    fn default() -> Self {
        SyntheticCorpus {
            classes: 8,
            speakers: 50,
            takes: 6,
            split: [0.8, 0.1, 0.1],
            ood_speakers: 10,
            ood_takes: 3,
            ood_classes: 6,
            env_noises: 8,
            imp_noises: 8,
            ext_noises: 4,
            noise_seconds: 4.0,
        }
    }
}

/// An extra test corpus, optionally scored on a subset of the labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraTestSet {
    pub name: String,
    pub manifest: PathBuf,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

/// User-supplied corpus: one manifest with a split column plus noise
/// directories of mono WAV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCorpus {
    pub manifest: PathBuf,
    pub env_noise_dir: Option<PathBuf>,
    pub imp_noise_dir: Option<PathBuf>,
    pub ext_noise_dir: Option<PathBuf>,
    #[serde(default)]
    pub extra_tests: Vec<ExtraTestSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusConfig {
    Synthetic(SyntheticCorpus),
    Manifests(ManifestCorpus),
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig::Synthetic(SyntheticCorpus::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub corpus: CorpusConfig,
    pub features: FeatureConfig,
    pub feature_type: FeatureType,
    pub models: Vec<ModelSpec>,
    pub conditions: Vec<TrainCondition>,
    /// SNR range of the noisy training and validation sets.
    pub train_snr: SnrRange,
    /// SNR of every noisy test set.
    pub test_snr_db: f64,
    pub train: TrainConfig,
    /// Augmentation used by the `specaug` condition.
    pub specaug: SpecAugmentPolicy,
    /// Concurrent grid cells; `None` uses every core.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output_dir: PathBuf::from("runs/default"),
            corpus: CorpusConfig::default(),
            features: FeatureConfig::default(),
            feature_type: FeatureType::Mel,
            models: full_grid(),
            conditions: vec![TrainCondition::Clean, TrainCondition::EnvImp],
            train_snr: SnrRange::default(),
            test_snr_db: 5.0,
            train: TrainConfig::default(),
            specaug: SpecAugmentPolicy::default(),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.train.validate()?;
        self.specaug.validate()?;
        if self.models.is_empty() || self.conditions.is_empty() {
            return Err(Error::Config("need at least one model and one condition".into()));
        }
        for m in &self.models {
            ModelSpec::new(m.family, m.width_factor, m.depth).validate()?;
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        match &self.corpus {
            CorpusConfig::Synthetic(s) => {
                if s.classes < 2 || s.classes > COMMANDS.len() {
                    return Err(Error::Config(format!("classes must be in 2..={}", COMMANDS.len())));
                }
                if s.ood_classes < 2 || s.ood_classes > s.classes {
                    return Err(Error::Config("ood_classes must be in 2..=classes".into()));
                }
                if s.env_noises < 2 || s.imp_noises < 2 || s.ext_noises < 1 || s.takes == 0 {
                    return Err(Error::Config("need >= 2 env and imp noises, >= 1 ext noise, >= 1 take".into()));
                }
            }
            CorpusConfig::Manifests(m) => {
                let mut paths = vec![&m.manifest];
                paths.extend(m.env_noise_dir.iter());
                paths.extend(m.imp_noise_dir.iter());
                paths.extend(m.ext_noise_dir.iter());
                paths.extend(m.extra_tests.iter().map(|t| &t.manifest));
                if let Some(p) = paths.into_iter().find(|p| !p.exists()) {
                    return Err(Error::Config(format!("{} does not exist", p.display())));
                }
                if self.feature_type == FeatureType::External
                    && self.conditions.iter().any(|c| *c != TrainCondition::Clean)
                {
                    return Err(Error::Config("external features only support the clean condition".into()));
                }
            }
        }
        Ok(())
    }

    pub fn input_dims(&self, data_dims: usize) -> usize {
        self.features.dims(self.feature_type).unwrap_or(data_dims)
    }
}

/// One registered test set.
#[derive(Debug, Clone)]
pub struct TestSet<T> {
    pub name: String,
    pub data: Dataset<T>,
    pub subset: Option<Vec<usize>>,
}

/// Featurized training, validation and test data for a grid run.
#[derive(Debug, Clone)]
pub struct PreparedData<T> {
    pub labels: LabelMap,
    pub dims: usize,
    pub train: BTreeMap<TrainCondition, (Dataset<T>, Dataset<T>)>,
    pub tests: Vec<TestSet<T>>,
}

struct Banks {
    env: Option<NoiseBank<f64>>,
    imp: Option<NoiseBank<f64>>,
    ext: Option<NoiseBank<f64>>,
}

fn synth_bank(kind: &str, count: usize, seconds: f64, fs: u32, base: u64) -> Result<NoiseBank<f64>> {
    let sources = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = base + i as u64;
            let sk = match kind {
                "env" => SynthKind::EnvNoise { seed },
                "imp" => SynthKind::ImpNoise { seed },
                _ => SynthKind::ExtNoise { seed },
            };
            let secs = if kind == "imp" { 1.0 } else { seconds };
            Ok(NoiseSource {
                id: format!("{kind}{i:03}"),
                clip: synth_clip(sk, secs, fs)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    NoiseBank::new(sources)
}

/// The synthetic env, imp and external noise banks, in that order.
pub fn synthetic_noise_banks(cfg: &SyntheticCorpus, sample_rate: u32) -> Result<[NoiseBank<f64>; 3]> {
    Ok([
        synth_bank("env", cfg.env_noises, cfg.noise_seconds, sample_rate, 10_000)?,
        synth_bank("imp", cfg.imp_noises, cfg.noise_seconds, sample_rate, 20_000)?,
        synth_bank("ext", cfg.ext_noises, cfg.noise_seconds, sample_rate, 30_000)?,
    ])
}

/// Manifest of the synthetic corpus with speaker-disjoint splits.
pub fn synthetic_manifest(cfg: &SyntheticCorpus, seed: u64) -> Result<CorpusManifest> {
    let mut entries = Vec::with_capacity(cfg.classes * cfg.speakers * cfg.takes);
    for s in 0..cfg.speakers {
        for c in 0..cfg.classes {
            for t in 0..cfg.takes {
                let take = ((s * cfg.classes + c) * cfg.takes + t) as u64;
                entries.push(ManifestEntry::new(
                    format!("synth://keyword/{take}"),
                    COMMANDS[c],
                    format!("spk{s:03}"),
                ));
            }
        }
    }
    make_splits(&CorpusManifest::new(entries), cfg.split, seed)
}

/// Shifted-population speakers reading the first `ood_classes` labels.
pub fn synthetic_ood_manifest(cfg: &SyntheticCorpus, labels: &[String]) -> CorpusManifest {
    let mut entries = Vec::new();
    for s in 0..cfg.ood_speakers {
        for l in labels.iter().take(cfg.ood_classes) {
            for _ in 0..cfg.ood_takes {
                let take = 1_000_000 + entries.len() as u64;
                entries.push(ManifestEntry::new(
                    format!("synth://keyword_shifted/{take}"),
                    l.as_str(),
                    format!("ood{s:03}"),
                ));
            }
        }
    }
    CorpusManifest::new(entries)
}

struct Featurizer<'a> {
    extractor: FeatureExtractor<f64>,
    feature: FeatureType,
    config: &'a ExperimentConfig,
}

impl Featurizer<'_> {
    fn features<T: Scalar>(&self, clip: &AudioClip<f64>) -> Result<Array2<T>> {
        let f = self.extractor.extract(clip, self.feature)?;
        Ok(f.data.mapv(|v| T::lit(v)))
    }

    fn speeds(&self) -> Vec<f64> {
        let mut v = self.config.specaug.speed_factors.clone();
        v.sort_by_key(|&s| s != 1.0);
        v
    }
}

fn dataset<T: Scalar>(
    manifest: &CorpusManifest,
    labels: &LabelMap,
    make: impl Fn(&ManifestEntry) -> Result<Vec<Array2<T>>> + Sync,
) -> Result<Dataset<T>> {
    let examples = manifest
        .entries
        .par_iter()
        .map(|e| {
            Ok(Example {
                variants: make(e)?,
                label: labels.index(&e.label)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(examples)
}

fn need<'a>(bank: &'a Option<NoiseBank<f64>>, what: &str) -> Result<&'a NoiseBank<f64>> {
    bank.as_ref()
        .ok_or_else(|| Error::Config(format!("{what} noise bank required by the requested conditions")))
}

/// Builds every dataset the configured grid needs.
///
/// Noisy sets are corrupted in memory with draws keyed by utterance id, so
/// they are identical to the WAVs `build_parallel_noisy_sets` would write
/// for the same seed.
pub fn prepare_data<T: Scalar>(config: &ExperimentConfig) -> Result<PreparedData<T>> {
    config.validate()?;
    let fs = config.features.sample_rate;
    let stream = SeedStream::new(config.seed);
    let (manifest, banks, extra): (CorpusManifest, Banks, Vec<(String, CorpusManifest, Option<Vec<String>>)>) =
        match &config.corpus {
            CorpusConfig::Synthetic(s) => {
                let m = synthetic_manifest(s, stream.child("splits").seed())?;
                let [env, imp, ext] = synthetic_noise_banks(s, fs)?;
                let banks = Banks {
                    env: Some(env),
                    imp: Some(imp),
                    ext: Some(ext),
                };
                let labels: Vec<String> = m.labels().into_iter().collect();
                let ood = synthetic_ood_manifest(s, &labels);
                let subset = labels[..s.ood_classes].to_vec();
                (m, banks, vec![("speaker_ood".into(), ood, Some(subset))])
            }
            CorpusConfig::Manifests(mc) => {
                let m = CorpusManifest::read(&mc.manifest)?;
                let load = |d: &Option<PathBuf>| d.as_ref().map(NoiseBank::<f64>::from_dir).transpose();
                let banks = Banks {
                    env: load(&mc.env_noise_dir)?,
                    imp: load(&mc.imp_noise_dir)?,
                    ext: load(&mc.ext_noise_dir)?,
                };
                let extra = mc
                    .extra_tests
                    .iter()
                    .map(|t| Ok((t.name.clone(), CorpusManifest::read(&t.manifest)?, t.labels.clone())))
                    .collect::<Result<Vec<_>>>()?;
                (m, banks, extra)
            }
        };
    let labels = LabelMap::from_manifest(&manifest)?;
    let halves = |b: &Option<NoiseBank<f64>>| b.as_ref().map(|b| b.halves()).transpose();
    let (env_seen, env_unseen) = halves(&banks.env)?.unzip();
    let (imp_seen, imp_unseen) = halves(&banks.imp)?.unzip();

    let fz = Featurizer {
        extractor: FeatureExtractor::new(&config.features)?,
        feature: config.feature_type,
        config,
    };
    let external = config.feature_type == FeatureType::External;
    let clean_of = |m: &CorpusManifest, e: &ManifestEntry| m.load_audio::<f64>(e, fs);
    let plain = |m: &CorpusManifest| -> Result<Dataset<T>> {
        dataset(m, &labels, |e| {
            if external {
                let f = load_external_features::<f64>(m.resolve(e))?;
                return Ok(vec![f.data.mapv(T::lit)]);
            }
            Ok(vec![fz.features(&clean_of(m, e)?)?])
        })
    };

    let mut train = BTreeMap::new();
    let splits = [Split::Train, Split::Valid];
    let parts: Vec<CorpusManifest> = splits.iter().map(|&s| manifest.split(s)).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Empty("train or valid split".into()));
    }
    let noisy_stream = stream.child("train-noise");
    for &cond in &config.conditions {
        let mut sets = Vec::with_capacity(2);
        for (split, m) in splits.iter().zip(&parts) {
            let augment = cond == TrainCondition::Specaug && *split == Split::Train;
            let d = match cond {
                TrainCondition::Clean => plain(m)?,
                TrainCondition::Specaug if !augment => plain(m)?,
                TrainCondition::Specaug => dataset(m, &labels, |e| {
                    let clip = clean_of(m, e)?;
                    fz.speeds()
                        .into_iter()
                        .map(|s| fz.features(&crate::corruption::speed_perturb(&clip, s)?))
                        .collect()
                })?,
                TrainCondition::Env | TrainCondition::Imp | TrainCondition::EnvImp => {
                    let env = need(&env_seen, "env")?;
                    let imp = need(&imp_seen, "imp")?;
                    dataset(m, &labels, |e| {
                        let t = mix_parallel(&e.utterance_id(), &clean_of(m, e)?, env, imp, config.train_snr, noisy_stream)?;
                        let clip = match cond {
                            TrainCondition::Env => &t.env,
                            TrainCondition::Imp => &t.imp,
                            _ => &t.env_imp,
                        };
                        Ok(vec![fz.features(clip)?])
                    })?
                }
            };
            sets.push(d);
        }
        let valid = sets.pop().expect("two splits");
        let tr = sets.pop().expect("two splits");
        train.insert(cond, (tr, valid));
    }

    let test_m = manifest.split(Split::Test);
    if test_m.is_empty() {
        return Err(Error::Empty("test split".into()));
    }
    let snr = SnrRange::fixed(config.test_snr_db);
    let test_stream = stream.child("test-noise");
    let mut tests = vec![TestSet {
        name: "clean".into(),
        data: plain(&test_m)?,
        subset: None,
    }];
    if !external {
        for (name, env, imp) in [
            ("noise_seen", &env_seen, &imp_seen),
            ("noise_unseen", &env_unseen, &imp_unseen),
        ] {
            if let (Some(env), Some(imp)) = (env, imp) {
                let s = test_stream.child(name);
                tests.push(TestSet {
                    name: name.into(),
                    data: dataset(&test_m, &labels, |e| {
                        let t = mix_parallel(&e.utterance_id(), &clean_of(&test_m, e)?, env, imp, snr, s)?;
                        Ok(vec![fz.features(&t.env_imp)?])
                    })?,
                    subset: None,
                });
            }
        }
        if let Some(ext) = &banks.ext {
            let s = test_stream.child("noise_external");
            tests.push(TestSet {
                name: "noise_external".into(),
                data: dataset(&test_m, &labels, |e| {
                    let (clip, _) = mix_single(&e.utterance_id(), &clean_of(&test_m, e)?, ext, snr, s)?;
                    Ok(vec![fz.features(&clip)?])
                })?,
                subset: None,
            });
        }
    }
    for (name, m, subset) in extra {
        let subset = subset.map(|s| label_subset(&labels, &s)).transpose()?;
        tests.push(TestSet {
            name,
            data: plain(&m)?,
            subset,
        });
    }
    let dims = tests[0].data.dims;
    Ok(PreparedData {
        labels,
        dims,
        train,
        tests,
    })
}
