use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::clip::AudioClip;
use super::synth::{synth_clip, SynthKind};
use super::wav::read_wav;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Malformed(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// File path (relative paths resolve against the manifest's directory)
    /// or a `synth://kind/seed` pseudo-path.
    pub path: String,
    pub label: String,
    pub speaker_id: String,
    pub split: Option<Split>,
    /// Utterance id of the shared mix record, for noisy-set manifests.
    pub mix_record: Option<String>,
}

impl ManifestEntry {
    pub fn new(path: impl Into<String>, label: impl Into<String>, speaker_id: impl Into<String>) -> Self {
        ManifestEntry {
            path: path.into(),
            label: label.into(),
            speaker_id: speaker_id.into(),
            split: None,
            mix_record: None,
        }
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = Some(split);
        self
    }

    pub fn is_synthetic(&self) -> bool {
        self.path.starts_with("synth://")
    }

    /// Stable identifier for the utterance.
    pub fn utterance_id(&self) -> String {
        if self.is_synthetic() {
            format!("{}|{}|{}", self.speaker_id, self.label, self.path)
        } else {
            self.path.clone()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative file paths resolve against.
    pub base_dir: PathBuf,
}

const HEADER: [&str; 4] = ["path", "label", "speaker_id", "split"];

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        CorpusManifest {
            entries,
            base_dir: PathBuf::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn split(&self, split: Split) -> CorpusManifest {
        CorpusManifest {
            entries: self
                .entries
                .iter()
                .filter(|e| e.split == Some(split))
                .cloned()
                .collect(),
            base_dir: self.base_dir.clone(),
        }
    }

    pub fn labels(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.label.clone()).collect()
    }

    pub fn speakers(&self, split: Option<Split>) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|e| split.is_none() || e.split == split)
            .map(|e| e.speaker_id.clone())
            .collect()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        let has_mix = match cols.as_slice() {
            [a, b, c, d] if [*a, *b, *c, *d] == HEADER => false,
            [a, b, c, d, "mix_record"] if [*a, *b, *c, *d] == HEADER => true,
            _ => {
                return Err(Error::Malformed(format!(
                    "manifest header must be path,label,speaker_id,split[,mix_record], got {cols:?}"
                )))
            }
        };
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let split = match &rec[3] {
                "" => None,
                s => Some(s.parse()?),
            };
            let mix_record = if has_mix && !rec[4].is_empty() {
                Some(rec[4].to_string())
            } else {
                None
            };
            entries.push(ManifestEntry {
                path: rec[0].to_string(),
                label: rec[1].to_string(),
                speaker_id: rec[2].to_string(),
                split,
                mix_record,
            });
        }
        Ok(CorpusManifest {
            entries,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let has_mix = self.entries.iter().any(|e| e.mix_record.is_some());
        let mut w = csv::Writer::from_path(path.as_ref())?;
        if has_mix {
            w.write_record(HEADER.iter().copied().chain(["mix_record"]))?;
        } else {
            w.write_record(HEADER)?;
        }
        for e in &self.entries {
            let split = e.split.map(|s| s.as_str()).unwrap_or("");
            if has_mix {
                w.write_record([
                    e.path.as_str(),
                    &e.label,
                    &e.speaker_id,
                    split,
                    e.mix_record.as_deref().unwrap_or(""),
                ])?;
            } else {
                w.write_record([e.path.as_str(), &e.label, &e.speaker_id, split])?;
            }
        }
        w.flush().map_err(|e| Error::io(path.as_ref(), e))?;
        Ok(())
    }

    /// File path of `entry`, resolved against `base_dir` when relative.
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads the audio for one entry. Synthetic entries are 1 s long.
    pub fn load_audio<T: Scalar>(&self, entry: &ManifestEntry, sample_rate: u32) -> Result<AudioClip<T>> {
        if entry.is_synthetic() {
            let kind = SynthKind::from_pseudo_path(&entry.path, &entry.label, &entry.speaker_id)?;
            return synth_clip(kind, 1.0, sample_rate);
        }
        let full = self.resolve(entry);
        let clip: AudioClip<T> = read_wav(&full)?;
        if clip.sample_rate() != sample_rate {
            return Err(Error::InvalidArgument(format!(
                "{}: sample rate {} != {} (resampling unsupported)",
                full.display(),
                clip.sample_rate(),
                sample_rate
            )));
        }
        Ok(clip)
    }
}

/// Assigns splits by speaker.
///
/// Speakers are ordered by a seeded stable hash of their id and cut into
/// contiguous runs with largest-remainder rounding, so the split of a speaker
/// depends only on the seed and the speaker set, never on individual clips.
/// Every split with a positive ratio gets at least one speaker.
pub fn make_splits(manifest: &CorpusManifest, ratios: [f64; 3], seed: u64) -> Result<CorpusManifest> {
    if ratios.iter().any(|&r| !(r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let speakers = manifest.speakers(None);
    let wanted = ratios.iter().filter(|&&r| r > 0.0).count();
    if speakers.len() < 3 || speakers.len() < wanted {
        return Err(Error::InvalidArgument(format!(
            "{} speakers is fewer than the {} requested splits (need at least 3)",
            speakers.len(),
            wanted.max(3)
        )));
    }
    let stream = SeedStream::new(seed).child("splits");
    let mut order: Vec<(u64, &String)> = speakers
        .iter()
        .map(|s| (stream.child(s).seed(), s))
        .collect();
    order.sort();

    let counts = apportion(order.len(), ratios);
    let mut assignment = BTreeMap::new();
    let mut it = order.into_iter();
    for (split, &count) in Split::ALL.iter().zip(&counts) {
        for (_, spk) in it.by_ref().take(count) {
            assignment.insert(spk.clone(), *split);
        }
    }
    let entries = manifest
        .entries
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.split = Some(assignment[&e.speaker_id]);
            e
        })
        .collect();
    Ok(CorpusManifest {
        entries,
        base_dir: manifest.base_dir.clone(),
    })
}

fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts = [0usize; 3];
    for i in 0..3 {
        counts[i] = exact[i].floor() as usize;
        if ratios[i] > 0.0 && counts[i] == 0 {
            counts[i] = 1;
        }
    }
    while counts.iter().sum::<usize>() < n {
        let i = (0..3)
            .filter(|&i| ratios[i] > 0.0)
            .max_by(|&a, &b| {
                (exact[a] - counts[a] as f64)
                    .partial_cmp(&(exact[b] - counts[b] as f64))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .expect("some ratio positive");
        counts[i] += 1;
    }
    while counts.iter().sum::<usize>() > n {
        let i = (0..3)
            .filter(|&i| counts[i] > 1 || (counts[i] == 1 && ratios[i] == 0.0))
            .max_by_key(|&i| counts[i])
            .expect("reducible split");
        counts[i] -= 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(speakers: usize, per: usize) -> CorpusManifest {
        let mut entries = Vec::new();
        for s in 0..speakers {
            for k in 0..per {
                entries.push(ManifestEntry::new(
                    format!("synth://keyword/{k}"),
                    "yes",
                    format!("spk{s:03}"),
                ));
            }
        }
        CorpusManifest::new(entries)
    }

    fn proportions(m: &CorpusManifest) -> [f64; 3] {
        let n = m.len() as f64;
        Split::ALL.map(|s| m.split(s).len() as f64 / n)
    }

    #[test]
    fn gsc_style_ratios() {
        let m = make_splits(&corpus(100, 5), [0.89, 0.01, 0.10], 1).unwrap();
        let p = proportions(&m);
        for (got, want) in p.iter().zip([0.89, 0.01, 0.10]) {
            assert!((got - want).abs() <= 0.05, "{p:?}");
        }
        let train = m.speakers(Some(Split::Train));
        assert!(train.is_disjoint(&m.speakers(Some(Split::Valid))));
        assert!(train.is_disjoint(&m.speakers(Some(Split::Test))));
    }

    #[test]
    fn degenerate_ratio_is_all_train() {
        let m = make_splits(&corpus(5, 2), [1.0, 0.0, 0.0], 3).unwrap();
        assert!(m.entries.iter().all(|e| e.split == Some(Split::Train)));
    }

    #[test]
    fn too_few_speakers() {
        assert!(make_splits(&corpus(2, 3), [0.5, 0.25, 0.25], 0).is_err());
        assert!(make_splits(&corpus(10, 3), [0.5, 0.25, 0.2], 0).is_err());
    }

    #[test]
    fn adding_clips_keeps_speaker_splits() {
        let a = make_splits(&corpus(30, 2), [0.8, 0.1, 0.1], 9).unwrap();
        let b = make_splits(&corpus(30, 4), [0.8, 0.1, 0.1], 9).unwrap();
        for s in Split::ALL {
            assert_eq!(a.speakers(Some(s)), b.speakers(Some(s)));
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = make_splits(&corpus(4, 2), [0.5, 0.25, 0.25], 0).unwrap();
        m.write(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("path,label,speaker_id,split\n"));
        let back = CorpusManifest::read(&p).unwrap();
        assert_eq!(back.entries, m.entries);

        let mut noisy = m.clone();
        noisy.entries[0].mix_record = Some("u0".into());
        noisy.write(&p).unwrap();
        let back = CorpusManifest::read(&p).unwrap();
        assert_eq!(back.entries, noisy.entries);
    }

    proptest! {
        #[test]
        fn splits_are_speaker_disjoint_and_deterministic(
            n in 3usize..60, seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0,
        ) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let ratios = [lo, hi - lo, 1.0 - hi];
            let m = corpus(n, 2);
            let wanted = ratios.iter().filter(|&&r| r > 0.0).count();
            prop_assume!(n >= wanted);
            let s1 = make_splits(&m, ratios, seed).unwrap();
            let s2 = make_splits(&m, ratios, seed).unwrap();
            prop_assert_eq!(&s1, &s2);
            let tr = s1.speakers(Some(Split::Train));
            prop_assert!(tr.is_disjoint(&s1.speakers(Some(Split::Valid))));
            prop_assert!(tr.is_disjoint(&s1.speakers(Some(Split::Test))));
        }
    }
}
