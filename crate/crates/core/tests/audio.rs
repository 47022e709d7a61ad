mod common;

use proptest::prelude::*;
use rand::Rng;
use robustline::audio::{
    make_splits, read_wav, rms_power, synth_clip, write_wav, write_wav_as, AudioClip, CorpusManifest, ManifestEntry,
    Split, SynthKind, WavEncoding,
};

fn manifest(speakers: usize, per: usize) -> CorpusManifest {
    let entries = (0..speakers)
        .flat_map(|s| (0..per).map(move |i| ManifestEntry::new(format!("a/{s}_{i}.wav"), "yes", format!("spk{s}"))))
        .collect();
    CorpusManifest::new(entries)
}

#[test]
fn pcm16_half_scale_reads_as_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("half.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 16_000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&p, spec).unwrap();
    for _ in 0..16_000 {
        w.write_sample(16384i16).unwrap();
    }
    w.finalize().unwrap();
    let clip: AudioClip<f64> = read_wav(&p).unwrap();
    assert_eq!(clip.len(), 16_000);
    assert!(clip.samples().iter().all(|&v| (v - 0.5).abs() <= 1.0 / 32768.0));
}

#[test]
fn stereo_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("st.wav");
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: 16_000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&p, spec).unwrap();
    for _ in 0..200 {
        w.write_sample(0i16).unwrap();
    }
    w.finalize().unwrap();
    let err = read_wav::<f32>(&p).unwrap_err();
    assert!(err.to_string().contains("multichannel unsupported"));
}

#[test]
fn out_of_range_write_fails() {
    let dir = tempfile::tempdir().unwrap();
    let clip = AudioClip::new(vec![0.0, 1.5, 0.0], 16_000).unwrap();
    assert!(write_wav(&clip, dir.path().join("x.wav")).is_err());
}

#[test]
fn sine_power_is_one_half() {
    let fs = 16_000;
    let x: Vec<f64> = (0..fs).map(|i| (2.0 * std::f64::consts::PI * 200.0 * i as f64 / fs as f64).sin()).collect();
    let p = rms_power(&AudioClip::new(x, fs as u32).unwrap()).unwrap();
    assert!((p - 0.5).abs() < 1e-3);
    assert_eq!(rms_power(&AudioClip::new(vec![0.5f64; 100], 16_000).unwrap()).unwrap(), 0.25);
}

#[test]
fn synthetic_keywords_are_reproducible_and_distinct() {
    let kw = |c| SynthKind::Keyword {
        class_id: c,
        speaker_seed: 7,
        take: 0,
    };
    let a: AudioClip<f64> = synth_clip(kw(3), 1.0, 16_000).unwrap();
    let b: AudioClip<f64> = synth_clip(kw(3), 1.0, 16_000).unwrap();
    assert_eq!(a, b);
    let c: AudioClip<f64> = synth_clip(kw(4), 1.0, 16_000).unwrap();
    assert_ne!(a, c);
    assert!(a.samples().iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn impulse_energy_is_concentrated() {
    for seed in 0..5 {
        let x: AudioClip<f64> = synth_clip(SynthKind::ImpNoise { seed }, 1.0, 16_000).unwrap();
        let e: Vec<f64> = x.samples().iter().map(|v| v * v).collect();
        let total: f64 = e.iter().sum();
        let best = e.windows(1600).map(|w| w.iter().sum::<f64>()).fold(0.0, f64::max);
        assert!(best >= 0.8 * total, "seed {seed}: {}", best / total);
    }
}

#[test]
fn default_split_proportions() {
    let m = make_splits(&manifest(100, 3), [0.89, 0.01, 0.10], 4).unwrap();
    let tr = m.speakers(Some(Split::Train));
    let va = m.speakers(Some(Split::Valid));
    let te = m.speakers(Some(Split::Test));
    assert_eq!((tr.len(), va.len(), te.len()), (89, 1, 10));
    assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
}

#[test]
fn manifest_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = make_splits(&manifest(10, 2), [0.8, 0.1, 0.1], 1).unwrap();
    let p = dir.path().join("m.csv");
    m.write(&p).unwrap();
    let back = CorpusManifest::read(&p).unwrap();
    assert_eq!(back.entries, m.entries);
    assert_eq!(back.resolve(&back.entries[0]), dir.path().join("a/0_0.wav"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn wav_round_trip_within_quantization(seed in 0u64..10_000, len in 1usize..2000) {
        let dir = tempfile::tempdir().unwrap();
        let mut r = common::rng(seed);
        let x: Vec<f64> = (0..len).map(|_| r.random_range(-1.0..=1.0)).collect();
        let clip = AudioClip::new(x, 16_000).unwrap();
        let p = dir.path().join("a.wav");
        write_wav(&clip, &p).unwrap();
        let back: AudioClip<f64> = read_wav(&p).unwrap();
        prop_assert_eq!(back.len(), len);
        for (a, b) in clip.samples().iter().zip(back.samples()) {
            prop_assert!((a - b).abs() <= 1.0 / 32768.0);
        }
        let clip32: AudioClip<f32> = clip.cast();
        write_wav_as(&clip32, &p, WavEncoding::Float32).unwrap();
        prop_assert_eq!(read_wav::<f32>(&p).unwrap(), clip32);
    }

    #[test]
    fn splits_are_speaker_disjoint(speakers in 3usize..60, per in 1usize..4, seed in 0u64..1000) {
        let m = make_splits(&manifest(speakers, per), [0.8, 0.1, 0.1], seed).unwrap();
        prop_assert_eq!(m.len(), speakers * per);
        let tr = m.speakers(Some(Split::Train));
        prop_assert!(tr.is_disjoint(&m.speakers(Some(Split::Valid))));
        prop_assert!(tr.is_disjoint(&m.speakers(Some(Split::Test))));
        prop_assert_eq!(make_splits(&manifest(speakers, per), [0.8, 0.1, 0.1], seed).unwrap(), m);
    }
}
