mod common;

use common::rng;
use ndarray::{arr1, Array1, Array2, ArrayD, IxDyn};
use rand::Rng;
use robustline::audio::{CorpusManifest, ManifestEntry, COMMANDS};
use robustline::features::{FeatureConfig, FeatureExtractor, FeatureType};
use robustline::models::*;
use robustline::training::*;

#[test]
fn cross_entropy_cases() {
    let (loss, _) = cross_entropy(Array1::<f64>::zeros(7).view(), 3).unwrap();
    assert!((loss - 7f64.ln()).abs() < 1e-15);
    let mut l = Array1::<f64>::zeros(5);
    l[2] = 30.0;
    assert!(cross_entropy(l.view(), 2).unwrap().0 < 1e-12);
    assert!(cross_entropy(l.view(), 5).is_err());
}

#[test]
fn cross_entropy_gradient_matches_differences() {
    let mut r = rng(3);
    for _ in 0..50 {
        let logits = Array1::from_shape_fn(6, |_| r.random_range(-4.0..4.0));
        let label = r.random_range(0..6);
        let (_, g) = cross_entropy(logits.view(), label).unwrap();
        for i in 0..6 {
            let h = 1e-5;
            let mut up = logits.clone();
            up[i] += h;
            let mut dn = logits.clone();
            dn[i] -= h;
            let fd = (common::ce_loss(up.as_slice().unwrap(), label) - common::ce_loss(dn.as_slice().unwrap(), label))
                / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6);
        }
    }
}

/// Textbook Adam on flat vectors.
fn adam_oracle(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], t: i32, lr: f64) {
    for i in 0..p.len() {
        m[i] = 0.9 * m[i] + 0.1 * g[i];
        v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
        let mh = m[i] / (1.0 - 0.9f64.powi(t));
        let vh = v[i] / (1.0 - 0.999f64.powi(t));
        p[i] -= lr * mh / (vh.sqrt() + 1e-8);
    }
}

#[test]
fn adam_zero_gradient_is_identity() {
    let mut p = ArrayD::from_elem(IxDyn(&[3, 2]), 0.7f64);
    let before = p.clone();
    let mut st = AdamState::new([&p]);
    adam_step(&mut [&mut p], &[ArrayD::zeros(IxDyn(&[3, 2]))], &mut st, 1e-3, &AdamConfig::default()).unwrap();
    assert_eq!(p, before);
    assert_eq!(st.t, 1);
}

#[test]
fn adam_first_step_is_lr() {
    let mut p = ArrayD::from_elem(IxDyn(&[1]), 0.0f64);
    let mut st = AdamState::new([&p]);
    adam_step(&mut [&mut p], &[ArrayD::from_elem(IxDyn(&[1]), 1.0)], &mut st, 1e-3, &AdamConfig::default()).unwrap();
    assert!((p[[0]] + 1e-3).abs() < 1e-6);
}

#[test]
fn adam_matches_oracle_over_two_steps() {
    let mut r = rng(8);
    let mut p = ArrayD::from_shape_fn(IxDyn(&[4, 3]), |_| r.random_range(-1.0..1.0));
    let mut q: Vec<f64> = p.iter().cloned().collect();
    let (mut m, mut v) = (vec![0.0; 12], vec![0.0; 12]);
    let mut st = AdamState::new([&p]);
    for t in 1..=2 {
        let g = ArrayD::from_shape_fn(IxDyn(&[4, 3]), |_| r.random_range(-2.0..2.0));
        adam_step(&mut [&mut p], std::slice::from_ref(&g), &mut st, 5e-3, &AdamConfig::default()).unwrap();
        adam_oracle(&mut q, g.as_slice().unwrap(), &mut m, &mut v, t, 5e-3);
    }
    for (a, b) in p.iter().zip(&q) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn adam_errors() {
    let mut p = ArrayD::from_elem(IxDyn(&[2]), 1.0f64);
    let mut st = AdamState::new([&p]);
    let cfg = AdamConfig::default();
    assert!(adam_step(&mut [&mut p], &[ArrayD::zeros(IxDyn(&[3]))], &mut st, 1e-3, &cfg).is_err());
    let bad = ArrayD::from_elem(IxDyn(&[2]), f64::NAN);
    assert!(adam_step(&mut [&mut p], &[bad], &mut st, 1e-3, &cfg).is_err());
    assert_eq!(p, ArrayD::from_elem(IxDyn(&[2]), 1.0));
}

#[test]
fn linear_schedule() {
    let c = TrainConfig::default();
    assert!((c.lr_at(0).unwrap() - 1e-3).abs() < 1e-18);
    assert!((c.lr_at(49).unwrap() - 1e-4).abs() < 1e-18);
    assert!((c.lr_at(24).unwrap() - (1e-3 - 0.9e-3 * 24.0 / 49.0)).abs() < 1e-15);
    assert!((c.lr_at(24).unwrap() - 5.59e-4).abs() < 1e-6);
    assert!(c.lr_at(50).is_err());
    assert_eq!(lr_at(0, 1, 1e-3, 1e-4).unwrap(), 1e-3);
}

#[test]
fn config_validation() {
    let mut c = TrainConfig::default();
    c.validate().unwrap();
    c.lr_end = 2e-3;
    assert!(c.validate().is_err());
    let c = TrainConfig {
        epochs: 0,
        ..TrainConfig::default()
    };
    assert!(c.validate().is_err());
}

#[test]
fn label_map_sorted_lookup() {
    let m = LabelMap::new(["yes", "no", "go"]).unwrap();
    assert_eq!(m.labels(), ["go", "no", "yes"]);
    assert_eq!(m.index("no").unwrap(), 1);
    assert!(m.index("up").is_err());
    assert!(LabelMap::new(["a", "a", "b"]).is_err());
    assert!(LabelMap::new(["a"]).is_err());
}

#[test]
fn fix_length_crops_and_pads() {
    let x = Array2::from_shape_fn((5, 2), |(i, j)| (i * 2 + j) as f64 + 1.0);
    let c = fix_length(&x, 3);
    assert_eq!(c, x.slice(ndarray::s![..3, ..]));
    let p = fix_length(&x, 7);
    assert_eq!(p.slice(ndarray::s![..5, ..]), x);
    assert!(p.slice(ndarray::s![5.., ..]).iter().all(|&v| v == 0.0));
}

#[test]
fn argmax_first_maximum() {
    assert_eq!(argmax(arr1(&[1.0, 3.0, 3.0, 2.0]).iter()), 1);
    assert_eq!(argmax(Vec::<f64>::new()), 0);
}

fn synth_set(n_per_class: usize, classes: usize, seed_base: u64) -> CorpusManifest {
    let mut entries = Vec::new();
    for c in 0..classes {
        for k in 0..n_per_class {
            let spk = format!("spk{}", seed_base + k as u64);
            entries.push(ManifestEntry::new(
                format!("synth://keyword/{}", seed_base * 100 + (c * n_per_class + k) as u64),
                COMMANDS[c],
                spk,
            ));
        }
    }
    CorpusManifest::new(entries)
}

fn featurize(m: &CorpusManifest, labels: &LabelMap) -> Dataset<f32> {
    let ex = FeatureExtractor::<f32>::new(&FeatureConfig::default()).unwrap();
    let src = FeatureSource {
        extractor: &ex,
        feature: FeatureType::Mel,
    };
    Dataset::from_manifest(m, labels, &src, None).unwrap()
}

#[test]
fn overfits_small_set_and_keeps_best_checkpoint() {
    let train_m = synth_set(5, 4, 1);
    let valid_m = synth_set(3, 4, 50);
    let labels = LabelMap::from_manifest(&train_m).unwrap();
    let train_d = featurize(&train_m, &labels);
    let valid_d = featurize(&valid_m, &labels);
    let spec = ModelSpec::new(Family::Dnn, 0.25, DepthVariant::Full).with_io(64, 4);
    let model = Model::<f32>::build(&spec, &mut rng(0)).unwrap();
    let cfg = TrainConfig {
        seed: 3,
        batch_size: 4,
        ..TrainConfig::default()
    };
    let out = train(model, &train_d, &valid_d, &cfg).unwrap();
    let h = &out.history;
    assert_eq!(h.epochs.len(), 50);
    assert!(h.epochs.iter().any(|e| e.train_acc == 1.0));
    assert_eq!(Some(h.best_epoch), h.argmin_valid());
    let (vx, vy) = valid_d.plain(TRAIN_FRAMES);
    let best_err = error_rate(&out.best, &vx, &vy).unwrap();
    let last_err = error_rate(&out.last, &vx, &vy).unwrap();
    assert_eq!(best_err, h.epochs[h.best_epoch].valid_err);
    assert!(best_err <= last_err);

    let again = train(Model::<f32>::build(&spec, &mut rng(0)).unwrap(), &train_d, &valid_d, &cfg).unwrap();
    assert_eq!(again.history, out.history);
    assert_eq!(again.best, out.best);
}

#[test]
fn separable_toy_loss_drops() {
    let mut r = rng(4);
    let examples: Vec<Example<f64>> = (0..16)
        .map(|i| {
            let label = i % 2;
            let sign = if label == 0 { -1.0 } else { 1.0 };
            let x = Array2::from_shape_fn((3, 4), |(_, j)| if j == 0 { sign } else { r.random_range(-0.3..0.3) });
            Example {
                variants: vec![x],
                label,
            }
        })
        .collect();
    let data = Dataset::new(examples).unwrap();
    let spec = ModelSpec::new(Family::Dnn, 0.25, DepthVariant::Reduced).with_io(4, 2);
    let model = Model::<f64>::build(&spec, &mut rng(1)).unwrap();
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 16,
        lr_start: 1e-2,
        lr_end: 1e-2,
        frames: 3,
        ..TrainConfig::default()
    };
    let out = train(model, &data, &data, &cfg).unwrap();
    let losses: Vec<f64> = out.history.epochs.iter().map(|e| e.train_loss).collect();
    assert!(losses.last().unwrap() < &1e-2, "{:?}", &losses[losses.len() - 3..]);
    assert!(losses[losses.len() - 1] < losses[0]);
}

#[test]
fn patience_stops_early() {
    let mut r = rng(5);
    let examples: Vec<Example<f64>> = (0..6)
        .map(|i| Example {
            variants: vec![Array2::from_shape_fn((2, 3), |_| r.random_range(-1.0..1.0))],
            label: i % 2,
        })
        .collect();
    let data = Dataset::new(examples).unwrap();
    let spec = ModelSpec::new(Family::Dnn, 0.25, DepthVariant::Reduced).with_io(3, 2);
    let cfg = TrainConfig {
        epochs: 30,
        patience: Some(2),
        frames: 2,
        ..TrainConfig::default()
    };
    let out = train(Model::<f64>::build(&spec, &mut rng(1)).unwrap(), &data, &data, &cfg).unwrap();
    let h = &out.history;
    assert!(h.epochs.len() < 30);
    assert_eq!(h.epochs.len(), h.best_epoch + 3);
}

#[test]
fn rejects_labels_beyond_model() {
    let data = Dataset::new(vec![Example {
        variants: vec![Array2::<f64>::zeros((2, 3))],
        label: 4,
    }])
    .unwrap();
    let spec = ModelSpec::new(Family::Dnn, 0.25, DepthVariant::Reduced).with_io(3, 2);
    let m = Model::<f64>::build(&spec, &mut rng(1)).unwrap();
    assert!(train(m, &data, &data, &TrainConfig::default()).is_err());
    assert!(Dataset::<f64>::new(vec![]).is_err());
}

#[test]
fn history_csv_round_trip() {
    let h = TrainHistory {
        epochs: vec![
            EpochRecord {
                epoch: 0,
                train_loss: 1.25,
                train_acc: 0.5,
                valid_err: 0.4,
                lr: 1e-3,
            },
            EpochRecord {
                epoch: 1,
                train_loss: 0.75,
                train_acc: 0.8,
                valid_err: 0.4,
                lr: 1e-4,
            },
        ],
        best_epoch: 0,
    };
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.csv");
    h.write_csv(&p).unwrap();
    assert!(std::fs::read_to_string(&p).unwrap().starts_with("epoch,train_loss,train_acc,valid_err,lr\n"));
    assert_eq!(TrainHistory::read_csv(&p).unwrap(), h);
}
