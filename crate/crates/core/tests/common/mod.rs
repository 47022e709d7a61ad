#![allow(dead_code)]

pub mod dsp;
pub mod oracle;

use ndarray::{Array2, ArrayD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustline::models::{softmax, Layer, Model, Trace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_input(frames: usize, dims: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_fn((frames, dims), |_| r.random_range(-1.0..1.0))
}

/// Cross-entropy of `label` computed directly from the logits.
pub fn ce_loss(logits: &[f64], label: usize) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m;
    lse - logits[label]
}

/// Logits plus the activation pattern (ReLU signs, max-pool argmax) of
/// every layer in `layers`.
fn run_from(layers: &[Layer<f64>], x: ArrayD<f64>) -> (Vec<f64>, Vec<Vec<usize>>) {
    let mut h = x;
    let mut pattern = Vec::with_capacity(layers.len());
    for l in layers {
        let (y, tr) = l.forward(h).unwrap();
        pattern.push(match tr {
            Trace::Relu { output } => output.iter().map(|&v| (v > 0.0) as usize).collect(),
            Trace::MaxPool { argmax, .. } => argmax,
            _ => Vec::new(),
        });
        h = y;
    }
    (h.iter().cloned().collect(), pattern)
}

pub struct GradReport {
    pub checked: usize,
    /// Parameters whose perturbation crossed a ReLU or max-pool boundary at
    /// the first input and were verified at a later one.
    pub rechecked: usize,
    /// Parameters with no smooth evaluation point among the inputs.
    pub unresolved: usize,
    pub max_rel: f64,
    pub worst: String,
}

impl GradReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.checked > 0 && self.unresolved == 0 && self.max_rel <= tol
    }
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

struct Point {
    grads: Vec<ArrayD<f64>>,
    acts: Vec<ArrayD<f64>>,
    pattern: Vec<Vec<usize>>,
}

fn point(model: &Model<f64>, x: &Array2<f64>, label: usize) -> Point {
    let pass = model.forward(x.view()).unwrap();
    let mut d = softmax(pass.logits.view());
    d[label] -= 1.0;
    let grads = model.backward(&pass, d.view()).unwrap().tensors;
    let mut acts = vec![x.clone().into_dyn()];
    for l in &model.layers {
        let next = l.forward(acts.last().unwrap().clone()).unwrap().0;
        acts.push(next);
    }
    let (_, pattern) = run_from(&model.layers, acts[0].clone());
    Point {
        grads,
        acts,
        pattern,
    }
}

/// Compares backprop against central differences for every parameter.
///
/// Activations before each layer are cached so a perturbation only reruns
/// the layers it can influence. A difference quotient is only meaningful when
/// neither perturbation changes the activation pattern; otherwise the
/// parameter is retried at the next input in `inputs`.
pub fn fd_check(model: &Model<f64>, inputs: &[Array2<f64>], label: usize, h: f64) -> GradReport {
    let mut points: Vec<Point> = vec![point(model, &inputs[0], label)];
    let mut work = model.clone();
    let mut report = GradReport {
        checked: 0,
        rechecked: 0,
        unresolved: 0,
        max_rel: 0.0,
        worst: String::new(),
    };
    let mut slot = 0;
    for li in 0..model.layers.len() {
        let n_params = model.layers[li].params().len();
        for pi in 0..n_params {
            let len = model.layers[li].params()[pi].1.len();
            for j in 0..len {
                let mut resolved = false;
                for k in 0..inputs.len() {
                    if k == points.len() {
                        points.push(point(model, &inputs[k], label));
                    }
                    let pt = &points[k];
                    let orig = work.layers[li].params_mut()[pi].as_slice().unwrap()[j];
                    work.layers[li].params_mut()[pi].as_slice_mut().unwrap()[j] = orig + h;
                    let (up, pu) = run_from(&work.layers[li..], pt.acts[li].clone());
                    work.layers[li].params_mut()[pi].as_slice_mut().unwrap()[j] = orig - h;
                    let (down, pd) = run_from(&work.layers[li..], pt.acts[li].clone());
                    work.layers[li].params_mut()[pi].as_slice_mut().unwrap()[j] = orig;
                    if pu != pt.pattern[li..] || pd != pt.pattern[li..] {
                        continue;
                    }
                    let numeric = (ce_loss(&up, label) - ce_loss(&down, label)) / (2.0 * h);
                    let analytic = pt.grads[slot + pi].as_slice().unwrap()[j];
                    let e = rel_err(analytic, numeric);
                    report.checked += 1;
                    report.rechecked += (k > 0) as usize;
                    if e > report.max_rel {
                        report.max_rel = e;
                        report.worst = format!(
                            "layer {li} ({}) tensor {pi} elem {j} input {k}: analytic {analytic:e} numeric {numeric:e}",
                            model.layers[li].name()
                        );
                    }
                    resolved = true;
                    break;
                }
                if !resolved {
                    report.unresolved += 1;
                }
            }
        }
        slot += n_params;
    }
    report
}

/// Replaces every bias vector with small random values so no pre-activation
/// sits exactly on a ReLU boundary at the check point.
pub fn jitter_biases(model: &mut Model<f64>, seed: u64) {
    let mut r = rng(seed);
    for p in model.params_mut() {
        if p.ndim() == 1 {
            p.mapv_inplace(|_| r.random_range(-0.1..0.1));
        }
    }
}
