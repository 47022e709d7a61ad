//! Layer plans for the five families.
//!
//! Default widths at x1: TDNN 64 channels; DNN 256 hidden units; DNN_GRU
//! 256 FC units and 128 GRU units per direction; CNN 16/32/64 channels with a
//! 128-unit head; CNN14 16..512 channels over six blocks.

use super::gru::BiGru;
use super::layers::{Conv1d, Conv2d, Dense, Layer};
use super::spec::{DepthVariant, Family, ModelSpec};
use crate::scalar::Scalar;

/// `(kernel, dilation)` of the five TDNN convolutions.
pub const TDNN_LAYERS: [(usize, usize); 5] = [(5, 1), (3, 2), (3, 3), (1, 1), (1, 1)];
pub const CNN_CHANNELS: [usize; 3] = [16, 32, 64];
pub const CNN14_CHANNELS: [usize; 6] = [16, 32, 64, 128, 256, 512];

struct Widths {
    tdnn: usize,
    dnn: usize,
    gru_fc: usize,
    gru: usize,
    cnn: [usize; 3],
    cnn_head: usize,
    cnn14: [usize; 6],
}

fn widths(spec: &ModelSpec) -> Widths {
    Widths {
        tdnn: spec.width(64),
        dnn: spec.width(256),
        gru_fc: spec.width(256),
        gru: spec.width(128),
        cnn: CNN_CHANNELS.map(|c| spec.width(c)),
        cnn_head: spec.width(128),
        cnn14: CNN14_CHANNELS.map(|c| spec.width(c)),
    }
}

/// Frequency bins left after `pools` ceil-mode halvings.
fn pooled(dims: usize, pools: usize) -> usize {
    (0..pools).fold(dims, |d, _| d.div_ceil(2))
}

/// Shortest input (in frames) the family accepts.
pub fn min_frames(spec: &ModelSpec) -> usize {
    match spec.family {
        Family::Tdnn => 1 + TDNN_LAYERS.iter().map(|(k, d)| (k - 1) * d).sum::<usize>(),
        _ => 1,
    }
}

/// Zero-valued layer stack for `spec`.
pub fn layer_plan<T: Scalar>(spec: &ModelSpec) -> Vec<Layer<T>> {
    let w = widths(spec);
    let (din, k) = (spec.input_dims, spec.n_classes);
    let reduced = spec.depth == DepthVariant::Reduced;
    let dense = |a, b| Layer::Dense(Dense::zeros(a, b));
    let mut v: Vec<Layer<T>> = Vec::new();
    match spec.family {
        Family::Tdnn => {
            let mut cin = din;
            for (kernel, dilation) in TDNN_LAYERS {
                v.push(Layer::Conv1d(Conv1d::zeros(cin, w.tdnn, kernel, dilation)));
                v.push(Layer::Relu);
                cin = w.tdnn;
            }
            v.push(Layer::TimeMeanPool);
            v.extend([dense(w.tdnn, w.tdnn), Layer::Relu, dense(w.tdnn, k)]);
        }
        Family::Dnn => {
            let h = w.dnn;
            v.extend([Layer::Splice { context: 3 }, dense(3 * din, h), Layer::Relu]);
            v.extend([Layer::Splice { context: 3 }, dense(3 * h, h), Layer::Relu]);
            if !reduced {
                v.extend([dense(h, h), Layer::Relu]);
            }
            v.push(Layer::TimeMeanPool);
            v.extend([dense(h, h), Layer::Relu, dense(h, k)]);
        }
        Family::DnnGru => {
            let (f, g) = (w.gru_fc, w.gru);
            v.extend([dense(din, f), Layer::Relu, dense(f, f), Layer::Relu]);
            if reduced {
                v.push(Layer::BiGru(BiGru::zeros(f, g, false)));
            } else {
                v.push(Layer::BiGru(BiGru::zeros(f, g, true)));
                v.push(Layer::BiGru(BiGru::zeros(2 * g, g, false)));
            }
            v.extend([dense(2 * g, f), Layer::Relu, dense(f, k)]);
        }
        Family::Cnn => {
            let n = if reduced { 2 } else { 3 };
            v.push(Layer::ToImage);
            let mut cin = 1;
            for &c in &w.cnn[..n] {
                v.extend([Layer::Conv2d(Conv2d::zeros(cin, c)), Layer::Relu, Layer::MaxPool2d]);
                cin = c;
            }
            v.push(Layer::TimeMeanPool);
            let flat = cin * pooled(din, n);
            v.extend([dense(flat, w.cnn_head), Layer::Relu, dense(w.cnn_head, k)]);
        }
        Family::Cnn14 => {
            let reps = if reduced { 1 } else { 2 };
            v.push(Layer::ToImage);
            let mut cin = 1;
            for &c in &w.cnn14 {
                for _ in 0..reps {
                    v.extend([Layer::Conv2d(Conv2d::zeros(cin, c)), Layer::Relu]);
                    cin = c;
                }
                v.push(Layer::MaxPool2d);
            }
            v.push(Layer::TimeMeanPool);
            let flat = cin * pooled(din, 6);
            v.extend([dense(flat, cin), Layer::Relu, dense(cin, k)]);
        }
    }
    v
}

/// Closed-form trainable parameter count of `spec`.
pub fn analytic_param_count(spec: &ModelSpec) -> usize {
    let w = widths(spec);
    let (din, k) = (spec.input_dims, spec.n_classes);
    let reduced = spec.depth == DepthVariant::Reduced;
    let fc = |a: usize, b: usize| a * b + b;
    let conv2 = |a: usize, b: usize| 9 * a * b + b;
    let bigru = |a: usize, g: usize| 2 * (3 * g * (a + g) + 6 * g);
    match spec.family {
        Family::Tdnn => {
            let c = w.tdnn;
            fc(5 * din, c) + fc(3 * c, c) * 2 + fc(c, c) * 2 + fc(c, c) + fc(c, k)
        }
        Family::Dnn => {
            let h = w.dnn;
            let extra = if reduced { 0 } else { fc(h, h) };
            fc(3 * din, h) + fc(3 * h, h) + extra + fc(h, h) + fc(h, k)
        }
        Family::DnnGru => {
            let (f, g) = (w.gru_fc, w.gru);
            let rec = if reduced {
                bigru(f, g)
            } else {
                bigru(f, g) + bigru(2 * g, g)
            };
            fc(din, f) + fc(f, f) + rec + fc(2 * g, f) + fc(f, k)
        }
        Family::Cnn => {
            let n = if reduced { 2 } else { 3 };
            let ch = &w.cnn[..n];
            let convs: usize = conv2(1, ch[0]) + ch.windows(2).map(|p| conv2(p[0], p[1])).sum::<usize>();
            convs + fc(ch[n - 1] * pooled(din, n), w.cnn_head) + fc(w.cnn_head, k)
        }
        Family::Cnn14 => {
            let ch = w.cnn14;
            let mut total = 0;
            let mut cin = 1;
            for c in ch {
                total += conv2(cin, c);
                if !reduced {
                    total += conv2(c, c);
                }
                cin = c;
            }
            total + fc(cin * pooled(din, 6), cin) + fc(cin, k)
        }
    }
}
