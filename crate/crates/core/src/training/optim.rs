use ndarray::{Array1, ArrayD, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::softmax;
use crate::scalar::Scalar;

/// Negative log-likelihood of `label` and its gradient w.r.t. the logits.
pub fn cross_entropy<T: Scalar>(logits: ArrayView1<'_, T>, label: usize) -> Result<(T, Array1<T>)> {
    if label >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let mut grad = softmax(logits);
    let m = logits.fold(T::neg_infinity(), |a, &b| a.max(b));
    let lse = logits.iter().map(|&v| (v - m).exp()).sum::<T>().ln() + m;
    let loss = lse - logits[label];
    grad[label] -= T::one();
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<ArrayD<T>>,
    pub v: Vec<ArrayD<T>>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a ArrayD<T>>) -> Self {
        let m: Vec<ArrayD<T>> = params.into_iter().map(|p| ArrayD::zeros(p.raw_dim())).collect();
        AdamState {
            v: m.clone(),
            m,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update. Parameters are left untouched when any
/// gradient is non-finite.
pub fn adam_step<T: Scalar>(
    params: &mut [&mut ArrayD<T>],
    grads: &[ArrayD<T>],
    state: &mut AdamState<T>,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.m) {
        if p.shape() != g.shape() || p.shape() != m.shape() {
            return Err(Error::Shape(format!("adam: {:?} vs {:?}", p.shape(), g.shape())));
        }
    }
    if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("gradient".into()));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let c1 = T::lit(1.0 - cfg.beta1.powi(t));
    let c2 = T::lit(1.0 - cfg.beta2.powi(t));
    let (lr, eps) = (T::lit(lr), T::lit(cfg.eps));
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        ndarray::Zip::from(&mut **p)
            .and(g)
            .and(m)
            .and(v)
            .for_each(|p, &g, m, v| {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let mhat = *m / c1;
                let vhat = *v / c2;
                *p -= lr * mhat / (vhat.sqrt() + eps);
            });
    }
    Ok(())
}

/// Learning rate of `epoch` under linear annealing from `lr_start` to `lr_end`.
pub fn lr_at(epoch: usize, epochs: usize, lr_start: f64, lr_end: f64) -> Result<f64> {
    if epoch >= epochs {
        return Err(Error::InvalidArgument(format!("epoch {epoch} out of range 0..{epochs}")));
    }
    if epochs == 1 {
        return Ok(lr_start);
    }
    Ok(lr_start + (lr_end - lr_start) * epoch as f64 / (epochs - 1) as f64)
}
