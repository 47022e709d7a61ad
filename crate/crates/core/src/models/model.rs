use ndarray::{Array1, Array2, ArrayD, ArrayView1, ArrayView2, Ix1, IxDyn};
use rand::Rng;
use rayon::prelude::*;

use super::arch::{layer_plan, min_frames};
use super::layers::{Layer, Trace};
use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub spec: ModelSpec,
    pub layers: Vec<Layer<T>>,
    pub param_count: usize,
}

/// Logits plus the per-layer traces needed by [`Model::backward`].
#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    pub logits: Array1<T>,
    traces: Vec<Trace<T>>,
}

/// One gradient tensor per parameter tensor, in [`Model::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<ArrayD<T>>,
}

pub fn build_model<T: Scalar, R: Rng>(spec: &ModelSpec, rng: &mut R) -> Result<Model<T>> {
    Model::build(spec, rng)
}

pub fn softmax<T: Scalar>(logits: ArrayView1<'_, T>) -> Array1<T> {
    let m = logits.fold(T::neg_infinity(), |a, &b| a.max(b));
    let e = logits.mapv(|v| (v - m).exp());
    let s = e.sum();
    e / s
}

pub fn log_softmax<T: Scalar>(logits: ArrayView1<'_, T>) -> Array1<T> {
    let m = logits.fold(T::neg_infinity(), |a, &b| a.max(b));
    let lse = logits.iter().map(|&v| (v - m).exp()).sum::<T>().ln() + m;
    logits.mapv(|v| v - lse)
}

impl<T: Scalar> Model<T> {
    /// Architecture with every tensor zero.
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self::from_layers(*spec, layer_plan(spec)))
    }

    pub fn build<R: Rng>(spec: &ModelSpec, rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(spec)?;
        for layer in &mut m.layers {
            layer.init(rng);
        }
        Ok(m)
    }

    /// Wraps an arbitrary layer stack. The spec is kept for bookkeeping only.
    pub fn from_layers(spec: ModelSpec, layers: Vec<Layer<T>>) -> Self {
        let param_count = layers
            .iter()
            .flat_map(|l| l.params())
            .map(|(_, p)| p.len())
            .sum();
        Model {
            spec,
            layers,
            param_count,
        }
    }

    pub fn min_frames(&self) -> usize {
        min_frames(&self.spec)
    }

    /// Named parameter tensors, e.g. `03.dense.weight`.
    pub fn params(&self) -> Vec<(String, &ArrayD<T>)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                l.params()
                    .into_iter()
                    .map(move |(n, p)| (format!("{i:02}.{}.{n}", l.name()), p))
            })
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut ArrayD<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn forward(&self, x: ArrayView2<'_, T>) -> Result<ForwardPass<T>> {
        let (frames, dims) = x.dim();
        if dims != self.spec.input_dims {
            return Err(Error::Shape(format!(
                "{}: input has {dims} dims, model expects {}",
                self.spec.id(),
                self.spec.input_dims
            )));
        }
        let need = self.min_frames();
        if frames < need {
            return Err(Error::Shape(format!(
                "{}: {frames} frames is below the minimum of {need}",
                self.spec.id()
            )));
        }
        let mut h = x.to_owned().into_dyn();
        let mut traces = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, tr) = layer.forward(h)?;
            traces.push(tr);
            h = y;
        }
        let logits = h
            .into_dimensionality::<Ix1>()
            .map_err(|_| Error::Shape("network output is not a vector".into()))?;
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} logits", self.spec.id())));
        }
        Ok(ForwardPass { logits, traces })
    }

    pub fn predict(&self, x: ArrayView2<'_, T>) -> Result<Array1<T>> {
        Ok(self.forward(x)?.logits)
    }

    pub fn forward_batch(&self, xs: &[Array2<T>]) -> Result<Vec<Array1<T>>> {
        xs.par_iter().map(|x| self.predict(x.view())).collect()
    }

    /// Gradients of `dot(dlogits, logits)` w.r.t. every parameter.
    pub fn backward(&self, pass: &ForwardPass<T>, dlogits: ArrayView1<'_, T>) -> Result<Gradients<T>> {
        let mut g = Gradients::zeros_like(self);
        self.backward_into(pass, dlogits, &mut g)?;
        Ok(g)
    }

    /// As [`Model::backward`], accumulating into `grads`.
    pub fn backward_into(
        &self,
        pass: &ForwardPass<T>,
        dlogits: ArrayView1<'_, T>,
        grads: &mut Gradients<T>,
    ) -> Result<()> {
        if pass.traces.len() != self.layers.len() || dlogits.len() != pass.logits.len() {
            return Err(Error::Shape("forward pass does not belong to this model".into()));
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut at = 0;
        for l in &self.layers {
            offsets.push(at);
            at += l.params().len();
        }
        if grads.tensors.len() != at {
            return Err(Error::Shape("gradient buffer does not match model".into()));
        }
        let mut dy = dlogits.to_owned().into_dyn();
        for (i, (layer, tr)) in self.layers.iter().zip(&pass.traces).enumerate().rev() {
            let n = layer.params().len();
            dy = layer.backward(tr, dy, &mut grads.tensors[offsets[i]..offsets[i] + n]);
        }
        Ok(())
    }

    /// Converts every tensor to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model::from_layers(self.spec, self.layers.iter().map(cast_layer).collect())
    }
}

fn cast_layer<T: Scalar, U: Scalar>(l: &Layer<T>) -> Layer<U> {
    let mut plan = match l {
        Layer::Dense(d) => Layer::Dense(super::layers::Dense::zeros(d.weight.shape()[0], d.weight.shape()[1])),
        Layer::Splice { context } => Layer::Splice { context: *context },
        Layer::Conv1d(c) => Layer::Conv1d(super::layers::Conv1d::zeros(
            c.weight.shape()[0] / c.kernel,
            c.weight.shape()[1],
            c.kernel,
            c.dilation,
        )),
        Layer::Conv2d(c) => Layer::Conv2d(super::layers::Conv2d::zeros(c.weight.shape()[0] / 9, c.weight.shape()[1])),
        Layer::MaxPool2d => Layer::MaxPool2d,
        Layer::Relu => Layer::Relu,
        Layer::ToImage => Layer::ToImage,
        Layer::TimeMeanPool => Layer::TimeMeanPool,
        Layer::BiGru(g) => Layer::BiGru(super::gru::BiGru::zeros(
            g.fwd.w_ih.shape()[0],
            g.fwd.hidden(),
            g.sequence,
        )),
    };
    for (dst, (_, src)) in plan.params_mut().into_iter().zip(l.params()) {
        *dst = src.mapv(|v| U::lit(v.as_f64()));
    }
    plan
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(model: &Model<T>) -> Self {
        Gradients {
            tensors: model
                .params()
                .into_iter()
                .map(|(_, p)| ArrayD::zeros(IxDyn(p.shape())))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            *a += b;
        }
    }

    pub fn scale(&mut self, k: T) {
        for a in &mut self.tensors {
            a.mapv_inplace(|v| v * k);
        }
    }

    pub fn fill_zero(&mut self) {
        for a in &mut self.tensors {
            a.fill(T::zero());
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn l2_norm(&self) -> T {
        self.tensors
            .iter()
            .flat_map(|t| t.iter())
            .map(|&v| v * v)
            .sum::<T>()
            .sqrt()
    }
}
