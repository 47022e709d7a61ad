//! Layer primitives with explicit forward traces and backward passes.
//!
//! Activations travel as dynamic-rank arrays: sequences are `[frames, dims]`,
//! images `[channels, frames, freq]`, pooled vectors `[dims]`. Trainable
//! weights are stored in im2col layout (`[fan_in, fan_out]`) so every layer
//! reduces to matrix products.

use ndarray::{s, Array1, Array2, Array3, ArrayD, ArrayView2, Axis, Ix1, Ix2, Ix3, IxDyn};
use rand::Rng;

use super::gru::{BiGru, GruTrace};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    /// `[din, dout]`
    pub weight: ArrayD<T>,
    /// `[dout]`
    pub bias: ArrayD<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d<T> {
    pub kernel: usize,
    pub dilation: usize,
    /// `[kernel * cin, cout]`, row `j * cin + c` is tap `j` of input channel `c`.
    pub weight: ArrayD<T>,
    pub bias: ArrayD<T>,
}

/// 3x3 convolution, stride 1, zero padding 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T> {
    /// `[cin * 9, cout]`, row `c * 9 + kh * 3 + kw`.
    pub weight: ArrayD<T>,
    pub bias: ArrayD<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Dense(Dense<T>),
    /// Frame splicing: frame `t` becomes frames `t - c/2 ..= t + c/2`
    /// concatenated, zero-padded at the edges.
    Splice { context: usize },
    /// Valid (unpadded) dilated convolution over time.
    Conv1d(Conv1d<T>),
    Conv2d(Conv2d<T>),
    /// 2x2 max pooling, stride 2, ceil mode.
    MaxPool2d,
    Relu,
    /// `[frames, dims]` to a single-channel image `[1, frames, dims]`.
    ToImage,
    /// Mean over frames: `[T, D] -> [D]`, `[C, T, F] -> [C * F]`.
    TimeMeanPool,
    BiGru(BiGru<T>),
}

#[derive(Debug, Clone)]
pub enum Trace<T> {
    Dense { input: Array2<T>, shape: Vec<usize> },
    Splice { dims: usize },
    Conv1d { cols: Array2<T>, frames_in: usize },
    Conv2d { cols: Array2<T>, shape: (usize, usize, usize) },
    MaxPool { argmax: Vec<usize>, shape: (usize, usize, usize) },
    Relu { output: ArrayD<T> },
    ToImage,
    TimeMeanPool { shape: Vec<usize> },
    BiGru(Box<GruTrace<T>>),
}

pub(crate) fn glorot<T: Scalar, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ArrayD<T> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    ArrayD::from_shape_fn(IxDyn(&[rows, cols]), |_| T::lit(rng.random_range(-limit..=limit)))
}

fn zeros<T: Scalar>(shape: &[usize]) -> ArrayD<T> {
    ArrayD::zeros(IxDyn(shape))
}

pub(crate) fn as2<T: Scalar>(a: &ArrayD<T>) -> ArrayView2<'_, T> {
    a.view().into_dimensionality::<Ix2>().expect("rank-2 tensor")
}

fn shape_err(layer: &str, got: &[usize], want: &str) -> Error {
    Error::Shape(format!("{layer}: got input {got:?}, expected {want}"))
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(din: usize, dout: usize) -> Self {
        Dense {
            weight: zeros(&[din, dout]),
            bias: zeros(&[dout]),
        }
    }

    fn din(&self) -> usize {
        self.weight.shape()[0]
    }
}

impl<T: Scalar> Conv1d<T> {
    pub fn zeros(cin: usize, cout: usize, kernel: usize, dilation: usize) -> Self {
        Conv1d {
            kernel,
            dilation,
            weight: zeros(&[kernel * cin, cout]),
            bias: zeros(&[cout]),
        }
    }

    fn cin(&self) -> usize {
        self.weight.shape()[0] / self.kernel
    }

    /// Frames consumed beyond the first output frame.
    pub fn span(&self) -> usize {
        (self.kernel - 1) * self.dilation
    }
}

impl<T: Scalar> Conv2d<T> {
    pub fn zeros(cin: usize, cout: usize) -> Self {
        Conv2d {
            weight: zeros(&[cin * 9, cout]),
            bias: zeros(&[cout]),
        }
    }

    fn cin(&self) -> usize {
        self.weight.shape()[0] / 9
    }
}

impl<T: Scalar> Layer<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Splice { .. } => "splice",
            Layer::Conv1d(_) => "conv1d",
            Layer::Conv2d(_) => "conv2d",
            Layer::MaxPool2d => "maxpool2d",
            Layer::Relu => "relu",
            Layer::ToImage => "to_image",
            Layer::TimeMeanPool => "time_mean_pool",
            Layer::BiGru(_) => "bigru",
        }
    }

    /// Trainable tensors with their local names.
    pub fn params(&self) -> Vec<(&'static str, &ArrayD<T>)> {
        match self {
            Layer::Dense(d) => vec![("weight", &d.weight), ("bias", &d.bias)],
            Layer::Conv1d(c) => vec![("weight", &c.weight), ("bias", &c.bias)],
            Layer::Conv2d(c) => vec![("weight", &c.weight), ("bias", &c.bias)],
            Layer::BiGru(g) => g.params(),
            _ => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut ArrayD<T>> {
        match self {
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            Layer::Conv1d(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Conv2d(c) => vec![&mut c.weight, &mut c.bias],
            Layer::BiGru(g) => g.params_mut(),
            _ => vec![],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        for p in self.params_mut() {
            if p.ndim() == 2 {
                let (r, c) = (p.shape()[0], p.shape()[1]);
                *p = glorot(r, c, rng);
            } else {
                p.fill(T::zero());
            }
        }
    }

    pub fn forward(&self, x: ArrayD<T>) -> Result<(ArrayD<T>, Trace<T>)> {
        match self {
            Layer::Dense(d) => dense_forward(d, x),
            Layer::Splice { context } => splice_forward(*context, x),
            Layer::Conv1d(c) => conv1d_forward(c, x),
            Layer::Conv2d(c) => conv2d_forward(c, x),
            Layer::MaxPool2d => maxpool_forward(x),
            Layer::Relu => {
                let y = x.mapv(|v| v.max(T::zero()));
                Ok((y.clone(), Trace::Relu { output: y }))
            }
            Layer::ToImage => {
                let shape = x.shape().to_vec();
                if shape.len() != 2 {
                    return Err(shape_err("to_image", &shape, "[frames, dims]"));
                }
                let y = x.into_shape_with_order(IxDyn(&[1, shape[0], shape[1]])).expect("reshape");
                Ok((y, Trace::ToImage))
            }
            Layer::TimeMeanPool => time_mean_forward(x),
            Layer::BiGru(g) => {
                let x2 = x
                    .into_dimensionality::<Ix2>()
                    .map_err(|_| Error::Shape("bigru expects [frames, dims]".into()))?;
                let (y, tr) = g.forward(x2)?;
                Ok((y, Trace::BiGru(Box::new(tr))))
            }
        }
    }

    /// Backpropagates `dy`, accumulating parameter gradients into `grads`
    /// (one slot per tensor of [`Layer::params`]), and returns the input
    /// gradient.
    pub fn backward(&self, trace: &Trace<T>, dy: ArrayD<T>, grads: &mut [ArrayD<T>]) -> ArrayD<T> {
        match (self, trace) {
            (Layer::Dense(d), Trace::Dense { input, shape }) => dense_backward(d, input, shape, dy, grads),
            (Layer::Splice { context }, Trace::Splice { dims }) => splice_backward(*context, *dims, dy),
            (Layer::Conv1d(c), Trace::Conv1d { cols, frames_in }) => {
                conv1d_backward(c, cols, *frames_in, dy, grads)
            }
            (Layer::Conv2d(c), Trace::Conv2d { cols, shape }) => conv2d_backward(c, cols, *shape, dy, grads),
            (Layer::MaxPool2d, Trace::MaxPool { argmax, shape }) => maxpool_backward(argmax, *shape, dy),
            (Layer::Relu, Trace::Relu { output }) => {
                let mut dx = dy;
                dx.zip_mut_with(output, |g, &y| {
                    if y <= T::zero() {
                        *g = T::zero();
                    }
                });
                dx
            }
            (Layer::ToImage, Trace::ToImage) => {
                let s = dy.shape().to_vec();
                dy.into_shape_with_order(IxDyn(&[s[1], s[2]])).expect("reshape")
            }
            (Layer::TimeMeanPool, Trace::TimeMeanPool { shape }) => time_mean_backward(shape, dy),
            (Layer::BiGru(g), Trace::BiGru(tr)) => g.backward(tr, dy, grads),
            _ => unreachable!("trace does not belong to layer {}", self.name()),
        }
    }
}

fn dense_forward<T: Scalar>(d: &Dense<T>, x: ArrayD<T>) -> Result<(ArrayD<T>, Trace<T>)> {
    let shape = x.shape().to_vec();
    let din = d.din();
    if shape.is_empty() || *shape.last().unwrap() != din || shape.len() > 2 {
        return Err(shape_err("dense", &shape, &format!("[.., {din}]")));
    }
    let rows = if shape.len() == 2 { shape[0] } else { 1 };
    let x2 = x
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((rows, din))
        .expect("reshape");
    let mut y = x2.dot(&as2(&d.weight));
    let b = d.bias.view().into_dimensionality::<Ix1>().expect("bias");
    y += &b;
    let out_shape: Vec<usize> = if shape.len() == 2 {
        vec![rows, y.ncols()]
    } else {
        vec![y.ncols()]
    };
    let y = y.into_shape_with_order(IxDyn(&out_shape)).expect("reshape");
    Ok((y, Trace::Dense { input: x2, shape }))
}

fn dense_backward<T: Scalar>(
    d: &Dense<T>,
    input: &Array2<T>,
    shape: &[usize],
    dy: ArrayD<T>,
    grads: &mut [ArrayD<T>],
) -> ArrayD<T> {
    let dout = d.weight.shape()[1];
    let dy2 = dy
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((input.nrows(), dout))
        .expect("reshape");
    let gw = input.t().dot(&dy2);
    grads[0] += &gw.into_dyn();
    grads[1] += &dy2.sum_axis(Axis(0)).into_dyn();
    let dx = dy2.dot(&as2(&d.weight).t());
    dx.into_shape_with_order(IxDyn(shape)).expect("reshape")
}

fn splice_forward<T: Scalar>(context: usize, x: ArrayD<T>) -> Result<(ArrayD<T>, Trace<T>)> {
    let x = x
        .into_dimensionality::<Ix2>()
        .map_err(|e| Error::Shape(format!("splice expects [frames, dims]: {e}")))?;
    let (frames, dims) = x.dim();
    let half = (context / 2) as isize;
    let mut y = Array2::zeros((frames, context * dims));
    for t in 0..frames as isize {
        for (j, off) in (-half..=half).enumerate() {
            let src = t + off;
            if src >= 0 && src < frames as isize {
                y.slice_mut(s![t, j * dims..(j + 1) * dims])
                    .assign(&x.row(src as usize));
            }
        }
    }
    Ok((y.into_dyn(), Trace::Splice { dims }))
}

fn splice_backward<T: Scalar>(context: usize, dims: usize, dy: ArrayD<T>) -> ArrayD<T> {
    let dy = dy.into_dimensionality::<Ix2>().expect("rank 2");
    let frames = dy.nrows();
    let half = (context / 2) as isize;
    let mut dx = Array2::<T>::zeros((frames, dims));
    for t in 0..frames as isize {
        for (j, off) in (-half..=half).enumerate() {
            let src = t + off;
            if src >= 0 && src < frames as isize {
                let mut row = dx.row_mut(src as usize);
                row += &dy.slice(s![t, j * dims..(j + 1) * dims]);
            }
        }
    }
    dx.into_dyn()
}

fn conv1d_forward<T: Scalar>(c: &Conv1d<T>, x: ArrayD<T>) -> Result<(ArrayD<T>, Trace<T>)> {
    let shape = x.shape().to_vec();
    let cin = c.cin();
    if shape.len() != 2 || shape[1] != cin {
        return Err(shape_err("conv1d", &shape, &format!("[frames, {cin}]")));
    }
    let frames_in = shape[0];
    if frames_in <= c.span() {
        return Err(Error::Shape(format!(
            "conv1d: {frames_in} frames is below the receptive field of {}",
            c.span() + 1
        )));
    }
    let x = x.into_dimensionality::<Ix2>().expect("rank 2");
    let frames_out = frames_in - c.span();
    let mut cols = Array2::zeros((frames_out, c.kernel * cin));
    for t in 0..frames_out {
        for j in 0..c.kernel {
            cols.slice_mut(s![t, j * cin..(j + 1) * cin])
                .assign(&x.row(t + j * c.dilation));
        }
    }
    let mut y = cols.dot(&as2(&c.weight));
    y += &c.bias.view().into_dimensionality::<Ix1>().expect("bias");
    Ok((y.into_dyn(), Trace::Conv1d { cols, frames_in }))
}

fn conv1d_backward<T: Scalar>(
    c: &Conv1d<T>,
    cols: &Array2<T>,
    frames_in: usize,
    dy: ArrayD<T>,
    grads: &mut [ArrayD<T>],
) -> ArrayD<T> {
    let dy = dy.into_dimensionality::<Ix2>().expect("rank 2");
    grads[0] += &cols.t().dot(&dy).into_dyn();
    grads[1] += &dy.sum_axis(Axis(0)).into_dyn();
    let dcols = dy.dot(&as2(&c.weight).t());
    let cin = c.cin();
    let mut dx = Array2::<T>::zeros((frames_in, cin));
    for t in 0..dcols.nrows() {
        for j in 0..c.kernel {
            let mut row = dx.row_mut(t + j * c.dilation);
            row += &dcols.slice(s![t, j * cin..(j + 1) * cin]);
        }
    }
    dx.into_dyn()
}

fn conv2d_forward<T: Scalar>(c: &Conv2d<T>, x: ArrayD<T>) -> Result<(ArrayD<T>, Trace<T>)> {
    let shape = x.shape().to_vec();
    let cin = c.cin();
    if shape.len() != 3 || shape[0] != cin {
        return Err(shape_err("conv2d", &shape, &format!("[{cin}, frames, freq]")));
    }
    let x = x.into_dimensionality::<Ix3>().expect("rank 3");
    let (_, h, w) = x.dim();
    let mut cols = Array2::<T>::zeros((h * w, cin * 9));
    for ch in 0..cin {
        for kh in 0..3 {
            for kw in 0..3 {
                let col = ch * 9 + kh * 3 + kw;
                for i in 0..h {
                    let si = i as isize + kh as isize - 1;
                    if si < 0 || si >= h as isize {
                        continue;
                    }
                    for j in 0..w {
                        let sj = j as isize + kw as isize - 1;
                        if sj >= 0 && sj < w as isize {
                            cols[(i * w + j, col)] = x[(ch, si as usize, sj as usize)];
                        }
                    }
                }
            }
        }
    }
    let mut y2 = cols.dot(&as2(&c.weight));
    y2 += &c.bias.view().into_dimensionality::<Ix1>().expect("bias");
    let cout = y2.ncols();
    let y = y2
        .t()
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((cout, h, w))
        .expect("reshape");
    Ok((y.into_dyn(), Trace::Conv2d { cols, shape: (cin, h, w) }))
}

fn conv2d_backward<T: Scalar>(
    c: &Conv2d<T>,
    cols: &Array2<T>,
    (cin, h, w): (usize, usize, usize),
    dy: ArrayD<T>,
    grads: &mut [ArrayD<T>],
) -> ArrayD<T> {
    let cout = dy.shape()[0];
    let dy2 = dy
        .into_shape_with_order((cout, h * w))
        .expect("reshape")
        .t()
        .as_standard_layout()
        .into_owned();
    grads[0] += &cols.t().dot(&dy2).into_dyn();
    grads[1] += &dy2.sum_axis(Axis(0)).into_dyn();
    let dcols = dy2.dot(&as2(&c.weight).t());
    let mut dx = Array3::<T>::zeros((cin, h, w));
    for ch in 0..cin {
        for kh in 0..3 {
            for kw in 0..3 {
                let col = ch * 9 + kh * 3 + kw;
                for i in 0..h {
                    let si = i as isize + kh as isize - 1;
                    if si < 0 || si >= h as isize {
                        continue;
                    }
                    for j in 0..w {
                        let sj = j as isize + kw as isize - 1;
                        if sj >= 0 && sj < w as isize {
                            dx[(ch, si as usize, sj as usize)] += dcols[(i * w + j, col)];
                        }
                    }
                }
            }
        }
    }
    dx.into_dyn()
}

fn maxpool_forward<T: Scalar>(x: ArrayD<T>) -> Result<(ArrayD<T>, Trace<T>)> {
    let shape = x.shape().to_vec();
    let x = x
        .into_dimensionality::<Ix3>()
        .map_err(|_| shape_err("maxpool2d", &shape, "[channels, frames, freq]"))?;
    let (c, h, w) = x.dim();
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let mut y = Array3::<T>::zeros((c, oh, ow));
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for i in 0..oh {
            for j in 0..ow {
                let mut best = (2 * i, 2 * j);
                for di in 0..2 {
                    for dj in 0..2 {
                        let (si, sj) = (2 * i + di, 2 * j + dj);
                        if si < h && sj < w && x[(ch, si, sj)] > x[(ch, best.0, best.1)] {
                            best = (si, sj);
                        }
                    }
                }
                y[(ch, i, j)] = x[(ch, best.0, best.1)];
                argmax.push((ch * h + best.0) * w + best.1);
            }
        }
    }
    Ok((y.into_dyn(), Trace::MaxPool { argmax, shape: (c, h, w) }))
}

fn maxpool_backward<T: Scalar>(argmax: &[usize], (c, h, w): (usize, usize, usize), dy: ArrayD<T>) -> ArrayD<T> {
    let mut dx = vec![T::zero(); c * h * w];
    for (&src, &g) in argmax.iter().zip(dy.iter()) {
        dx[src] += g;
    }
    ArrayD::from_shape_vec(IxDyn(&[c, h, w]), dx).expect("shape")
}

fn time_mean_forward<T: Scalar>(x: ArrayD<T>) -> Result<(ArrayD<T>, Trace<T>)> {
    let shape = x.shape().to_vec();
    let y = match shape.len() {
        2 if shape[0] > 0 => x.mean_axis(Axis(0)).expect("non-empty"),
        3 if shape[1] > 0 => {
            let m = x.mean_axis(Axis(1)).expect("non-empty");
            let n = m.len();
            m.into_shape_with_order(IxDyn(&[n])).expect("flatten")
        }
        _ => return Err(shape_err("time_mean_pool", &shape, "[frames, dims] or [channels, frames, freq]")),
    };
    Ok((y, Trace::TimeMeanPool { shape }))
}

fn time_mean_backward<T: Scalar>(shape: &[usize], dy: ArrayD<T>) -> ArrayD<T> {
    match shape.len() {
        2 => {
            let scale = T::one() / T::from_usize_lossy(shape[0]);
            let g: Array1<T> = dy.into_dimensionality::<Ix1>().expect("rank 1") * scale;
            g.broadcast((shape[0], shape[1])).expect("broadcast").to_owned().into_dyn()
        }
        _ => {
            let (c, h, w) = (shape[0], shape[1], shape[2]);
            let scale = T::one() / T::from_usize_lossy(h);
            let g = dy.into_shape_with_order((c, 1, w)).expect("reshape") * scale;
            g.broadcast((c, h, w)).expect("broadcast").to_owned().into_dyn()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxpool_routes_to_argmax() {
        let x = ArrayD::from_shape_vec(IxDyn(&[1, 2, 2]), vec![0.1f64, 0.9, -0.3, 0.5]).unwrap();
        let (y, tr) = Layer::MaxPool2d.forward(x).unwrap();
        assert_eq!(y.as_slice().unwrap(), &[0.9]);
        let dx = Layer::<f64>::MaxPool2d.backward(&tr, ArrayD::from_elem(IxDyn(&[1, 1, 1]), 2.0), &mut []);
        assert_eq!(dx.as_slice().unwrap(), &[0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn maxpool_ceil_mode_keeps_odd_edges() {
        let x = ArrayD::from_shape_fn(IxDyn(&[2, 5, 3]), |d| (d[0] * 100 + d[1] * 10 + d[2]) as f64);
        let (y, _) = Layer::MaxPool2d.forward(x).unwrap();
        assert_eq!(y.shape(), &[2, 3, 2]);
        assert_eq!(y[[0, 2, 1]], 42.0);
        let one = ArrayD::from_elem(IxDyn(&[3, 1, 1]), 1.0f64);
        assert_eq!(Layer::MaxPool2d.forward(one).unwrap().0.shape(), &[3, 1, 1]);
    }

    #[test]
    fn splice_pads_edges_with_zeros() {
        let x = ArrayD::from_shape_vec(IxDyn(&[3, 1]), vec![1.0f64, 2.0, 3.0]).unwrap();
        let (y, _) = Layer::Splice { context: 3 }.forward(x).unwrap();
        assert_eq!(y.as_slice().unwrap(), &[0.0, 1.0, 2.0, 1.0, 2.0, 3.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn conv1d_rejects_short_input() {
        let c = Layer::Conv1d(Conv1d::<f64>::zeros(2, 3, 3, 2));
        assert!(c.forward(ArrayD::zeros(IxDyn(&[4, 2]))).is_err());
        assert_eq!(c.forward(ArrayD::zeros(IxDyn(&[5, 2]))).unwrap().0.shape(), &[1, 3]);
    }

    #[test]
    fn dense_shape_errors() {
        let d = Layer::Dense(Dense::<f64>::zeros(3, 2));
        assert!(d.forward(ArrayD::zeros(IxDyn(&[4, 5]))).is_err());
        assert_eq!(d.forward(ArrayD::zeros(IxDyn(&[3]))).unwrap().0.shape(), &[2]);
        assert_eq!(d.forward(ArrayD::zeros(IxDyn(&[7, 3]))).unwrap().0.shape(), &[7, 2]);
    }
}
