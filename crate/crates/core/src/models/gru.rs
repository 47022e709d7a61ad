//! Bidirectional GRU with backpropagation through time.
//!
//! Gate layout follows the common `r, z, n` convention:
//! `r = σ(W_ir x + b_ir + W_hr h + b_hr)`, `z` likewise,
//! `n = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))`, `h' = (1 - z) ⊙ n + z ⊙ h`.

use ndarray::{concatenate, s, Array1, Array2, ArrayD, ArrayView2, Axis, Ix1, Ix2, IxDyn};

use super::layers::as2;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GruDirection<T> {
    /// `[din, 3g]`
    pub w_ih: ArrayD<T>,
    /// `[g, 3g]`
    pub w_hh: ArrayD<T>,
    pub b_ih: ArrayD<T>,
    pub b_hh: ArrayD<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiGru<T> {
    pub fwd: GruDirection<T>,
    pub bwd: GruDirection<T>,
    /// Emit `[frames, 2g]` when true, otherwise the concatenated final
    /// states `[2g]` (forward at the last frame, backward at the first).
    pub sequence: bool,
}

#[derive(Debug, Clone)]
pub struct DirTrace<T> {
    input: Array2<T>,
    h_prev: Array2<T>,
    r: Array2<T>,
    z: Array2<T>,
    n: Array2<T>,
    hh_n: Array2<T>,
}

#[derive(Debug, Clone)]
pub struct GruTrace<T> {
    fwd: DirTrace<T>,
    bwd: DirTrace<T>,
}

fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

impl<T: Scalar> GruDirection<T> {
    pub fn zeros(din: usize, hidden: usize) -> Self {
        GruDirection {
            w_ih: ArrayD::zeros(IxDyn(&[din, 3 * hidden])),
            w_hh: ArrayD::zeros(IxDyn(&[hidden, 3 * hidden])),
            b_ih: ArrayD::zeros(IxDyn(&[3 * hidden])),
            b_hh: ArrayD::zeros(IxDyn(&[3 * hidden])),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.shape()[0]
    }

    fn run(&self, x: ArrayView2<'_, T>) -> (Array2<T>, DirTrace<T>) {
        let g = self.hidden();
        let steps = x.nrows();
        let b_ih = self.b_ih.view().into_dimensionality::<Ix1>().expect("bias");
        let b_hh = self.b_hh.view().into_dimensionality::<Ix1>().expect("bias");
        let w_hh = as2(&self.w_hh);
        let xi = x.dot(&as2(&self.w_ih)) + &b_ih;
        let mut out = Array2::zeros((steps, g));
        let mut tr = DirTrace {
            input: x.to_owned(),
            h_prev: Array2::zeros((steps, g)),
            r: Array2::zeros((steps, g)),
            z: Array2::zeros((steps, g)),
            n: Array2::zeros((steps, g)),
            hh_n: Array2::zeros((steps, g)),
        };
        let mut h = Array1::<T>::zeros(g);
        for t in 0..steps {
            let hh = h.dot(&w_hh) + &b_hh;
            let xt = xi.row(t);
            for k in 0..g {
                let r = sigmoid(xt[k] + hh[k]);
                let z = sigmoid(xt[g + k] + hh[g + k]);
                let n = (xt[2 * g + k] + r * hh[2 * g + k]).tanh();
                tr.h_prev[(t, k)] = h[k];
                tr.r[(t, k)] = r;
                tr.z[(t, k)] = z;
                tr.n[(t, k)] = n;
                tr.hh_n[(t, k)] = hh[2 * g + k];
                out[(t, k)] = (T::one() - z) * n + z * h[k];
            }
            h.assign(&out.row(t));
        }
        (out, tr)
    }

    /// `dout` is the gradient w.r.t. every step's output, in processing order.
    fn backprop(&self, tr: &DirTrace<T>, dout: &Array2<T>, grads: &mut [ArrayD<T>]) -> Array2<T> {
        let g = self.hidden();
        let steps = dout.nrows();
        let w_hh = as2(&self.w_hh);
        let mut dxi = Array2::<T>::zeros((steps, 3 * g));
        let mut dhh_all = Array2::<T>::zeros((steps, 3 * g));
        let mut dh_next = Array1::<T>::zeros(g);
        for t in (0..steps).rev() {
            let mut dhh = Array1::<T>::zeros(3 * g);
            let mut dh_prev = Array1::<T>::zeros(g);
            for k in 0..g {
                let dh = dout[(t, k)] + dh_next[k];
                let (r, z, n) = (tr.r[(t, k)], tr.z[(t, k)], tr.n[(t, k)]);
                let dn = dh * (T::one() - z);
                let dz = dh * (tr.h_prev[(t, k)] - n);
                dh_prev[k] = dh * z;
                let dn_pre = dn * (T::one() - n * n);
                let dr_pre = dn_pre * tr.hh_n[(t, k)] * r * (T::one() - r);
                let dz_pre = dz * z * (T::one() - z);
                dxi[(t, k)] = dr_pre;
                dxi[(t, g + k)] = dz_pre;
                dxi[(t, 2 * g + k)] = dn_pre;
                dhh[k] = dr_pre;
                dhh[g + k] = dz_pre;
                dhh[2 * g + k] = dn_pre * r;
            }
            dh_prev += &w_hh.dot(&dhh);
            dhh_all.row_mut(t).assign(&dhh);
            dh_next = dh_prev;
        }
        grads[0] += &tr.input.t().dot(&dxi).into_dyn();
        grads[1] += &tr.h_prev.t().dot(&dhh_all).into_dyn();
        grads[2] += &dxi.sum_axis(Axis(0)).into_dyn();
        grads[3] += &dhh_all.sum_axis(Axis(0)).into_dyn();
        dxi.dot(&as2(&self.w_ih).t())
    }
}

impl<T: Scalar> BiGru<T> {
    pub fn zeros(din: usize, hidden: usize, sequence: bool) -> Self {
        BiGru {
            fwd: GruDirection::zeros(din, hidden),
            bwd: GruDirection::zeros(din, hidden),
            sequence,
        }
    }

    pub fn params(&self) -> Vec<(&'static str, &ArrayD<T>)> {
        vec![
            ("fwd.w_ih", &self.fwd.w_ih),
            ("fwd.w_hh", &self.fwd.w_hh),
            ("fwd.b_ih", &self.fwd.b_ih),
            ("fwd.b_hh", &self.fwd.b_hh),
            ("bwd.w_ih", &self.bwd.w_ih),
            ("bwd.w_hh", &self.bwd.w_hh),
            ("bwd.b_ih", &self.bwd.b_ih),
            ("bwd.b_hh", &self.bwd.b_hh),
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut ArrayD<T>> {
        vec![
            &mut self.fwd.w_ih,
            &mut self.fwd.w_hh,
            &mut self.fwd.b_ih,
            &mut self.fwd.b_hh,
            &mut self.bwd.w_ih,
            &mut self.bwd.w_hh,
            &mut self.bwd.b_ih,
            &mut self.bwd.b_hh,
        ]
    }

    pub fn forward(&self, x: Array2<T>) -> Result<(ArrayD<T>, GruTrace<T>)> {
        let din = self.fwd.w_ih.shape()[0];
        if x.ncols() != din || x.nrows() == 0 {
            return Err(Error::Shape(format!(
                "bigru: got input {:?}, expected [frames>0, {din}]",
                x.shape()
            )));
        }
        let (hf, tf) = self.fwd.run(x.view());
        let (hb_rev, tb) = self.bwd.run(x.slice(s![..;-1, ..]));
        let steps = x.nrows();
        let out = if self.sequence {
            let hb = hb_rev.slice(s![..;-1, ..]);
            concatenate(Axis(1), &[hf.view(), hb]).expect("concat").into_dyn()
        } else {
            concatenate(Axis(0), &[hf.row(steps - 1), hb_rev.row(steps - 1)])
                .expect("concat")
                .into_dyn()
        };
        Ok((out, GruTrace { fwd: tf, bwd: tb }))
    }

    pub fn backward(&self, tr: &GruTrace<T>, dy: ArrayD<T>, grads: &mut [ArrayD<T>]) -> ArrayD<T> {
        let g = self.fwd.hidden();
        let steps = tr.fwd.input.nrows();
        let (df, db_rev) = if self.sequence {
            let dy = dy.into_dimensionality::<Ix2>().expect("rank 2");
            let df = dy.slice(s![.., ..g]).to_owned();
            let db_rev = dy.slice(s![..;-1, g..]).to_owned();
            (df, db_rev)
        } else {
            let dy = dy.into_dimensionality::<Ix1>().expect("rank 1");
            let mut df = Array2::zeros((steps, g));
            let mut db_rev = Array2::zeros((steps, g));
            df.row_mut(steps - 1).assign(&dy.slice(s![..g]));
            db_rev.row_mut(steps - 1).assign(&dy.slice(s![g..]));
            (df, db_rev)
        };
        let (gf, gb) = grads.split_at_mut(4);
        let dxf = self.fwd.backprop(&tr.fwd, &df, gf);
        let dxb_rev = self.bwd.backprop(&tr.bwd, &db_rev, gb);
        (dxf + &dxb_rev.slice(s![..;-1, ..])).into_dyn()
    }
}
