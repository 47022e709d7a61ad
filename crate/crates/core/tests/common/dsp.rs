//! Brute-force references for the feature pipeline: direct DFT, direct
//! triangular filtering on the HTK mel scale and a direct DCT-II.

use std::f64::consts::PI;

use ndarray::Array2;

pub struct Framing {
    pub n_fft: usize,
    pub win: usize,
    pub hop: usize,
    pub fs: f64,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub floor: f64,
}

impl Default for Framing {
    fn default() -> Self {
        Framing {
            n_fft: 400,
            win: 400,
            hop: 160,
            fs: 16_000.0,
            n_mels: 64,
            n_mfcc: 20,
            fmin: 0.0,
            fmax: 8000.0,
            floor: 1e-10,
        }
    }
}

/// `|X_k|^2` of each periodic-Hann-windowed frame, by the DFT sum.
pub fn power_spectrum(x: &[f64], f: &Framing) -> Array2<f64> {
    let frames = 1 + (x.len() - f.win) / f.hop;
    let bins = f.n_fft / 2 + 1;
    let cos: Vec<f64> = (0..f.n_fft).map(|j| (2.0 * PI * j as f64 / f.n_fft as f64).cos()).collect();
    let sin: Vec<f64> = (0..f.n_fft).map(|j| (2.0 * PI * j as f64 / f.n_fft as f64).sin()).collect();
    let mut out = Array2::zeros((frames, bins));
    let mut frame = vec![0.0; f.win];
    for t in 0..frames {
        for (n, v) in frame.iter_mut().enumerate() {
            let w = 0.5 * (1.0 - (2.0 * PI * n as f64 / f.win as f64).cos());
            *v = w * x[t * f.hop + n];
        }
        for k in 0..bins {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in frame.iter().enumerate() {
                let j = (k * n) % f.n_fft;
                re += v * cos[j];
                im -= v * sin[j];
            }
            out[[t, k]] = re * re + im * im;
        }
    }
    out
}

fn mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Weight of filter `m` at frequency `freq`.
pub fn triangle(m: usize, freq: f64, f: &Framing) -> f64 {
    let step = (mel(f.fmax) - mel(f.fmin)) / (f.n_mels + 1) as f64;
    let corner = |i: usize| hz(mel(f.fmin) + step * i as f64);
    let (lo, mid, hi) = (corner(m), corner(m + 1), corner(m + 2));
    if freq <= lo || freq >= hi {
        0.0
    } else if freq <= mid {
        (freq - lo) / (mid - lo)
    } else {
        (hi - freq) / (hi - mid)
    }
}

pub fn log_mel(x: &[f64], f: &Framing) -> Array2<f64> {
    let p = power_spectrum(x, f);
    let mut out = Array2::zeros((p.nrows(), f.n_mels));
    for t in 0..p.nrows() {
        for m in 0..f.n_mels {
            let mut e = 0.0;
            for k in 0..p.ncols() {
                e += p[[t, k]] * triangle(m, k as f64 * f.fs / f.n_fft as f64, f);
            }
            out[[t, m]] = e.max(f.floor).ln();
        }
    }
    out
}

/// Orthonormal DCT-II of each row, first `keep` coefficients.
pub fn dct2(rows: &Array2<f64>, keep: usize) -> Array2<f64> {
    let n = rows.ncols() as f64;
    let mut out = Array2::zeros((rows.nrows(), keep));
    for t in 0..rows.nrows() {
        for k in 0..keep {
            let s: f64 = (0..rows.ncols())
                .map(|i| rows[[t, i]] * (PI / n * (i as f64 + 0.5) * k as f64).cos())
                .sum();
            out[[t, k]] = s * if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        }
    }
    out
}

/// Largest `|a - b|` over the largest `|b|`.
pub fn matrix_rel(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    diff / scale.max(f64::MIN_POSITIVE)
}

/// Largest elementwise `|a - b| / max(|a|, |b|, 1)`.
pub fn elementwise_rel(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}
