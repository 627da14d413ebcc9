//! FFT helpers: linear convolution of real sequences and the circulant
//! embedding used for fast symmetric Toeplitz products.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// First `len` terms of the linear convolution `a * b`.
pub fn convolve(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    if a.is_empty() || b.is_empty() || len == 0 {
        return vec![0.0; len];
    }
    let size = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fa.resize(size, Complex64::default());
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fb.resize(size, Complex64::default());
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    (0..len)
        .map(|k| if k < size { fa[k].re * scale } else { 0.0 })
        .collect()
}

/// Symmetric Toeplitz matrix of order `n` embedded in a circulant of order `2n`,
/// with the circulant spectrum cached so each product costs two FFTs.
#[derive(Clone)]
pub struct CirculantEmbedding {
    n: usize,
    spectrum: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CirculantEmbedding").field("n", &self.n).finish()
    }
}

impl CirculantEmbedding {
    /// `column` is the first column (equal to the first row) of the Toeplitz matrix.
    pub fn new(column: &[f64]) -> Self {
        let n = column.len();
        let size = 2 * n.max(1);
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);

        let mut spectrum = vec![Complex64::default(); size];
        for (k, &c) in column.iter().enumerate() {
            spectrum[k] = Complex64::new(c, 0.0);
            if k > 0 {
                spectrum[size - k] = Complex64::new(c, 0.0);
            }
        }
        fwd.process(&mut spectrum);
        let scale = 1.0 / size as f64;
        for s in &mut spectrum {
            *s *= scale;
        }
        Self { n, spectrum, fwd, inv }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// `out = T x`. Both slices must have length `order()`.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        let mut buf = vec![Complex64::default(); self.spectrum.len()];
        buf[..self.n].copy_from_slice(x);
        self.fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inv.process(&mut buf);
        out.copy_from_slice(&buf[..self.n]);
    }

    /// Real-vector variant of [`apply`](Self::apply).
    pub fn apply_real(&self, x: &[f64], out: &mut [f64]) {
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut oc = vec![Complex64::default(); self.n];
        self.apply(&xc, &mut oc);
        for (o, v) in out.iter_mut().zip(&oc) {
            *o = v.re;
        }
    }
}
