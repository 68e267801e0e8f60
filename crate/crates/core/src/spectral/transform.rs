//! Square 2D FFT built from batched 1D transforms.
//!
//! Coefficients are stored row-major (`iy * n + ix`) and normalized so that
//! `f(x) = Σ_k c_k exp(i k·x)`, i.e. the forward transform divides by `n²`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Row transforms, transpose into `out`, row transforms again. The result
    /// is left in transposed order.
    fn half_run(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64], out: &mut [Complex64]) {
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // zero rows stay zero
        for row in buf.chunks_exact_mut(self.n) {
            if row.iter().any(|c| *c != Complex64::default()) {
                plan.process_with_scratch(row, &mut scratch);
            }
        }
        transpose::transpose(buf, out, self.n, self.n);
        plan.process_with_scratch(out, &mut scratch);
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let mut tmp = buf.to_vec();
        self.half_run(plan, buf, &mut tmp);
        transpose::transpose(&tmp, buf, self.n, self.n);
    }

    /// In-place forward transform including the `1/n²` normalization.
    pub fn forward_inplace(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        self.run(&self.forward, buf);
        let scale = 1.0 / (self.n * self.n) as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// In-place unnormalized inverse transform (coefficients to grid values).
    pub fn inverse_inplace(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        self.run(&self.inverse, buf);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_inplace(&mut buf);
        buf
    }

    pub fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse_inplace(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Transforms two real grids with one complex FFT.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut buf = pack_real(a, b);
        self.forward_inplace(&mut buf);
        self.split_pair(&buf)
    }

    /// Inverse-transforms two conjugate-symmetric coefficient arrays with one complex FFT.
    pub fn inverse_real_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| x + Complex64::new(-y.im, y.re))
            .collect();
        self.inverse_inplace(&mut buf);
        buf.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    /// Like [`Self::inverse_real_pair`] with the coefficients given per mode by
    /// `coeff`, and the grid values returned in transposed point order. Only
    /// meant for pointwise work followed by [`Self::forward_real_pair_transposed`].
    pub fn inverse_real_pair_transposed(
        &self,
        coeff: impl Fn(usize) -> (Complex64, Complex64),
    ) -> (Vec<f64>, Vec<f64>) {
        let len = self.n * self.n;
        let mut buf: Vec<Complex64> = (0..len)
            .map(|i| {
                let (x, y) = coeff(i);
                x + Complex64::new(-y.im, y.re)
            })
            .collect();
        let mut out = vec![Complex64::default(); len];
        self.half_run(&self.inverse, &mut buf, &mut out);
        out.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    /// Forward transform of two real grids stored in transposed point order.
    /// Only the frequency rows flagged in `keep_rows` are computed; the others
    /// come back as zero.
    pub fn forward_real_pair_transposed(
        &self,
        a: &[f64],
        b: &[f64],
        keep_rows: &[bool],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let mut buf = pack_real(a, b);
        let mut out = vec![Complex64::default(); buf.len()];
        let plan = &self.forward;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(&mut buf, &mut scratch);
        transpose::transpose(&buf, &mut out, n, n);
        let scale = 1.0 / (n * n) as f64;
        for (row, &keep) in out.chunks_exact_mut(n).zip(keep_rows) {
            if keep {
                plan.process_with_scratch(row, &mut scratch);
                row.iter_mut().for_each(|c| *c *= scale);
            } else {
                row.fill(Complex64::default());
            }
        }
        self.split_pair(&out)
    }

    fn split_pair(&self, buf: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let mirror = |i: usize| if i == 0 { 0 } else { n - i };
        let mut ca = Vec::with_capacity(n * n);
        let mut cb = Vec::with_capacity(n * n);
        for iy in 0..n {
            let row = &buf[iy * n..(iy + 1) * n];
            let mrow = &buf[mirror(iy) * n..(mirror(iy) + 1) * n];
            for (ix, &z) in row.iter().enumerate() {
                let zm = mrow[mirror(ix)].conj();
                ca.push((z + zm) * 0.5);
                // (z - zm) / 2i
                let d = (z - zm) * 0.5;
                cb.push(Complex64::new(d.im, -d.re));
            }
        }
        (ca, cb)
    }
}

fn pack_real(a: &[f64], b: &[f64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect()
}
