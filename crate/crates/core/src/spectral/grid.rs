use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::transform::Fft2;
use crate::error::{Result, TcmError};

/// Periodic box `[0, L)²` sampled on an `n × n` grid.
///
/// Modes are addressed by a flat index `iy * n + ix` in FFT ordering. The
/// dealias mask keeps the integer frequencies `j` with `3|j| < n` on each axis,
/// which makes quadratic products computed on the grid alias-free on the kept
/// modes.
#[derive(Debug)]
pub struct SpectralGrid {
    n: usize,
    box_length: f64,
    freq: Vec<i64>,
    k_axis: Vec<f64>,
    keep_axis: Vec<bool>,
    k_abs: Vec<f64>,
    diff_k: Vec<(f64, f64)>,
    fft: Fft2,
}

impl SpectralGrid {
    pub fn new(n: usize, box_length: f64) -> Result<Arc<Self>> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(TcmError::param("n", format!("must be an even integer >= 4, got {n}")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(TcmError::param(
                "box_length",
                format!("must be positive and finite, got {box_length}"),
            ));
        }
        let dk = 2.0 * PI / box_length;
        let freq: Vec<i64> = (0..n)
            .map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let k_axis: Vec<f64> = freq.iter().map(|&j| j as f64 * dk).collect();
        let keep_axis: Vec<bool> = freq.iter().map(|&j| 3 * j.unsigned_abs() < n as u64).collect();
        let mut k_abs = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                k_abs[iy * n + ix] = k_axis[ix].hypot(k_axis[iy]);
            }
        }
        let nyquist = -(n as i64 / 2);
        let diff_axis: Vec<f64> = freq
            .iter()
            .zip(&k_axis)
            .map(|(&j, &k)| if j == nyquist { 0.0 } else { k })
            .collect();
        let diff_k = (0..n * n).map(|i| (diff_axis[i % n], diff_axis[i / n])).collect();
        Ok(Arc::new(Self {
            n,
            box_length,
            freq,
            k_axis,
            keep_axis,
            k_abs,
            diff_k,
            fft: Fft2::new(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of modes (and of grid points).
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn area(&self) -> f64 {
        self.box_length * self.box_length
    }

    /// Lattice spacing `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Largest per-axis wavenumber on the grid, `(n/2)·2π/L`.
    pub fn k_max(&self) -> f64 {
        (self.n / 2) as f64 * self.dk()
    }

    /// Largest per-axis wavenumber kept by the dealias mask.
    pub fn k_max_dealiased(&self) -> f64 {
        self.freq
            .iter()
            .zip(&self.keep_axis)
            .filter(|(_, &k)| k)
            .map(|(&j, _)| j.abs())
            .max()
            .unwrap_or(0) as f64
            * self.dk()
    }

    /// Integer frequencies `(jx, jy)` of a flat mode index.
    pub fn frequencies(&self, idx: usize) -> (i64, i64) {
        (self.freq[idx % self.n], self.freq[idx / self.n])
    }

    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        (self.k_axis[idx % self.n], self.k_axis[idx / self.n])
    }

    pub fn k_abs(&self, idx: usize) -> f64 {
        self.k_abs[idx]
    }

    pub fn k_abs_all(&self) -> &[f64] {
        &self.k_abs
    }

    /// Per-axis wavenumber used for spectral differentiation; zero on the
    /// unpaired Nyquist frequency so derivatives of real fields stay real.
    pub(crate) fn diff_wavenumber(&self, axis_index: usize) -> f64 {
        if self.freq[axis_index] == -(self.n as i64 / 2) {
            0.0
        } else {
            self.k_axis[axis_index]
        }
    }

    pub fn in_mask(&self, idx: usize) -> bool {
        self.keep_axis[idx % self.n] && self.keep_axis[idx / self.n]
    }

    /// Flat index of the mode `-k`.
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n;
        let (ix, iy) = (idx % n, idx / n);
        ((n - iy) % n) * n + (n - ix) % n
    }

    /// Physical coordinate of grid point `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.box_length / self.n as f64
    }

    /// Quadrature weight of one grid point, `L²/n²`.
    pub fn cell_area(&self) -> f64 {
        self.area() / self.len() as f64
    }

    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        self.n == other.n && self.box_length == other.box_length
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        self.fft.forward_real(values)
    }

    pub fn backward(&self, coeffs: &[Complex64]) -> Vec<f64> {
        self.fft.inverse_real(coeffs)
    }

    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        self.fft.forward_real_pair(a, b)
    }

    pub fn backward_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        self.fft.inverse_real_pair(a, b)
    }

    /// Grid values of two fields given per mode, in an unspecified point
    /// order shared with [`Self::forward_pair_pointwise`].
    pub(crate) fn backward_pair_pointwise(
        &self,
        coeff: impl Fn(usize) -> (Complex64, Complex64),
    ) -> (Vec<f64>, Vec<f64>) {
        self.fft.inverse_real_pair_transposed(coeff)
    }

    /// Inverse of [`Self::backward_pair_pointwise`] followed by the dealias mask.
    pub(crate) fn forward_pair_pointwise(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        self.fft.forward_real_pair_transposed(a, b, &self.keep_axis)
    }

    /// Differentiation wavenumbers `(kx, ky)` of every flat mode index.
    pub(crate) fn diff_wavevectors(&self) -> &[(f64, f64)] {
        &self.diff_k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mode_appears_once() {
        let g = SpectralGrid::new(16, 2.0 * PI).unwrap();
        let zeros = (0..g.len()).filter(|&i| g.wavevector(i) == (0.0, 0.0)).count();
        assert_eq!(zeros, 1);
    }

    #[test]
    fn mask_drops_upper_third() {
        for n in [16, 48, 64, 128] {
            let g = SpectralGrid::new(n, 2.0 * PI).unwrap();
            let cut = (2.0 / 3.0) * g.k_max();
            for i in 0..g.len() {
                let (kx, ky) = g.wavevector(i);
                if kx.abs() > cut || ky.abs() > cut {
                    assert!(!g.in_mask(i));
                }
            }
            // alias-free for quadratic products
            let jmax = (g.k_max_dealiased() / g.dk()).round() as usize;
            assert!(3 * jmax < n);
        }
    }

    #[test]
    fn mirror_is_involution() {
        let g = SpectralGrid::new(8, 1.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.mirror(g.mirror(i)), i);
        }
    }

    #[test]
    fn rejects_odd_sizes() {
        assert!(SpectralGrid::new(15, 1.0).is_err());
        assert!(SpectralGrid::new(16, 0.0).is_err());
    }
}
