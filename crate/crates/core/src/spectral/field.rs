use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::grid::SpectralGrid;
use crate::error::{Result, TcmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Selects the homogeneous (`Ḣ^s`) or full (`H^s`) Sobolev norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Homogeneity {
    Homogeneous,
    Nonhomogeneous,
}

/// `|k|^s` with the convention `0^0 = 1`.
#[inline]
pub(crate) fn symbol(k_abs: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if k_abs == 0.0 {
        0.0
    } else {
        k_abs.powf(s)
    }
}

/// A real scalar field stored as Fourier coefficients.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_coeffs(grid: &Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(TcmError::GridMismatch);
        }
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// Transforms grid values (row-major, `y` slow) into coefficients.
    pub fn from_physical(grid: &Arc<SpectralGrid>, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(TcmError::GridMismatch);
        }
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs: grid.forward(values),
        })
    }

    /// Samples `f(x, y)` on the grid and transforms it.
    pub fn from_fn(grid: &Arc<SpectralGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..n {
            let y = grid.coordinate(iy);
            for ix in 0..n {
                values.push(f(grid.coordinate(ix), y));
            }
        }
        Self {
            grid: Arc::clone(grid),
            coeffs: grid.forward(&values),
        }
    }

    pub fn constant(grid: &Arc<SpectralGrid>, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn to_physical(&self) -> Vec<f64> {
        self.grid.backward(&self.coeffs)
    }

    pub(crate) fn ensure_same_grid(&self, other: &SpectralField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(TcmError::GridMismatch)
        }
    }

    /// Multiplies every coefficient by a real per-mode symbol.
    pub fn map_symbol(&self, mut m: impl FnMut(usize) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * m(i))
            .collect();
        Self {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    /// Fractional Laplacian power `Λ^s`, the Fourier multiplier `|k|^s`.
    pub fn lambda_pow(&self, s: f64) -> Result<Self> {
        if s < 0.0 || s.is_nan() {
            return Err(TcmError::NegativeOrder(s));
        }
        if s == 0.0 {
            return Ok(self.clone());
        }
        let k = self.grid.k_abs_all();
        Ok(self.map_symbol(|i| symbol(k[i], s)))
    }

    /// Spectral partial derivative along one axis.
    pub fn derivative(&self, axis: Axis) -> Self {
        let n = self.grid.n();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let k = match axis {
                    Axis::X => self.grid.diff_wavenumber(i % n),
                    Axis::Y => self.grid.diff_wavenumber(i / n),
                };
                Complex64::new(-c.im * k, c.re * k)
            })
            .collect();
        Self {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    pub fn gradient(&self) -> VectorField {
        VectorField::new(self.derivative(Axis::X), self.derivative(Axis::Y))
            .expect("derivatives share the grid")
    }

    pub fn dealias_in_place(&mut self) {
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if !self.grid.in_mask(i) {
                *c = Complex64::default();
            }
        }
    }

    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    /// Weighted Parseval sum `L² Σ w(k) |c_k|²`.
    pub(crate) fn weighted_energy(&self, s: f64) -> f64 {
        let k = self.grid.k_abs_all();
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(k)
            .map(|(c, &kk)| {
                let w = symbol(kk, s);
                w * w * c.norm_sqr()
            })
            .sum();
        sum * self.grid.area()
    }

    /// `‖Λ^s f‖_{L²}` over the box; `s = 0` gives the full `L²` norm.
    pub fn lambda_norm(&self, s: f64) -> Result<f64> {
        if s < 0.0 || s.is_nan() {
            return Err(TcmError::NegativeOrder(s));
        }
        Ok(self.weighted_energy(s).sqrt())
    }

    pub fn l2_norm(&self) -> f64 {
        self.weighted_energy(0.0).sqrt()
    }

    /// Sobolev norm: `‖Λ^s f‖` (homogeneous) or `(‖f‖² + ‖Λ^s f‖²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64, homogeneity: Homogeneity) -> Result<f64> {
        let hom = self.lambda_norm(s)?;
        Ok(match homogeneity {
            Homogeneity::Homogeneous => hom,
            Homogeneity::Nonhomogeneous => (self.weighted_energy(0.0) + hom * hom).sqrt(),
        })
    }

    /// `∫ f g` over the box, exact via Parseval.
    pub fn inner_product(&self, other: &SpectralField) -> Result<f64> {
        self.ensure_same_grid(other)?;
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        Ok(sum * self.grid.area())
    }

    /// Max over grid points of `|f|`.
    pub fn linf_norm(&self) -> f64 {
        self.to_physical().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|c_k − conj(c_{−k})|`; zero for a real field.
    pub fn conjugate_asymmetry(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.mirror(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map_symbol(|_| factor)
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o * a;
        }
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Zero-pads or truncates the spectrum onto another grid of the same box.
    pub fn resample(&self, target: &Arc<SpectralGrid>) -> Result<Self> {
        if target.box_length() != self.grid.box_length() {
            return Err(TcmError::GridMismatch);
        }
        let mut out = Self::zeros(target);
        let (ns, nt) = (self.grid.n() as i64, target.n() as i64);
        let lim = ns.min(nt) / 2;
        for (i, &c) in self.coeffs.iter().enumerate() {
            let (jx, jy) = self.grid.frequencies(i);
            // drop the unpaired Nyquist line of the smaller grid
            if jx.abs() >= lim || jy.abs() >= lim {
                continue;
            }
            let tx = jx.rem_euclid(nt) as usize;
            let ty = jy.rem_euclid(nt) as usize;
            out.coeffs[ty * target.n() + tx] = c;
        }
        Ok(out)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// A pair of scalar fields on the same grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub x: SpectralField,
    pub y: SpectralField,
}

impl VectorField {
    pub fn new(x: SpectralField, y: SpectralField) -> Result<Self> {
        x.ensure_same_grid(&y)?;
        Ok(Self { x, y })
    }

    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            x: SpectralField::zeros(grid),
            y: SpectralField::zeros(grid),
        }
    }

    pub fn from_fns(
        grid: &Arc<SpectralGrid>,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        Self {
            x: SpectralField::from_fn(grid, fx),
            y: SpectralField::from_fn(grid, fy),
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.x.grid()
    }

    pub fn components(&self) -> [&SpectralField; 2] {
        [&self.x, &self.y]
    }

    pub fn divergence(&self) -> SpectralField {
        &self.x.derivative(Axis::X) + &self.y.derivative(Axis::Y)
    }

    /// Leray projection onto divergence-free fields: `ŵ − k (k·ŵ)/|k|²`.
    pub fn leray_project(&self) -> Self {
        let mut out = self.clone();
        out.leray_project_in_place();
        out
    }

    pub fn leray_project_in_place(&mut self) {
        let grid = Arc::clone(self.x.grid());
        let (cx, cy) = (&mut self.x.coeffs, &mut self.y.coeffs);
        for i in 0..grid.len() {
            let (kx, ky) = grid.wavevector(i);
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                continue;
            }
            let dot = cx[i] * kx + cy[i] * ky;
            cx[i] -= dot * (kx / k2);
            cy[i] -= dot * (ky / k2);
        }
    }

    pub fn dealias_in_place(&mut self) {
        self.x.dealias_in_place();
        self.y.dealias_in_place();
    }

    pub fn dealias(&self) -> Self {
        Self {
            x: self.x.dealias(),
            y: self.y.dealias(),
        }
    }

    pub fn lambda_pow(&self, s: f64) -> Result<Self> {
        Ok(Self {
            x: self.x.lambda_pow(s)?,
            y: self.y.lambda_pow(s)?,
        })
    }

    pub fn lambda_norm(&self, s: f64) -> Result<f64> {
        Ok((self.x.weighted_energy(s) + self.y.weighted_energy(s)).sqrt())
    }

    pub(crate) fn weighted_energy(&self, s: f64) -> f64 {
        self.x.weighted_energy(s) + self.y.weighted_energy(s)
    }

    pub fn l2_norm(&self) -> f64 {
        self.weighted_energy(0.0).sqrt()
    }

    pub fn sobolev_norm(&self, s: f64, homogeneity: Homogeneity) -> Result<f64> {
        let hom2 = self.lambda_norm(s)?.powi(2);
        Ok(match homogeneity {
            Homogeneity::Homogeneous => hom2.sqrt(),
            Homogeneity::Nonhomogeneous => (self.weighted_energy(0.0) + hom2).sqrt(),
        })
    }

    pub fn inner_product(&self, other: &VectorField) -> Result<f64> {
        Ok(self.x.inner_product(&other.x)? + self.y.inner_product(&other.y)?)
    }

    /// Max over grid points of the Euclidean length.
    pub fn linf_norm(&self) -> f64 {
        let (px, py) = self.grid().backward_pair(self.x.coeffs(), self.y.coeffs());
        px.iter()
            .zip(&py)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            x: self.x.scaled(factor),
            y: self.y.scaled(factor),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        self.x.axpy(a, &other.x);
        self.y.axpy(a, &other.y);
    }
}
