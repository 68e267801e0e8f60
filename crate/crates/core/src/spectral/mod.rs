//! Fourier-space toolkit on the periodic box: transforms, `Λ^s`, derivatives,
//! Leray projection, two-thirds dealiasing and Sobolev norms.

mod field;
mod grid;
mod transform;

pub use field::{Axis, Homogeneity, SpectralField, VectorField};
pub(crate) use field::symbol;
pub use grid::SpectralGrid;
pub use transform::Fft2;
