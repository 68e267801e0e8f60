//! Pseudo-spectral simulation and energy diagnostics for the 2D tropical
//! climate model with temperature-dependent viscosity,
//!
//! ```text
//! u_t + (u·∇)u + ∇p − div(μ(θ)∇u) + αu = −div(v⊗v)
//! v_t + (u·∇)v + (v·∇)u + βv = ∇θ
//! θ_t + u·∇θ = div v,        div u = 0
//! ```
//!
//! posed on a periodic box. The crate is split into the Fourier toolkit
//! ([`spectral`]), the model right-hand side and energy budget ([`model`]),
//! time stepping ([`integrator`]), the stability/decay functionals
//! ([`diagnostics`]) and a randomized checker for the functional inequalities
//! the stability analysis relies on ([`inequality_lab`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod inequality_lab;
pub mod integrator;
pub mod model;
pub mod spectral;

pub use error::{Result, TcmError};
