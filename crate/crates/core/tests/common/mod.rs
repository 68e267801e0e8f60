#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tcm_core::inequality_lab::random_field;
use tcm_core::model::TcmState;
use tcm_core::spectral::{SpectralField, SpectralGrid, VectorField};

pub fn grid(n: usize) -> Arc<SpectralGrid> {
    SpectralGrid::new(n, 2.0 * PI).unwrap()
}

pub fn field(g: &Arc<SpectralGrid>, seed: u64, r: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field(g, r, &mut rng).expect("non-degenerate draw")
}

/// Random divergence-free `u`, random `v`, `θ`, each of mean-square `amp²`.
pub fn state(g: &Arc<SpectralGrid>, seed: u64, amp: f64) -> TcmState {
    let f = |k: u64| field(g, seed.wrapping_mul(31).wrapping_add(k), 2.0).scaled(amp);
    let mut u = VectorField::new(f(1), f(2)).unwrap();
    u.leray_project_in_place();
    let v = VectorField::new(f(3), f(4)).unwrap();
    let mut s = TcmState::new(u, v, f(5), 0.0).unwrap();
    s.sanitize();
    s
}
