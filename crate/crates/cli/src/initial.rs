//! Seeded random initial data at a prescribed smallness.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tcm_core::diagnostics::stability_sum;
use tcm_core::model::TcmState;
use tcm_core::spectral::{SpectralField, SpectralGrid, VectorField};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

const MAX_DRAWS: u64 = 16;

/// Per-mode amplitude `(k/k_p)^{−q} exp(−(k/k_p)²/2)`, zero at `k = 0`.
pub fn spectrum(k: f64, k_peak: f64, slope: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let r = k / k_peak;
    r.powf(-slope) * (-0.5 * r * r).exp()
}

fn shaped_noise(grid: &Arc<SpectralGrid>, rng: &mut ChaCha8Rng, k_peak: f64, slope: f64) -> SpectralField {
    let noise: Vec<f64> = StandardNormal.sample_iter(&mut *rng).take(grid.len()).collect();
    let white = SpectralField::from_physical(grid, &noise).expect("noise has grid length");
    white
        .map_symbol(|i| spectrum(grid.k_abs(i), k_peak, slope))
        .dealias()
}

fn draw(config: &RunConfig, grid: &Arc<SpectralGrid>, seed: u64) -> TcmState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k_peak = config.spectrum_peak * grid.dk();
    let q = config.spectrum_slope;
    let mut next = || shaped_noise(grid, &mut rng, k_peak, q);
    let mut u = VectorField {
        x: next(),
        y: next(),
    };
    u.leray_project_in_place();
    let v = VectorField {
        x: next(),
        y: next(),
    };
    let theta = next();
    TcmState {
        u,
        v,
        theta,
        time: 0.0,
    }
}

/// Divergence-free random `u₀`, random `v₀`, `θ₀`, rescaled so that the
/// smallness norm (the damped variant when `α > 0`) equals `epsilon`.
pub fn make_initial_data(config: &RunConfig) -> CliResult<TcmState> {
    let grid = SpectralGrid::new(config.grid.n, config.grid.box_length)?;
    let s = config.params.s;
    let damped = config.params.alpha > 0.0;
    for attempt in 0..MAX_DRAWS {
        let state = draw(config, &grid, config.seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let norm = stability_sum(&state, s, damped);
        if !(norm > 0.0 && norm.is_finite()) {
            continue;
        }
        let c = config.epsilon / norm;
        return Ok(TcmState {
            u: state.u.scaled(c),
            v: state.v.scaled(c),
            theta: state.theta.scaled(c),
            time: 0.0,
        });
    }
    Err(CliError::Config(format!(
        "initial spectrum is empty on this grid (peak {}, n {})",
        config.spectrum_peak, config.grid.n
    )))
}
