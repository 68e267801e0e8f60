mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use tcm_core::model::{derive_lambda, energy_budget, rhs, ModelParams, TcmState};
use tcm_core::spectral::{Axis, SpectralField, VectorField};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn budget_closes_on_random_states(seed in any::<u64>(), amp in 0.01f64..0.5, alpha in 0.0f64..1.0) {
        let g = common::grid(64);
        let p = ModelParams::new(alpha, 1.3, 0.7, 1.5).unwrap();
        let s = common::state(&g, seed, amp);
        let b = energy_budget(&s, &p).unwrap();
        prop_assert!(b.residual.abs() <= 1e-10 * b.dissipation, "{} vs {}", b.residual, b.dissipation);
    }

    #[test]
    fn velocity_tendency_stays_solenoidal(seed in any::<u64>(), amp in 0.01f64..1.0) {
        let g = common::grid(32);
        let p = ModelParams::new(0.2, 1.0, 1.0, 1.5).unwrap();
        let s = common::state(&g, seed, amp);
        let t = rhs(&s, &p).unwrap();
        let scale = t.u.lambda_norm(1.0).unwrap().max(1e-300);
        prop_assert!(t.u.divergence().l2_norm() <= 1e-12 * scale);
    }

    #[test]
    fn lambda_ignores_alpha_when_not_minimal(beta in 0.2f64..5.0, mu in 0.05f64..3.0, extra in 0.01f64..10.0) {
        let m = mu.min(beta / (4.0 + 2.0 * beta * beta));
        let alpha = m + extra;
        let damped = derive_lambda(alpha, beta, mu).unwrap();
        let undamped = derive_lambda(0.0, beta, mu).unwrap();
        prop_assert_eq!(damped, undamped);
    }
}

// Smooth periodic test state with low frequencies; `u` is built from a stream
// function so it is divergence-free.
fn psi(x: f64, y: f64) -> f64 {
    0.4 * (x + 2.0 * y).sin() + 0.3 * (2.0 * x - y).cos()
}
fn u_exact(x: f64, y: f64) -> (f64, f64) {
    // u = (∂y ψ, −∂x ψ)
    let uy = 0.8 * (x + 2.0 * y).cos() + 0.3 * (2.0 * x - y).sin();
    let ux = -(0.4 * (x + 2.0 * y).cos() - 0.6 * (2.0 * x - y).sin());
    (uy, ux)
}
fn v_exact(x: f64, y: f64) -> (f64, f64) {
    (0.3 * (2.0 * y).sin() + 0.1 * x.cos(), 0.25 * (x - y).cos())
}
fn theta_exact(x: f64, y: f64) -> f64 {
    0.5 * (x + y).sin() + 0.2 * (2.0 * x).cos()
}

struct Fd {
    n: usize,
    h: f64,
}

impl Fd {
    fn dx(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n * n)
            .map(|i| {
                let (ix, iy) = (i % n, i / n);
                (f[iy * n + (ix + 1) % n] - f[iy * n + (ix + n - 1) % n]) / (2.0 * self.h)
            })
            .collect()
    }
    fn dy(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n * n)
            .map(|i| {
                let (ix, iy) = (i % n, i / n);
                (f[((iy + 1) % n) * n + ix] - f[((iy + n - 1) % n) * n + ix]) / (2.0 * self.h)
            })
            .collect()
    }
}

fn zip(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

/// Centered-difference tendencies `(curl F_u, F_v, F_θ)` on an `n²` grid.
fn fd_rhs(n: usize, p: &ModelParams) -> [Vec<f64>; 4] {
    let l = 2.0 * PI;
    let fd = Fd { n, h: l / n as f64 };
    let pts: Vec<(f64, f64)> = (0..n * n)
        .map(|i| ((i % n) as f64 * fd.h, (i / n) as f64 * fd.h))
        .collect();
    let sample = |f: &dyn Fn(f64, f64) -> f64| pts.iter().map(|&(x, y)| f(x, y)).collect::<Vec<_>>();
    let ux = sample(&|x, y| u_exact(x, y).0);
    let uy = sample(&|x, y| u_exact(x, y).1);
    let vx = sample(&|x, y| v_exact(x, y).0);
    let vy = sample(&|x, y| v_exact(x, y).1);
    let th = sample(&theta_exact);
    let mu: Vec<f64> = th.iter().map(|&t| p.viscosity.value(t)).collect();

    let (uxx, uxy, uyx, uyy) = (fd.dx(&ux), fd.dy(&ux), fd.dx(&uy), fd.dy(&uy));
    let (vxx, vxy, vyx, vyy) = (fd.dx(&vx), fd.dy(&vx), fd.dx(&vy), fd.dy(&vy));
    let (thx, thy) = (fd.dx(&th), fd.dy(&th));

    let len = n * n;
    let mut fux = vec![0.0; len];
    let mut fuy = vec![0.0; len];
    let visc_x = zip(&fd.dx(&zip(&mu, &uxx, |a, b| a * b)), &fd.dy(&zip(&mu, &uxy, |a, b| a * b)), |a, b| a + b);
    let visc_y = zip(&fd.dx(&zip(&mu, &uyx, |a, b| a * b)), &fd.dy(&zip(&mu, &uyy, |a, b| a * b)), |a, b| a + b);
    let vv_x = zip(&fd.dx(&zip(&vx, &vx, |a, b| a * b)), &fd.dy(&zip(&vx, &vy, |a, b| a * b)), |a, b| a + b);
    let vv_y = zip(&fd.dx(&zip(&vy, &vx, |a, b| a * b)), &fd.dy(&zip(&vy, &vy, |a, b| a * b)), |a, b| a + b);
    let mut fvx = vec![0.0; len];
    let mut fvy = vec![0.0; len];
    let mut fth = vec![0.0; len];
    for i in 0..len {
        fux[i] = -(ux[i] * uxx[i] + uy[i] * uxy[i]) + visc_x[i] - p.alpha * ux[i] - vv_x[i];
        fuy[i] = -(ux[i] * uyx[i] + uy[i] * uyy[i]) + visc_y[i] - p.alpha * uy[i] - vv_y[i];
        fvx[i] = -(ux[i] * vxx[i] + uy[i] * vxy[i]) - (vx[i] * uxx[i] + vy[i] * uxy[i]) - p.beta * vx[i] + thx[i];
        fvy[i] = -(ux[i] * vyx[i] + uy[i] * vyy[i]) - (vx[i] * uyx[i] + vy[i] * uyy[i]) - p.beta * vy[i] + thy[i];
        fth[i] = -(ux[i] * thx[i] + uy[i] * thy[i]) + vxx[i] + vyy[i];
    }
    let curl = zip(&fd.dx(&fuy), &fd.dy(&fux), |a, b| a - b);
    [curl, fvx, fvy, fth]
}

#[test]
fn rhs_converges_to_finite_difference_oracle() {
    let p = ModelParams::new(0.3, 1.2, 0.8, 1.5).unwrap();
    let g = common::grid(128);
    let mut s = TcmState::new(
        VectorField::from_fns(&g, |x, y| u_exact(x, y).0, |x, y| u_exact(x, y).1),
        VectorField::from_fns(&g, |x, y| v_exact(x, y).0, |x, y| v_exact(x, y).1),
        SpectralField::from_fn(&g, theta_exact),
        0.0,
    )
    .unwrap();
    s.sanitize();
    assert!(SpectralField::from_fn(&g, psi).l2_norm() > 0.0);
    let t = rhs(&s, &p).unwrap();
    let curl = t.u.y.derivative(Axis::X).to_physical();
    let curl_b = t.u.x.derivative(Axis::Y).to_physical();
    let spectral = [
        zip(&curl, &curl_b, |a, b| a - b),
        t.v.x.to_physical(),
        t.v.y.to_physical(),
        t.theta.to_physical(),
    ];

    let mut errors = Vec::new();
    for n in [16usize, 32, 64] {
        let oracle = fd_rhs(n, &p);
        let stride = 128 / n;
        let mut worst: f64 = 0.0;
        for (spec, fd) in spectral.iter().zip(&oracle) {
            for iy in 0..n {
                for ix in 0..n {
                    let a = spec[(iy * stride) * 128 + ix * stride];
                    worst = worst.max((a - fd[iy * n + ix]).abs());
                }
            }
        }
        errors.push(worst);
    }
    let rate = (errors[1] / errors[2]).log2();
    assert!(rate >= 1.9, "errors {errors:?}, rate {rate}");
}
