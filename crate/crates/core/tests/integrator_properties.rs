mod common;

use tcm_core::integrator::{integrate, Scheme, Stepper, StepperConfig, TimeStep};
use tcm_core::model::{ModelParams, TcmState};

fn distance(a: &TcmState, b: &TcmState) -> f64 {
    let mut u = a.u.clone();
    u.axpy(-1.0, &b.u);
    let mut v = a.v.clone();
    v.axpy(-1.0, &b.v);
    let mut th = a.theta.clone();
    th.axpy(-1.0, &b.theta);
    (u.l2_norm().powi(2) + v.l2_norm().powi(2) + th.l2_norm().powi(2)).sqrt()
}

fn advance(s0: &TcmState, p: &ModelParams, scheme: Scheme, dt: f64, t_end: f64) -> TcmState {
    let cfg = StepperConfig {
        dt: TimeStep::Fixed(dt),
        cfl: 0.5,
        t_end,
        sample_every: t_end,
        scheme,
    };
    integrate(s0, p, &cfg, |_, _| Ok(())).unwrap().state
}

fn observed_order(scheme: Scheme, dts: [f64; 3]) -> f64 {
    let g = common::grid(32);
    let p = ModelParams::new(0.1, 1.0, 0.5, 1.5).unwrap();
    let s0 = common::state(&g, 11, 0.4);
    let [a, b, c] = dts.map(|dt| advance(&s0, &p, scheme, dt, 0.4));
    (distance(&a, &b) / distance(&b, &c)).log2()
}

#[test]
fn if_rk4_self_convergence_order() {
    let order = observed_order(Scheme::IfRk4, [0.02, 0.01, 0.005]);
    assert!(order >= 3.7, "observed order {order}");
}

#[test]
fn imex_euler_self_convergence_order() {
    let order = observed_order(Scheme::ImexEuler, [0.004, 0.002, 0.001]);
    assert!(order >= 0.9, "observed order {order}");
}

#[test]
fn step_energy_change_matches_dissipation() {
    let g = common::grid(32);
    let p = ModelParams::new(0.0, 1.0, 0.5, 1.5).unwrap();
    let s0 = common::state(&g, 5, 0.3);
    let mut defects = Vec::new();
    for dt in [0.02, 0.01] {
        let mut st = Stepper::new(&p, &g, Scheme::IfRk4);
        let out = st.step(&s0, dt).unwrap();
        defects.push((out.state.energy() - s0.energy() + out.dissipated).abs());
    }
    // O(dt⁵) per step: halving dt shrinks the defect by about 32
    assert!(defects[0] / defects[1] > 16.0, "{defects:?}");
}

#[test]
fn velocity_stays_divergence_free() {
    let g = common::grid(32);
    let p = ModelParams::new(0.0, 1.0, 0.5, 1.5).unwrap();
    let mut s = common::state(&g, 8, 0.5);
    let mut st = Stepper::new(&p, &g, Scheme::IfRk4);
    for _ in 0..20 {
        s = st.step(&s, 0.01).unwrap().state;
        assert!(s.divergence_ratio() <= 1e-12);
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let g = common::grid(32);
    let p = ModelParams::new(0.2, 1.0, 0.5, 1.5).unwrap();
    let s0 = common::state(&g, 2, 0.3);
    let cfg = StepperConfig {
        dt: TimeStep::AUTO,
        cfl: 0.5,
        t_end: 0.5,
        sample_every: 0.1,
        scheme: Scheme::IfRk4,
    };
    let collect = || {
        let mut seen = Vec::new();
        integrate(&s0, &p, &cfg, |s, _| {
            seen.push(s.theta.coeffs().iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect::<Vec<_>>());
            Ok(())
        })
        .unwrap();
        seen
    };
    assert_eq!(collect(), collect());
}
