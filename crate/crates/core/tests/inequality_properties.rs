mod common;

use proptest::prelude::*;
use tcm_core::inequality_lab::{
    composition_sides, gn_ratio, interpolation_ratio, kato_ponce_sides, Lab, LabConfig, LabGrid,
};
use tcm_core::model::ViscosityLaw;
use tcm_core::spectral::SpectralField;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn interpolation_constant_is_one(seed in any::<u64>(), s1 in 0.0f64..1.0, d1 in 0.1f64..1.0, d2 in 0.1f64..1.5) {
        let g = common::grid(32);
        let f = common::field(&g, seed, 2.0);
        let r = interpolation_ratio(&f, s1, s1 + d1, s1 + d1 + d2).unwrap();
        prop_assert!(r <= 1.0 + 1e-12);
    }

    #[test]
    fn ratios_are_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0, d in 0.01f64..100.0) {
        let lg = LabGrid::new(32, 2.0 * std::f64::consts::PI).unwrap();
        let f = common::field(&lg.grid, seed, 2.0);
        let g = common::field(&lg.grid, seed ^ 9, 2.5);
        // degree 1 over degree 1
        prop_assert!(close(gn_ratio(&lg, &f).unwrap(), gn_ratio(&lg, &f.scaled(c)).unwrap()));
        prop_assert!(close(
            interpolation_ratio(&f, 0.0, 1.0, 2.0).unwrap(),
            interpolation_ratio(&f.scaled(c), 0.0, 1.0, 2.0).unwrap()
        ));
        // bilinear on both sides
        let (l0, r0) = kato_ponce_sides(&lg, &f, &g, 1.5);
        let (l1, r1) = kato_ponce_sides(&lg, &f.scaled(c), &g.scaled(d), 1.5);
        prop_assert!(close(l0 / r0, l1 / r1));
        // only the linear law is homogeneous of degree one
        let law = ViscosityLaw::Linear { slope: 0.8 };
        let (l0, r0) = composition_sides(&lg, &f, 1.5, &law);
        let (l1, _) = composition_sides(&lg, &f.scaled(c), 1.5, &law);
        prop_assert!(close(l1, c * l0));
        prop_assert!(l0 / r0 <= 0.8 + 1e-12);
    }

    #[test]
    fn commutator_vanishes_for_constants(seed in any::<u64>(), c in -10.0f64..10.0, s in 0.2f64..3.0) {
        let lg = LabGrid::new(32, 2.0 * std::f64::consts::PI).unwrap();
        let g = common::field(&lg.grid, seed, 2.0);
        let f = SpectralField::constant(&lg.grid, c);
        let (l, _) = kato_ponce_sides(&lg, &f, &g, s);
        prop_assert!(l <= 1e-13 * c.abs().max(1.0) * g.lambda_norm(s).unwrap());
    }
}

#[test]
fn lab_reports_are_reproducible() {
    let cfg = LabConfig {
        trials: 8,
        resolutions: vec![32, 64],
        ..LabConfig::default()
    };
    let a = Lab::new(cfg.clone()).unwrap().check_all();
    let b = Lab::new(cfg).unwrap().check_all();
    assert_eq!(a, b);
    for r in &a {
        assert!(r.worst_ratio >= r.median_ratio && r.median_ratio >= 0.0, "{r:?}");
    }
}

#[test]
fn perturbed_exponent_breaks_interpolation() {
    let cfg = LabConfig {
        trials: 8,
        resolutions: vec![32],
        perturb_exponent: 0.5,
        ..LabConfig::default()
    };
    let reports = Lab::new(cfg).unwrap().check_interpolation();
    assert!(!reports[0].exact_ok());
}
