//! End-to-end acceptance suite. Runs every criterion, prints one line per
//! criterion and exits non-zero if any of them failed.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use tcm_cli::commands::{execute_run, FitEntry, RunArtifacts};
use tcm_cli::config::{RunConfig, SweepAxes, SweepConfig};
use tcm_core::diagnostics::FieldId;
use tcm_core::inequality_lab::random_field;
use tcm_core::integrator::{integrate, Scheme, StepperConfig, TimeStep};
use tcm_core::model::{ModelParams, TcmState, ViscosityLaw};
use tcm_core::spectral::{SpectralField, SpectralGrid, VectorField};

mod tol {
    pub const SHEAR_REL: f64 = 1e-7;
    pub const SHEAR_SECONDS: f64 = 10.0;
    pub const BUDGET_REL: f64 = 1e-9;
    pub const DRIFT_REL: f64 = 1e-6;
    pub const STABILITY_FACTOR: f64 = 2.0;
    pub const SEEDS: u64 = 5;
    pub const GAP_V_THETA: f64 = 0.3;
    pub const GAP_U_DAMPING: f64 = 1.0;
    pub const RATE_REL: f64 = 0.4;
    pub const LAB_TRIALS: usize = 500;
    pub const LAB_SECONDS: f64 = 60.0;
    pub const RK4_ORDER: f64 = 3.7;
    pub const IMEX_ORDER: f64 = 0.9;
}

struct Outcome {
    id: u32,
    name: &'static str,
    ok: bool,
    detail: String,
}

fn report(out: &Outcome) {
    println!(
        "criterion {} [{}] {}: {}",
        out.id,
        if out.ok { "PASS" } else { "FAIL" },
        out.name,
        out.detail
    );
}

#[allow(clippy::too_many_arguments)]
fn run_config(n: usize, alpha: f64, beta: f64, mu_lower: f64, seed: u64, t_end: f64, sample_every: f64, norms: &str) -> RunConfig {
    let text = format!(
        r#"
schema_version = 1
epsilon = 0.01
seed = {seed}
[grid]
n = {n}
box_length = {box_length}
[params]
alpha = {alpha}
beta = {beta}
mu_lower = {mu_lower}
s = 1.5
[stepper]
dt = "auto"
t_end = {t_end}
sample_every = {sample_every}
{norms}
"#,
        box_length = 16.0 * PI,
    );
    RunConfig::from_toml(&text).expect("acceptance config is valid")
}

fn shear_mode() -> Outcome {
    let start = Instant::now();
    let g = SpectralGrid::new(64, 2.0 * PI).unwrap();
    let mut worst: f64 = 0.0;
    for alpha in [0.0, 0.3] {
        let p = ModelParams::new(alpha, 1.0, 1.0, 1.5)
            .unwrap()
            .with_law(ViscosityLaw::Constant)
            .unwrap();
        let mut s0 = TcmState::zeros(&g);
        s0.u = VectorField::from_fns(&g, |_, y| y.sin(), |_, _| 0.0);
        let cfg = StepperConfig {
            dt: TimeStep::Fixed(1e-3),
            cfl: 0.5,
            t_end: 1.0,
            sample_every: 1.0,
            scheme: Scheme::IfRk4,
        };
        let end = integrate(&s0, &p, &cfg, |_, _| Ok(())).unwrap().state;
        let exact = s0.u.clone();
        let exact = exact.scaled(f64::exp(-(1.0 + alpha)));
        let mut diff = end.u.clone();
        diff.axpy(-1.0, &exact);
        worst = worst.max(diff.l2_norm() / exact.l2_norm());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 1,
        name: "shear mode",
        ok: worst <= tol::SHEAR_REL && secs < tol::SHEAR_SECONDS,
        detail: format!("max rel error {worst:.2e} (≤ {:.0e}), {secs:.1} s (< {} s)", tol::SHEAR_REL, tol::SHEAR_SECONDS),
    }
}

/// Runs for criteria 2 to 5: undamped and damped, several seeds.
fn stability_runs(root: &Path) -> Vec<(f64, u64, RunArtifacts)> {
    let mut out = Vec::new();
    for alpha in [0.0, 0.5] {
        for seed in 0..tol::SEEDS {
            let cfg = run_config(128, alpha, 1.0, 1.0, seed, 20.0, 0.5, "");
            let dir = root.join(format!("stab_a{alpha}_s{seed}"));
            let art = execute_run(&cfg, &dir, true).expect("stability run completes");
            out.push((alpha, seed, art));
        }
    }
    out
}

fn energy_identity(runs: &[(f64, u64, RunArtifacts)]) -> Outcome {
    let (mut budget, mut drift): (f64, f64) = (0.0, 0.0);
    for (_, _, art) in runs {
        for r in &art.records {
            if r.dissipation > 0.0 {
                budget = budget.max(r.budget_residual.abs() / r.dissipation);
            }
        }
        let (first, last) = (&art.records[0], art.records.last().unwrap());
        drift = drift.max((last.energy - first.energy + last.dissipated).abs() / last.dissipated);
    }
    Outcome {
        id: 2,
        name: "energy identity",
        ok: budget <= tol::BUDGET_REL && drift <= tol::DRIFT_REL,
        detail: format!(
            "worst budget residual {budget:.2e} (≤ {:.0e}), worst cumulative drift {drift:.2e} (≤ {:.0e}) over {} runs",
            tol::BUDGET_REL,
            tol::DRIFT_REL,
            runs.len()
        ),
    }
}

fn stability_envelope(runs: &[(f64, u64, RunArtifacts)]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for (alpha, seed, art) in runs {
        let s = &art.summary.stability;
        worst = worst.max(s.sup_norm_sum / (s.threshold / tol::STABILITY_FACTOR));
        if s.sup_norm_sum >= s.threshold {
            failed.push(format!("α={alpha} seed={seed}"));
        }
    }
    Outcome {
        id: 3,
        name: "stability envelope",
        ok: failed.is_empty(),
        detail: format!("worst sup/ε = {worst:.4} (< {}), failures: {failed:?}", tol::STABILITY_FACTOR),
    }
}

fn x_monotone(runs: &[(f64, u64, RunArtifacts)]) -> Outcome {
    let violations: usize = runs.iter().map(|(_, _, a)| a.summary.x_monotonicity.violations.len()).sum();
    let intervals: usize = runs.iter().map(|(_, _, a)| a.summary.x_monotonicity.intervals).sum();
    Outcome {
        id: 4,
        name: "X² monotonicity",
        ok: violations == 0,
        detail: format!("{violations} violations over {intervals} intervals"),
    }
}

fn bands(runs: &[(f64, u64, RunArtifacts)]) -> Outcome {
    let violations: usize = runs.iter().map(|(_, _, a)| a.summary.bands.violations.len()).sum();
    let samples: usize = runs.iter().map(|(_, _, a)| a.summary.bands.samples).sum();
    Outcome {
        id: 5,
        name: "equivalence bands",
        ok: violations == 0,
        detail: format!("{violations} violating samples out of {samples}"),
    }
}

fn exponent(art_fits: &[FitEntry], field: FieldId) -> Option<(f64, f64)> {
    art_fits.iter().find_map(|f| match f {
        FitEntry::Ok(r) if r.fit.field == field && r.fit.gamma == 1.0 => Some((r.fit.exponent, r.fit.theory_exponent)),
        _ => None,
    })
}

fn rate_ordering(root: &Path) -> Outcome {
    let norms = r#"
[diagnostics]
orders = [1.5]
norms = [{ field = "u", gamma = 1.0 }, { field = "v", gamma = 1.0 }, { field = "theta", gamma = 1.0 }]
"#;
    let base = run_config(64, 0.0, 4.0, 0.25, 1, 100.0, 0.5, norms);
    let sweep = SweepConfig {
        schema_version: 1,
        base,
        axes: SweepAxes {
            alpha: vec![0.0, 0.5],
            ..SweepAxes::default()
        },
        workers: None,
    };
    let outcome = tcm_cli::commands::execute_sweep(&sweep, &root.join("rates"), None, true).expect("sweep runs");
    let mut ok = outcome.exit_code() == 0;
    let mut detail = Vec::new();
    let mut u_rates = Vec::new();
    for row in &outcome.rows {
        let get = |f| exponent(&row.fits, f);
        let (Some(u), Some(v), Some(th)) = (get(FieldId::U), get(FieldId::V), get(FieldId::Theta)) else {
            ok = false;
            detail.push(format!("α={}: fit missing", row.cell.alpha));
            continue;
        };
        let within = |(e, t): (f64, f64)| ((e - t) / t).abs() <= tol::RATE_REL;
        ok &= v.0 <= th.0 - tol::GAP_V_THETA && within(v) && within(th);
        u_rates.push(u.0);
        detail.push(format!(
            "α={}: u {:.3} v {:.3} (theory {:.2}) θ {:.3} (theory {:.2})",
            row.cell.alpha, u.0, v.0, v.1, th.0, th.1
        ));
    }
    if let [undamped, damped] = u_rates[..] {
        ok &= damped <= undamped - tol::GAP_U_DAMPING;
    } else {
        ok = false;
    }
    Outcome {
        id: 6,
        name: "rate ordering and gaps",
        ok,
        detail: detail.join("; "),
    }
}

fn inequality_lab(root: &Path) -> Outcome {
    let start = Instant::now();
    let out = root.join("validate");
    let status = Command::new(env!("CARGO_BIN_EXE_tcm"))
        .args(["--quiet", "--out"])
        .arg(&out)
        .args(["validate", "--trials", &tol::LAB_TRIALS.to_string(), "--resolutions", "64,128"])
        .status()
        .expect("tcm binary runs");
    let secs = start.elapsed().as_secs_f64();
    let reports: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(out.join("validate.json")).expect("validate.json written")).unwrap();
    let pick = |name: &str| reports.as_array().unwrap().iter().find(|r| r["name"] == name).cloned();
    let interp = pick("interpolation").expect("interpolation report");
    let worst = interp["worst_ratio"].as_f64().unwrap();
    let stable = |name: &str| pick(name).is_some_and(|r| r["stable"] == true);
    let ok = status.success()
        && worst <= 1.0 + 1e-12
        && interp["trials"].as_u64().unwrap() as usize >= tol::LAB_TRIALS
        && stable("kato_ponce")
        && stable("composition_quadratic")
        && secs < tol::LAB_SECONDS;
    Outcome {
        id: 7,
        name: "inequality lab",
        ok,
        detail: format!(
            "exit {:?}, interpolation worst {worst:.15}, kato_ponce stable {}, composition stable {}, {secs:.1} s (< {} s)",
            status.code(),
            stable("kato_ponce"),
            stable("composition_quadratic"),
            tol::LAB_SECONDS
        ),
    }
}

fn nonlinear_state(g: &Arc<SpectralGrid>) -> TcmState {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut f = || -> SpectralField { random_field(g, 2.0, &mut rng).unwrap().scaled(0.4) };
    let mut u = VectorField::new(f(), f()).unwrap();
    u.leray_project_in_place();
    let v = VectorField::new(f(), f()).unwrap();
    let mut s = TcmState::new(u, v, f(), 0.0).unwrap();
    s.sanitize();
    s
}

fn distance(a: &TcmState, b: &TcmState) -> f64 {
    let mut u = a.u.clone();
    u.axpy(-1.0, &b.u);
    let mut v = a.v.clone();
    v.axpy(-1.0, &b.v);
    let mut th = a.theta.clone();
    th.axpy(-1.0, &b.theta);
    (u.l2_norm().powi(2) + v.l2_norm().powi(2) + th.l2_norm().powi(2)).sqrt()
}

fn self_convergence() -> Outcome {
    let g = SpectralGrid::new(32, 2.0 * PI).unwrap();
    let p = ModelParams::new(0.1, 1.0, 0.5, 1.5).unwrap();
    let s0 = nonlinear_state(&g);
    let advance = |scheme, dt| {
        let cfg = StepperConfig {
            dt: TimeStep::Fixed(dt),
            cfl: 0.5,
            t_end: 0.4,
            sample_every: 0.4,
            scheme,
        };
        integrate(&s0, &p, &cfg, |_, _| Ok(())).unwrap().state
    };
    // observed order; the error bar of the finest level is its distance to the next coarser one
    let levels = |scheme, dts: [f64; 3]| {
        let [a, b, c] = dts.map(|dt| advance(scheme, dt));
        let order = (distance(&a, &b) / distance(&b, &c)).log2();
        (order, distance(&b, &c), c)
    };
    let (rk4, rk4_bar, rk4_state) = levels(Scheme::IfRk4, [0.02, 0.01, 0.005]);
    let (imex, imex_bar, imex_state) = levels(Scheme::ImexEuler, [0.004, 0.002, 0.001]);
    let gap = distance(&rk4_state, &imex_state);
    let combined = rk4_bar + imex_bar;
    Outcome {
        id: 8,
        name: "self-convergence",
        ok: rk4 >= tol::RK4_ORDER && imex >= tol::IMEX_ORDER && gap <= combined,
        detail: format!(
            "if-rk4 order {rk4:.3} (≥ {}), imex-euler order {imex:.3} (≥ {}), cross-scheme gap {gap:.3e} vs combined bar {combined:.3e}",
            tol::RK4_ORDER,
            tol::IMEX_ORDER
        ),
    }
}

fn determinism(root: &Path) -> Outcome {
    let cfg = run_config(32, 0.2, 1.0, 1.0, 9, 2.0, 0.25, "");
    let cfg_path = root.join("det.toml");
    std::fs::write(&cfg_path, cfg.to_toml()).unwrap();
    let bytes = |name: &str| {
        let out = root.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_tcm"))
            .args(["--quiet", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .arg("run")
            .status()
            .expect("tcm binary runs");
        assert!(status.success(), "run exited with {status}");
        std::fs::read(out.join("diagnostics.csv")).unwrap()
    };
    let (a, b) = (bytes("det_a"), bytes("det_b"));
    Outcome {
        id: 9,
        name: "determinism",
        ok: !a.is_empty() && a == b,
        detail: format!("{} and {} bytes, identical: {}", a.len(), b.len(), a == b),
    }
}

fn main() -> ExitCode {
    // optional criterion ids on the command line select a subset
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |ids: &[u32]| only.is_empty() || ids.iter().any(|id| only.contains(id));
    let root = tempfile::tempdir().unwrap();
    let mut outcomes = Vec::new();
    let mut record = |o: Outcome| {
        report(&o);
        outcomes.push(o);
    };
    if wanted(&[1]) {
        record(shear_mode());
    }
    if wanted(&[2, 3, 4, 5]) {
        let runs = stability_runs(root.path());
        for (id, check) in [
            (2, energy_identity as fn(&[(f64, u64, RunArtifacts)]) -> Outcome),
            (3, stability_envelope),
            (4, x_monotone),
            (5, bands),
        ] {
            if wanted(&[id]) {
                record(check(&runs));
            }
        }
    }
    if wanted(&[6]) {
        record(rate_ordering(root.path()));
    }
    if wanted(&[7]) {
        record(inequality_lab(root.path()));
    }
    if wanted(&[8]) {
        record(self_convergence());
    }
    if wanted(&[9]) {
        record(determinism(root.path()));
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.ok).map(|o| o.id).collect();
    println!("acceptance: {} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
