//! Numerical probes of the functional inequalities used by the energy
//! estimates. Each check evaluates both sides on random band-limited,
//! mean-free fields and reports the observed ratio `lhs / rhs`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TcmError};
use crate::model::ViscosityLaw;
use crate::spectral::{symbol, Axis, SpectralField, SpectralGrid};

/// Tolerance on the exact interpolation constant.
pub const EXACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabConfig {
    pub trials: usize,
    pub resolutions: Vec<usize>,
    pub seed: u64,
    pub box_length: f64,
    /// Order used by the Kato–Ponce and composition checks.
    pub s: f64,
    /// `(s1, s, s2)` for the interpolation check.
    pub interpolation: [f64; 3],
    /// Added to the middle interpolation order; nonzero only to exercise the
    /// failure path.
    #[serde(skip)]
    pub perturb_exponent: f64,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            resolutions: vec![64, 128],
            seed: 0,
            box_length: 2.0 * PI,
            s: 1.5,
            interpolation: [0.0, 1.0, 2.0],
            perturb_exponent: 0.0,
        }
    }
}

impl LabConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(TcmError::param("trials", "must be at least 1"));
        }
        if self.resolutions.is_empty() {
            return Err(TcmError::param("resolutions", "need at least one grid size"));
        }
        let [s1, s, s2] = self.interpolation;
        if !(0.0 <= s1 && s1 < s && s < s2) {
            return Err(TcmError::param(
                "interpolation",
                format!("need 0 <= s1 < s < s2, got ({s1}, {s}, {s2})"),
            ));
        }
        if !(self.s >= 1.0) {
            return Err(TcmError::param("s", format!("lab order must be >= 1, got {}", self.s)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionStats {
    pub n: usize,
    pub evaluated: usize,
    pub worst_ratio: f64,
    pub median_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub trials: usize,
    pub worst_ratio: f64,
    pub median_ratio: f64,
    pub resolutions: Vec<usize>,
    /// Worst ratio varies by less than a factor 2 across resolutions.
    pub stable: bool,
    /// Known sharp bound on the ratio, when there is one.
    pub exact_bound: Option<f64>,
    pub per_resolution: Vec<ResolutionStats>,
}

impl InequalityReport {
    /// `true` unless a known bound is exceeded.
    pub fn exact_ok(&self) -> bool {
        self.exact_bound.is_none_or(|b| self.worst_ratio <= b)
    }

    pub fn passed(&self) -> bool {
        self.stable && self.exact_ok()
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Working grid plus its 2× oversampled companion.
#[derive(Debug, Clone)]
pub struct LabGrid {
    pub grid: Arc<SpectralGrid>,
    pub fine: Arc<SpectralGrid>,
}

impl LabGrid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        Ok(Self {
            grid: SpectralGrid::new(n, box_length)?,
            fine: SpectralGrid::new(2 * n, box_length)?,
        })
    }

    fn fine_values(&self, f: &SpectralField) -> Vec<f64> {
        f.resample(&self.fine)
            .expect("fine grid shares the box")
            .to_physical()
    }

    fn lp(&self, values: &[f64], p: f64) -> f64 {
        let w = self.fine.cell_area();
        if p.is_infinite() {
            return values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * w).powf(1.0 / p)
    }

    /// `‖f‖_{L^p}` on the oversampled grid.
    pub fn lp_norm(&self, f: &SpectralField, p: f64) -> f64 {
        self.lp(&self.fine_values(f), p)
    }

    /// `‖|∇f|‖_{L^p}` on the oversampled grid.
    pub fn grad_lp_norm(&self, f: &SpectralField, p: f64) -> f64 {
        let gx = self.fine_values(&f.derivative(Axis::X));
        let gy = self.fine_values(&f.derivative(Axis::Y));
        let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
        self.lp(&mag, p)
    }

    /// Back to the working grid; exact for products of fields limited to
    /// `6|j| < n`.
    fn to_field(&self, fine_values: &[f64]) -> SpectralField {
        SpectralField::from_physical(&self.fine, fine_values)
            .and_then(|f| f.resample(&self.grid))
            .expect("fine grid shares the box")
    }
}

/// `Λ^s` on mean-free fields; the zero mode is dropped for every order.
pub fn lam(f: &SpectralField, s: f64) -> SpectralField {
    let g = Arc::clone(f.grid());
    f.map_symbol(|i| {
        let k = g.k_abs(i);
        if k == 0.0 {
            0.0
        } else {
            symbol(k, s)
        }
    })
}

fn lam_norm(f: &SpectralField, s: f64) -> f64 {
    lam(f, s).l2_norm()
}

/// Random mean-free field with spectrum `|k|^{−r}` restricted to frequencies
/// `6|j| < n`, normalized to unit mean square.
pub fn random_field(grid: &Arc<SpectralGrid>, r: f64, rng: &mut impl Rng) -> Option<SpectralField> {
    let n = grid.n();
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    let white = SpectralField::from_physical(grid, &noise).ok()?;
    let f = white.map_symbol(|i| {
        let (jx, jy) = grid.frequencies(i);
        let k = grid.k_abs(i);
        if k == 0.0 || 6 * jx.unsigned_abs() >= n as u64 || 6 * jy.unsigned_abs() >= n as u64 {
            0.0
        } else {
            k.powf(-r)
        }
    });
    let norm = f.l2_norm();
    if !(norm > 0.0) {
        return None;
    }
    Some(f.scaled(grid.box_length() / norm))
}

fn trial_rng(seed: u64, tag: u64, n: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 48) ^ ((n as u64) << 32) ^ trial as u64);
    rng
}

fn draw(grid: &Arc<SpectralGrid>, rng: &mut ChaCha8Rng) -> Option<SpectralField> {
    let r = rng.random_range(1.5..=3.0);
    random_field(grid, r, rng)
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    (rhs > 0.0 && lhs.is_finite() && rhs.is_finite()).then(|| lhs / rhs)
}

/// `‖f‖_{L⁴} / ‖Λ^{1/2} f‖`.
pub fn gn_ratio(lg: &LabGrid, f: &SpectralField) -> Option<f64> {
    ratio(lg.lp_norm(f, 4.0), lam_norm(f, 0.5))
}

/// `‖Λ^{s−1} f‖_{L^{2/(s−1)}} / ‖∇f‖`, for `1 < s < 2`.
pub fn gn_lambda_ratio(lg: &LabGrid, f: &SpectralField, s: f64) -> Option<f64> {
    ratio(lg.lp_norm(&lam(f, s - 1.0), 2.0 / (s - 1.0)), lam_norm(f, 1.0))
}

/// `‖∇f‖_{L^{2/(2−s)}} / ‖Λ^s f‖`, for `1 < s < 2`.
pub fn gn_grad_ratio(lg: &LabGrid, f: &SpectralField, s: f64) -> Option<f64> {
    ratio(lg.grad_lp_norm(f, 2.0 / (2.0 - s)), lam_norm(f, s))
}

/// `‖Λ^s f‖ / (‖Λ^{s1} f‖^{(s2−s)/(s2−s1)} ‖Λ^{s2} f‖^{(s−s1)/(s2−s1)})`.
pub fn interpolation_ratio(f: &SpectralField, s1: f64, s: f64, s2: f64) -> Option<f64> {
    interpolation_ratio_perturbed(f, s1, s, s2, 0.0)
}

fn interpolation_ratio_perturbed(f: &SpectralField, s1: f64, s: f64, s2: f64, dp: f64) -> Option<f64> {
    let a = (s2 - s) / (s2 - s1);
    let b = (s - s1) / (s2 - s1);
    let rhs = lam_norm(f, s1).powf(a) * lam_norm(f, s2).powf(b);
    ratio(lam_norm(f, s + dp), rhs)
}

/// `‖f‖_{L∞} / (‖Λ^{s1} f‖^{(s2−1)/(s2−s1)} ‖Λ^{s2} f‖^{(1−s1)/(s2−s1)})`,
/// for `s1 < 1 < s2`.
pub fn linf_interpolation_ratio(lg: &LabGrid, f: &SpectralField, s1: f64, s2: f64) -> Option<f64> {
    let a = (s2 - 1.0) / (s2 - s1);
    let b = (1.0 - s1) / (s2 - s1);
    let rhs = lam_norm(f, s1).powf(a) * lam_norm(f, s2).powf(b);
    ratio(lg.lp_norm(f, f64::INFINITY), rhs)
}

/// `‖Λ^s(fg) − fΛ^s g‖` and `‖∇f‖_∞‖Λ^{s−1}g‖ + ‖g‖_∞‖Λ^s f‖`.
pub fn kato_ponce_sides(lg: &LabGrid, f: &SpectralField, g: &SpectralField, s: f64) -> (f64, f64) {
    let fv = lg.fine_values(f);
    let gv = lg.fine_values(g);
    let lgv = lg.fine_values(&lam(g, s));
    let fg: Vec<f64> = fv.iter().zip(&gv).map(|(a, b)| a * b).collect();
    let flg: Vec<f64> = fv.iter().zip(&lgv).map(|(a, b)| a * b).collect();
    let mut comm = lam(&lg.to_field(&fg), s);
    comm.axpy(-1.0, &lg.to_field(&flg));
    let lhs = comm.l2_norm();
    let rhs = lg.grad_lp_norm(f, f64::INFINITY) * lam_norm(g, s - 1.0)
        + lg.lp(&gv, f64::INFINITY) * lam_norm(f, s);
    (lhs, rhs)
}

/// `‖Λ^s(μ(θ)−μ(0))‖` and `(1 + ‖∇θ‖^{⌈s−1⌉}) ‖Λ^s θ‖`.
pub fn composition_sides(lg: &LabGrid, theta: &SpectralField, s: f64, law: &ViscosityLaw) -> (f64, f64) {
    let tv = lg.fine_values(theta);
    let comp: Vec<f64> = tv.iter().map(|&t| law.excess(t) - law.excess(0.0)).collect();
    let lhs = lam_norm(&lg.to_field(&comp), s);
    let power = (s - 1.0).ceil() as i32;
    let rhs = (1.0 + lam_norm(theta, 1.0).powi(power)) * lam_norm(theta, s);
    (lhs, rhs)
}

#[derive(Debug, Clone, Copy)]
enum Probe {
    Gn,
    GnLambda,
    GnGrad,
    Interp,
    InterpLinf,
    KatoPonce,
    Composition(ViscosityLaw),
}

impl Probe {
    fn tag(&self) -> u64 {
        match self {
            Probe::Gn | Probe::GnLambda | Probe::GnGrad => 1,
            Probe::Interp | Probe::InterpLinf => 2,
            Probe::KatoPonce => 3,
            Probe::Composition(_) => 4,
        }
    }
}

/// Runs the inequality checks over the configured resolutions.
#[derive(Debug, Clone)]
pub struct Lab {
    config: LabConfig,
    grids: Vec<LabGrid>,
}

impl Lab {
    pub fn new(config: LabConfig) -> Result<Self> {
        config.validate()?;
        let grids = config
            .resolutions
            .iter()
            .map(|&n| LabGrid::new(n, config.box_length))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config, grids })
    }

    pub fn config(&self) -> &LabConfig {
        &self.config
    }

    fn evaluate(&self, probe: Probe, lg: &LabGrid, trial: usize) -> Option<f64> {
        let n = lg.grid.n();
        let mut rng = trial_rng(self.config.seed, probe.tag(), n, trial);
        let f = draw(&lg.grid, &mut rng)?;
        let [s1, s, s2] = self.config.interpolation;
        match probe {
            Probe::Gn => gn_ratio(lg, &f),
            Probe::GnLambda => {
                let so = rng.random_range(1.2..=1.8);
                gn_lambda_ratio(lg, &f, so)
            }
            Probe::GnGrad => {
                // consume the same draw as GnLambda so both see one order
                let so = rng.random_range(1.2..=1.8);
                gn_grad_ratio(lg, &f, so)
            }
            Probe::Interp => {
                interpolation_ratio_perturbed(&f, s1, s, s2, self.config.perturb_exponent)
            }
            Probe::InterpLinf => linf_interpolation_ratio(lg, &f, s1, s2),
            Probe::KatoPonce => {
                let g = draw(&lg.grid, &mut rng)?;
                let (l, r) = kato_ponce_sides(lg, &f, &g, self.config.s);
                ratio(l, r)
            }
            Probe::Composition(law) => {
                let (l, r) = composition_sides(lg, &f, self.config.s, &law);
                ratio(l, r)
            }
        }
    }

    fn report(&self, name: &str, probe: Probe, exact_bound: Option<f64>) -> InequalityReport {
        let trials = self.config.trials;
        let mut per_resolution = Vec::new();
        let mut all = Vec::new();
        for lg in &self.grids {
            let ratios: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| self.evaluate(probe, lg, t))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect();
            let ratios = sorted(ratios);
            per_resolution.push(ResolutionStats {
                n: lg.grid.n(),
                evaluated: ratios.len(),
                worst_ratio: ratios.last().copied().unwrap_or(0.0),
                median_ratio: median(&ratios),
            });
            all.extend(ratios);
        }
        let all = sorted(all);
        let worsts: Vec<f64> = per_resolution.iter().map(|r| r.worst_ratio).collect();
        let hi = worsts.iter().copied().fold(0.0, f64::max);
        let lo = worsts.iter().copied().fold(f64::INFINITY, f64::min);
        InequalityReport {
            name: name.to_string(),
            trials,
            worst_ratio: all.last().copied().unwrap_or(0.0),
            median_ratio: median(&all),
            resolutions: self.config.resolutions.clone(),
            stable: lo > 0.0 && hi < 2.0 * lo,
            exact_bound,
            per_resolution,
        }
    }

    /// `L⁴` Gagliardo–Nirenberg bound and its two companion forms.
    pub fn check_gn(&self) -> Vec<InequalityReport> {
        vec![
            self.report("gn_l4", Probe::Gn, None),
            self.report("gn_lambda", Probe::GnLambda, None),
            self.report("gn_grad", Probe::GnGrad, None),
        ]
    }

    /// Interpolation between `Λ^{s1}` and `Λ^{s2}` (constant 1) and the
    /// `L∞` interpolation bound (empirical constant, only when `s1 < 1 < s2`).
    pub fn check_interpolation(&self) -> Vec<InequalityReport> {
        let mut out = vec![self.report("interpolation", Probe::Interp, Some(1.0 + EXACT_SLACK))];
        let [s1, _, s2] = self.config.interpolation;
        if s1 < 1.0 && s2 > 1.0 {
            out.push(self.report("interpolation_linf", Probe::InterpLinf, None));
        }
        out
    }

    pub fn check_kato_ponce(&self) -> InequalityReport {
        self.report("kato_ponce", Probe::KatoPonce, None)
    }

    pub fn check_composition(&self, law: ViscosityLaw) -> InequalityReport {
        let name = format!("composition_{}", law.name());
        self.report(&name, Probe::Composition(law), None)
    }

    /// Every check with the default quadratic viscosity law.
    pub fn check_all(&self) -> Vec<InequalityReport> {
        let mut out = self.check_gn();
        out.extend(self.check_interpolation());
        out.push(self.check_kato_ponce());
        out.push(self.check_composition(ViscosityLaw::default()));
        out
    }
}
