//! Norms, cross terms, the `A/B` and `X/Y` energy functionals, the decay-rate
//! table and power-law fitting, plus CSV/JSONL record sinks.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TcmError};
use crate::integrator::SampleInfo;
use crate::model::{energy_budget, ModelParams, TcmState};
use crate::spectral::{SpectralField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldId {
    U,
    V,
    Theta,
}

impl FieldId {
    pub const ALL: [FieldId; 3] = [FieldId::U, FieldId::V, FieldId::Theta];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldId::U => "u",
            FieldId::V => "v",
            FieldId::Theta => "theta",
        }
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldId {
    type Err = TcmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" => Ok(FieldId::U),
            "v" => Ok(FieldId::V),
            "theta" | "θ" => Ok(FieldId::Theta),
            other => Err(TcmError::param("field", format!("expected u, v or theta, got `{other}`"))),
        }
    }
}

/// Formats a real order for column names: `1`, `1.5`, `0.25`.
pub fn format_order(x: f64) -> String {
    format!("{x}")
}

/// Column name of a tracked norm, e.g. `theta_gamma_1`.
pub fn norm_column(field: FieldId, gamma: f64) -> String {
    format!("{}_gamma_{}", field, format_order(gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub field: FieldId,
    pub gamma: f64,
}

/// Largest functional order accepted by default.
pub const MAX_ORDER: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub norms: Vec<NormSpec>,
    /// Orders `m` at which `A, B, X, Y` are evaluated.
    pub orders: Vec<f64>,
}

impl DiagnosticsConfig {
    /// `γ ∈ {0, 1}` for every field, functionals at `m = s`.
    pub fn standard(s: f64) -> Self {
        let norms = FieldId::ALL
            .iter()
            .flat_map(|&field| [0.0, 1.0].map(|gamma| NormSpec { field, gamma }))
            .collect();
        Self {
            norms,
            orders: vec![s],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for n in &self.norms {
            if !(n.gamma >= 0.0 && n.gamma.is_finite()) {
                return Err(TcmError::param("gamma", format!("must be non-negative, got {}", n.gamma)));
            }
        }
        for &m in &self.orders {
            if !(m > 1.0 && m <= MAX_ORDER) {
                return Err(TcmError::param(
                    "orders",
                    format!("each order must lie in (1, {MAX_ORDER}], got {m}"),
                ));
            }
        }
        Ok(())
    }
}

fn vec_energy(f: &VectorField, s: f64) -> f64 {
    f.weighted_energy(s)
}

fn sobolev_sq(e0: f64, es: f64) -> f64 {
    e0 + es
}

/// `∫ Λ^{o−1}v · Λ^{o−1}∇θ`, evaluated by Parseval.
pub fn cross_term(v: &VectorField, theta: &SpectralField, order: f64) -> Result<f64> {
    if !(order >= 1.0) {
        return Err(TcmError::param("order", format!("cross term needs order >= 1, got {order}")));
    }
    v.x.ensure_same_grid(theta)?;
    let grid = theta.grid();
    let e = order - 1.0;
    let mut sum = 0.0;
    for (i, th) in theta.coeffs().iter().enumerate() {
        let w = crate::spectral::symbol(grid.k_abs(i), e);
        if w == 0.0 {
            continue;
        }
        let (kx, ky) = grid.wavevector(i);
        // ∂θ ↔ ik θ̂; Re(v̂ · conj(ik θ̂)) = Re(v̂ · (−i k) conj θ̂)
        let dth_x = num_complex::Complex64::new(-th.im * kx, th.re * kx);
        let dth_y = num_complex::Complex64::new(-th.im * ky, th.re * ky);
        let a = v.x.coeffs()[i];
        let b = v.y.coeffs()[i];
        sum += w * w * (a.re * dth_x.re + a.im * dth_x.im + b.re * dth_y.re + b.im * dth_y.im);
    }
    Ok(sum * grid.area())
}

/// Squared value and cross-free sum of one functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squared {
    pub value_sq: f64,
    pub sum: f64,
}

fn band_tol(sum: f64) -> f64 {
    1e-12 * sum.abs() + f64::MIN_POSITIVE
}

pub fn functional_a_parts(state: &TcmState, params: &ModelParams, m: f64) -> Result<Squared> {
    let (u, v, th) = (&state.u, &state.v, &state.theta);
    let sum = vec_energy(u, m)
        + vec_energy(u, params.delta1 as f64)
        + sobolev_sq(vec_energy(v, 0.0), vec_energy(v, m))
        + sobolev_sq(th.weighted_energy(0.0), th.weighted_energy(m));
    let cross = cross_term(v, th, m)? + cross_term(v, th, 1.0)?;
    Ok(Squared {
        value_sq: sum - params.eta * cross,
        sum,
    })
}

/// `A_m`; checks `(3/4)A² ≤ Σ ≤ (5/4)A²` before taking the root.
pub fn functional_a(state: &TcmState, params: &ModelParams, m: f64) -> Result<f64> {
    let p = functional_a_parts(state, params, m)?;
    if p.value_sq < 0.0 {
        return Err(TcmError::NegativeRadicand {
            functional: "A",
            value: p.value_sq,
        });
    }
    let tol = band_tol(p.sum);
    if 0.75 * p.value_sq > p.sum + tol || p.sum > 1.25 * p.value_sq + tol {
        return Err(TcmError::BandViolation {
            functional: "A",
            squared: p.value_sq,
            sum: p.sum,
        });
    }
    Ok(p.value_sq.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BVariant {
    /// `λ(‖∇u‖²_{Ḣ^m} + ‖v‖²_{H^m} + ‖Λ^m θ‖²)^{1/2}`.
    #[default]
    Homogeneous,
    /// `λ(‖∇u‖²_{H^m} + ‖v‖²_{H^m} + ‖∇θ‖²_{H^{m−1}})^{1/2}`.
    Gradient,
}

pub fn functional_b(state: &TcmState, params: &ModelParams, m: f64, variant: BVariant) -> Result<f64> {
    if m < 0.0 {
        return Err(TcmError::NegativeOrder(m));
    }
    let (u, v, th) = (&state.u, &state.v, &state.theta);
    let v_part = sobolev_sq(vec_energy(v, 0.0), vec_energy(v, m));
    let sq = match variant {
        BVariant::Homogeneous => vec_energy(u, m + 1.0) + v_part + th.weighted_energy(m),
        BVariant::Gradient => {
            vec_energy(u, 1.0)
                + vec_energy(u, m + 1.0)
                + v_part
                + th.weighted_energy(1.0)
                + th.weighted_energy(m)
        }
    };
    Ok(params.lambda * sq.sqrt())
}

pub fn functional_x_parts(state: &TcmState, params: &ModelParams, m: f64) -> Result<Squared> {
    if !(m > 1.0) {
        return Err(TcmError::param("m", format!("X needs m > 1, got {m}")));
    }
    let (u, v, th) = (&state.u, &state.v, &state.theta);
    let sum = vec_energy(u, m)
        + vec_energy(v, m)
        + th.weighted_energy(m)
        + vec_energy(u, m - 1.0)
        + vec_energy(v, m - 1.0)
        + th.weighted_energy(m - 1.0);
    Ok(Squared {
        value_sq: sum - params.kappa * cross_term(v, th, m)?,
        sum,
    })
}

/// `X_m`; checks `½X² ≤ Σ' ≤ 2X²` before taking the root.
pub fn functional_x(state: &TcmState, params: &ModelParams, m: f64) -> Result<f64> {
    let p = functional_x_parts(state, params, m)?;
    if p.value_sq < 0.0 {
        return Err(TcmError::NegativeRadicand {
            functional: "X",
            value: p.value_sq,
        });
    }
    let tol = band_tol(p.sum);
    if 0.5 * p.value_sq > p.sum + tol || p.sum > 2.0 * p.value_sq + tol {
        return Err(TcmError::BandViolation {
            functional: "X",
            squared: p.value_sq,
            sum: p.sum,
        });
    }
    Ok(p.value_sq.sqrt())
}

pub fn functional_y(state: &TcmState, params: &ModelParams, m: f64) -> Result<f64> {
    if !(m > 1.0) {
        return Err(TcmError::param("m", format!("Y needs m > 1, got {m}")));
    }
    let (u, v, th) = (&state.u, &state.v, &state.theta);
    let sq = vec_energy(u, m + 1.0)
        + vec_energy(u, m)
        + params.alpha * vec_energy(u, m - 1.0)
        + vec_energy(v, m)
        + vec_energy(v, m - 1.0)
        + th.weighted_energy(m);
    Ok(sq.sqrt())
}

/// `‖u‖_{H^s} + ‖v‖_{H^s} + ‖θ‖_{H^s}`; with damping the `u` slot becomes
/// `(‖Λ^s u‖² + ‖Λu‖²)^{1/2}`.
pub fn stability_sum(state: &TcmState, s: f64, damped: bool) -> f64 {
    let (u, v, th) = (&state.u, &state.v, &state.theta);
    let u_part = if damped {
        vec_energy(u, s) + vec_energy(u, 1.0)
    } else {
        sobolev_sq(vec_energy(u, 0.0), vec_energy(u, s))
    };
    u_part.sqrt()
        + sobolev_sq(vec_energy(v, 0.0), vec_energy(v, s)).sqrt()
        + sobolev_sq(th.weighted_energy(0.0), th.weighted_energy(s)).sqrt()
}

/// `‖Λ^γ f‖` for the named field.
pub fn field_norm(state: &TcmState, field: FieldId, gamma: f64) -> Result<f64> {
    match field {
        FieldId::U => state.u.lambda_norm(gamma),
        FieldId::V => state.v.lambda_norm(gamma),
        FieldId::Theta => state.theta.lambda_norm(gamma),
    }
}

/// Predicted large-time exponent of `‖Λ^γ f(t)‖`.
pub fn theory_exponent(field: FieldId, gamma: f64, damped: bool) -> f64 {
    match (field, damped) {
        (FieldId::U, false) | (FieldId::Theta, _) => -gamma / 2.0,
        (FieldId::U, true) => -(gamma + 4.0) / 2.0,
        (FieldId::V, _) => -(gamma + 1.0) / 2.0,
    }
}

pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares slope of `log y` against `log(1+t)` over `t ∈ [t0, t1]`.
pub fn power_law_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<PowerLawFit> {
    let (t0, t1) = window;
    if !(t0 < t1) {
        return Err(TcmError::InvalidWindow(t0, t1));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, y) in series.iter().filter(|(t, _)| *t >= t0 && *t <= t1) {
        if !(y > 0.0 && y.is_finite()) {
            return Err(TcmError::NonPositiveValue { time: t, value: y });
        }
        xs.push((1.0 + t).ln());
        ys.push(y.ln());
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(TcmError::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            found: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(TcmError::InvalidWindow(t0, t1));
    }
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (my + slope * (x - mx));
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(PowerLawFit {
        exponent: slope,
        intercept: my - slope * mx,
        r_squared,
        samples: xs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub field: FieldId,
    pub gamma: f64,
    pub window: [f64; 2],
    pub exponent: f64,
    pub r_squared: f64,
    pub theory_exponent: f64,
}

impl DecayFit {
    pub fn difference(&self) -> f64 {
        self.exponent - self.theory_exponent
    }
}

/// Fits the decay exponent of one tracked norm and pairs it with the theory.
pub fn decay_fit(
    series: &[(f64, f64)],
    window: (f64, f64),
    field: FieldId,
    gamma: f64,
    damped: bool,
) -> Result<DecayFit> {
    let fit = power_law_fit(series, window)?;
    Ok(DecayFit {
        field,
        gamma,
        window: [window.0, window.1],
        exponent: fit.exponent,
        r_squared: fit.r_squared,
        theory_exponent: theory_exponent(field, gamma, damped),
    })
}

/// Default fit window `[t_end/4, 3 t_end/4]`.
pub fn default_window(t_end: f64) -> (f64, f64) {
    (0.25 * t_end, 0.75 * t_end)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub field: FieldId,
    pub gamma: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValues {
    pub order: f64,
    pub a: f64,
    pub b: f64,
    pub b_grad: f64,
    pub x: f64,
    pub y: f64,
    /// Cross-free squared sum under `A`.
    pub sigma_a: f64,
    /// Cross-free squared sum under `X`.
    pub sigma_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linf {
    pub u: f64,
    pub v: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub norms: Vec<NormValue>,
    pub functionals: Vec<FunctionalValues>,
    /// Cross term at order `s`.
    pub cross_s: f64,
    /// Cross term at order 1.
    pub cross_1: f64,
    pub budget_residual: f64,
    pub dissipation: f64,
    pub energy: f64,
    /// Cumulative `∫ D dt`.
    pub dissipated: f64,
    pub stability_sum: f64,
    pub linf: Linf,
    pub divergence: f64,
    /// Step size used on the interval ending here.
    pub dt: f64,
}

impl DiagnosticsRecord {
    pub fn norm(&self, field: FieldId, gamma: f64) -> Option<f64> {
        self.norms
            .iter()
            .find(|n| n.field == field && n.gamma == gamma)
            .map(|n| n.value)
    }

    pub fn functionals_at(&self, order: f64) -> Option<&FunctionalValues> {
        self.functionals.iter().find(|f| f.order == order)
    }

    /// Named columns in output order.
    pub fn columns(&self) -> Vec<(String, f64)> {
        let mut cols = vec![("t".to_string(), self.time)];
        for n in &self.norms {
            cols.push((norm_column(n.field, n.gamma), n.value));
        }
        for f in &self.functionals {
            let m = format_order(f.order);
            cols.push((format!("A_{m}"), f.a));
            cols.push((format!("B_{m}"), f.b));
            cols.push((format!("X_{m}"), f.x));
            cols.push((format!("Y_{m}"), f.y));
        }
        cols.push(("cross_s".into(), self.cross_s));
        cols.push(("cross_1".into(), self.cross_1));
        cols.push(("budget_residual".into(), self.budget_residual));
        for f in &self.functionals {
            let m = format_order(f.order);
            cols.push((format!("Bgrad_{m}"), f.b_grad));
            cols.push((format!("SigmaA_{m}"), f.sigma_a));
            cols.push((format!("SigmaX_{m}"), f.sigma_x));
        }
        cols.push(("dissipation".into(), self.dissipation));
        cols.push(("energy".into(), self.energy));
        cols.push(("dissipated".into(), self.dissipated));
        cols.push(("stability_sum".into(), self.stability_sum));
        cols.push(("linf_u".into(), self.linf.u));
        cols.push(("linf_v".into(), self.linf.v));
        cols.push(("linf_theta".into(), self.linf.theta));
        cols.push(("divergence".into(), self.divergence));
        cols.push(("dt".into(), self.dt));
        cols
    }
}

/// Evaluates every configured diagnostic on one state.
pub fn evaluate(
    state: &TcmState,
    params: &ModelParams,
    config: &DiagnosticsConfig,
    info: &SampleInfo,
) -> Result<DiagnosticsRecord> {
    let norms = config
        .norms
        .iter()
        .map(|n| {
            Ok(NormValue {
                field: n.field,
                gamma: n.gamma,
                value: field_norm(state, n.field, n.gamma)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let functionals = config
        .orders
        .iter()
        .map(|&m| {
            let pa = functional_a_parts(state, params, m)?;
            let px = functional_x_parts(state, params, m)?;
            Ok(FunctionalValues {
                order: m,
                a: functional_a(state, params, m)?,
                b: functional_b(state, params, m, BVariant::Homogeneous)?,
                b_grad: functional_b(state, params, m, BVariant::Gradient)?,
                x: functional_x(state, params, m)?,
                y: functional_y(state, params, m)?,
                sigma_a: pa.sum,
                sigma_x: px.sum,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let budget = energy_budget(state, params)?;
    Ok(DiagnosticsRecord {
        time: state.time,
        norms,
        functionals,
        cross_s: cross_term(&state.v, &state.theta, params.s)?,
        cross_1: cross_term(&state.v, &state.theta, 1.0)?,
        budget_residual: budget.residual,
        dissipation: budget.dissipation,
        energy: state.energy(),
        dissipated: info.dissipated,
        stability_sum: stability_sum(state, params.s, params.is_damped()),
        linf: Linf {
            u: state.u.linf_norm(),
            v: state.v.linf_norm(),
            theta: state.theta.linf_norm(),
        },
        divergence: state.divergence_ratio(),
        dt: info.dt,
    })
}

/// Consumer of diagnostics records.
pub trait RecordSink {
    fn accept(&mut self, record: &DiagnosticsRecord) -> Result<()>;
}

impl RecordSink for Vec<DiagnosticsRecord> {
    fn accept(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Forwards each record to several sinks in order.
pub struct FanOut<'a>(pub Vec<&'a mut dyn RecordSink>);

impl RecordSink for FanOut<'_> {
    fn accept(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        for sink in self.0.iter_mut() {
            sink.accept(record)?;
        }
        Ok(())
    }
}

fn io_err(e: impl fmt::Display) -> TcmError {
    TcmError::Sink(e.to_string())
}

/// One CSV row per record; the header is taken from the first record.
pub struct CsvSink<W: Write> {
    out: W,
    header: Option<Vec<String>>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W) -> Self {
        Self { out, header: None }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RecordSink for CsvSink<W> {
    fn accept(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        let cols = record.columns();
        match &self.header {
            None => {
                let names: Vec<String> = cols.iter().map(|(n, _)| n.clone()).collect();
                writeln!(self.out, "{}", names.join(",")).map_err(io_err)?;
                self.header = Some(names);
            }
            Some(h) => {
                if h.len() != cols.len() || h.iter().zip(&cols).any(|(a, (b, _))| a != b) {
                    return Err(TcmError::Sink("record columns changed mid-run".into()));
                }
            }
        }
        let row: Vec<String> = cols.iter().map(|(_, v)| format!("{v:e}")).collect();
        writeln!(self.out, "{}", row.join(",")).map_err(io_err)?;
        self.out.flush().map_err(io_err)
    }
}

/// One JSON object per line, keyed by the CSV column names.
pub struct JsonlSink<W: Write> {
    out: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RecordSink for JsonlSink<W> {
    fn accept(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        let map: serde_json::Map<String, serde_json::Value> = record
            .columns()
            .into_iter()
            .map(|(k, v)| (k, serde_json::Value::from(v)))
            .collect();
        serde_json::to_writer(&mut self.out, &map).map_err(io_err)?;
        writeln!(self.out).map_err(io_err)?;
        self.out.flush().map_err(io_err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub order: f64,
    pub intervals: usize,
    /// `(t, increase, tolerance)` for every offending interval.
    pub violations: Vec<(f64, f64, f64)>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `X_m²` does not grow between consecutive samples beyond
/// `10·dt⁴·max(Y²)` on the interval.
pub fn check_x_monotone(records: &[DiagnosticsRecord], order: f64) -> MonotonicityReport {
    let mut violations = Vec::new();
    let mut intervals = 0;
    for w in records.windows(2) {
        let (Some(a), Some(b)) = (w[0].functionals_at(order), w[1].functionals_at(order)) else {
            continue;
        };
        intervals += 1;
        let increase = b.x * b.x - a.x * a.x;
        let tol = 10.0 * w[1].dt.powi(4) * (a.y * a.y).max(b.y * b.y);
        if increase > tol {
            violations.push((w[1].time, increase, tol));
        }
    }
    MonotonicityReport {
        order,
        intervals,
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub order: f64,
    /// Constant frozen from the first quarter of the intervals.
    pub constant: f64,
    pub checked: usize,
    pub violations: Vec<f64>,
}

/// Trapezoid estimate of `½ d/dt A² + B²` against `C (A + A^{s+1}) B²`.
/// `C` is the largest ratio seen on the first quarter of the intervals and
/// is then held fixed for the rest.
pub fn check_energy_envelope(records: &[DiagnosticsRecord], order: f64, s: f64) -> EnvelopeReport {
    let mut pairs = Vec::new();
    for w in records.windows(2) {
        let (Some(a), Some(b)) = (w[0].functionals_at(order), w[1].functionals_at(order)) else {
            continue;
        };
        let h = w[1].time - w[0].time;
        if h <= 0.0 {
            continue;
        }
        let lhs = 0.5 * (b.a * b.a - a.a * a.a) / h + 0.5 * (a.b * a.b + b.b * b.b);
        let f = |x: &FunctionalValues| (x.a + x.a.powf(s + 1.0)) * x.b * x.b;
        let rhs = 0.5 * (f(a) + f(b));
        pairs.push((w[1].time, lhs, rhs));
    }
    let calib = pairs.len().div_ceil(4);
    let constant = pairs[..calib]
        .iter()
        .filter(|(_, _, r)| *r > 0.0)
        .map(|(_, l, r)| l / r)
        .fold(0.0, f64::max);
    let violations = pairs[calib..]
        .iter()
        .filter(|(_, l, r)| *l > constant * r + 1e-12 * r.abs())
        .map(|(t, _, _)| *t)
        .collect();
    EnvelopeReport {
        order,
        constant,
        checked: pairs.len() - calib,
        violations,
    }
}
