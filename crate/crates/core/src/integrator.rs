//! Time stepping. The diagonal stiff part (`μ(0)Δ − α` on `u`, `−β` on `v`) is
//! integrated exactly with an integrating factor; everything else, including
//! the viscosity remainder `div((μ(θ)−μ(0))∇u)` and the `v`–`θ` coupling, is
//! explicit.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{evaluate, DiagnosticsConfig, RecordSink};
use crate::error::{Result, TcmError};
use crate::model::{explicit_terms, linear_rates, ModelParams, TcmState, Tendency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Integrating-factor (Lawson) fourth-order Runge–Kutta.
    #[default]
    IfRk4,
    /// First-order semi-implicit Euler; reference path for cross-checks.
    ImexEuler,
}

/// Fixed step or CFL-controlled step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStep {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl TimeStep {
    pub const AUTO: TimeStep = TimeStep::Auto(AutoTag::Auto);
}

impl Default for TimeStep {
    fn default() -> Self {
        TimeStep::AUTO
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    #[serde(default)]
    pub dt: TimeStep,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    pub sample_every: f64,
    #[serde(default)]
    pub scheme: Scheme,
}

fn default_cfl() -> f64 {
    0.5
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(TcmError::param("dt", format!("must be positive, got {dt}")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(TcmError::param("cfl", format!("must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(TcmError::param("t_end", format!("must be non-negative, got {}", self.t_end)));
        }
        if !(self.sample_every > 0.0 && self.sample_every.is_finite()) {
            return Err(TcmError::param(
                "sample_every",
                format!("must be positive, got {}", self.sample_every),
            ));
        }
        Ok(())
    }
}

pub const MIN_DT: f64 = 1e-8;

/// CFL-type step bound
/// `cfl / (k_max(‖u‖∞+‖v‖∞) + k_max² max|μ(θ)−μ(0)| + β + α + k_max)`,
/// floored at [`MIN_DT`].
pub fn stable_dt(state: &TcmState, params: &ModelParams, cfl: f64) -> Result<f64> {
    let grid = state.grid();
    let k_max = grid.k_max();
    let speed = state.u.linf_norm() + state.v.linf_norm();
    let mu0 = params.mu0();
    let excess = if params.viscosity.law.is_constant() {
        0.0
    } else {
        state
            .theta
            .to_physical()
            .iter()
            .map(|&th| (params.viscosity.value(th) - mu0).abs())
            .fold(0.0, f64::max)
    };
    let denom = k_max * speed + k_max * k_max * excess + params.beta + params.alpha + k_max;
    let dt = cfl / denom;
    if !dt.is_finite() {
        return Err(TcmError::BlowUp {
            time: state.time,
            field: state.first_non_finite().unwrap_or("state"),
        });
    }
    Ok(dt.max(MIN_DT))
}

/// Per-mode integrating factors for one step size.
#[derive(Debug, Clone)]
struct Factors {
    h: f64,
    u_full: Vec<f64>,
    u_half: Vec<f64>,
    v_full: f64,
    v_half: f64,
}

/// Reusable stepper holding the integrating factors for the last step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: ModelParams,
    scheme: Scheme,
    u_rate: Vec<f64>,
    v_rate: f64,
    factors: Option<Factors>,
}

/// Result of one step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: TcmState,
    /// `∫ D dt` over the step, by the scheme's own quadrature.
    pub dissipated: f64,
}

fn scale_u(t: &mut Tendency, f: &[f64]) {
    for (i, &fi) in f.iter().enumerate() {
        t.u.x.coeffs_mut()[i] *= fi;
        t.u.y.coeffs_mut()[i] *= fi;
    }
}

/// `E y` for the diagonal factor `E`.
fn apply(state: &TcmState, f_u: &[f64], f_v: f64) -> TcmState {
    let mut out = state.clone();
    for (i, &fi) in f_u.iter().enumerate() {
        out.u.x.coeffs_mut()[i] *= fi;
        out.u.y.coeffs_mut()[i] *= fi;
    }
    out.v = out.v.scaled(f_v);
    out
}

/// `y += a · k`.
fn add_scaled(y: &mut TcmState, a: f64, k: &Tendency) {
    y.u.axpy(a, &k.u);
    y.v.axpy(a, &k.v);
    y.theta.axpy(a, &k.theta);
}

fn add_tendency(a: &mut Tendency, s: f64, b: &Tendency) {
    a.u.axpy(s, &b.u);
    a.v.axpy(s, &b.v);
    a.theta.axpy(s, &b.theta);
}

impl Stepper {
    pub fn new(params: &ModelParams, grid: &crate::spectral::SpectralGrid, scheme: Scheme) -> Self {
        let (u_rate, v_rate) = linear_rates(grid, params);
        Self {
            params: params.clone(),
            scheme,
            u_rate,
            v_rate,
            factors: None,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn factors(&mut self, h: f64) -> &Factors {
        if self.factors.as_ref().map(|f| f.h) != Some(h) {
            self.factors = Some(Factors {
                h,
                u_full: self.u_rate.iter().map(|r| (-r * h).exp()).collect(),
                u_half: self.u_rate.iter().map(|r| (-r * h * 0.5).exp()).collect(),
                v_full: (-self.v_rate * h).exp(),
                v_half: (-self.v_rate * h * 0.5).exp(),
            });
        }
        self.factors.as_ref().expect("factors just set")
    }

    /// Advances `state` by `h`; output is dealiased and Leray re-projected.
    pub fn step(&mut self, state: &TcmState, h: f64) -> Result<StepOutput> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(TcmError::param("dt", format!("must be positive, got {h}")));
        }
        let stepped = match self.scheme {
            Scheme::IfRk4 => self.lawson_rk4(state, h),
            Scheme::ImexEuler => self.imex_euler(state, h),
        };
        let (mut next, dissipated) = stepped.map_err(|e| match e {
            TcmError::ViscosityFloor { theta, .. } if !theta.is_finite() => TcmError::BlowUp {
                time: state.time,
                field: "theta",
            },
            other => other,
        })?;
        next.sanitize();
        next.time = state.time + h;
        if let Some(field) = next.first_non_finite() {
            return Err(TcmError::BlowUp {
                time: next.time,
                field,
            });
        }
        Ok(StepOutput {
            state: next,
            dissipated,
        })
    }

    fn lawson_rk4(&mut self, y: &TcmState, h: f64) -> Result<(TcmState, f64)> {
        let params = self.params.clone();
        let f = self.factors(h).clone();

        let e1 = explicit_terms(y, &params)?;
        let mut a = y.clone();
        add_scaled(&mut a, 0.5 * h, &e1.tendency);
        let a = apply(&a, &f.u_half, f.v_half);

        let e2 = explicit_terms(&a, &params)?;
        let half_y = apply(y, &f.u_half, f.v_half);
        let mut b = half_y.clone();
        add_scaled(&mut b, 0.5 * h, &e2.tendency);

        let e3 = explicit_terms(&b, &params)?;
        let mut k3 = e3.tendency.clone();
        scale_u(&mut k3, &f.u_half);
        k3.v = k3.v.scaled(f.v_half);
        let mut c = apply(y, &f.u_full, f.v_full);
        add_scaled(&mut c, h, &k3);

        let e4 = explicit_terms(&c, &params)?;

        // E_h k1 + 2 E_{h/2}(k2 + k3) + k4
        let mut k1 = e1.tendency;
        scale_u(&mut k1, &f.u_full);
        k1.v = k1.v.scaled(f.v_full);
        let mut mid = e2.tendency;
        add_tendency(&mut mid, 1.0, &e3.tendency);
        scale_u(&mut mid, &f.u_half);
        mid.v = mid.v.scaled(f.v_half);
        add_tendency(&mut k1, 2.0, &mid);
        add_tendency(&mut k1, 1.0, &e4.tendency);

        let mut next = apply(y, &f.u_full, f.v_full);
        add_scaled(&mut next, h / 6.0, &k1);
        let dissipated = h / 6.0
            * (e1.dissipation + 2.0 * e2.dissipation + 2.0 * e3.dissipation + e4.dissipation);
        Ok((next, dissipated))
    }

    fn imex_euler(&mut self, y: &TcmState, h: f64) -> Result<(TcmState, f64)> {
        let e = explicit_terms(y, &self.params)?;
        let mut next = y.clone();
        add_scaled(&mut next, h, &e.tendency);
        let inv_u: Vec<f64> = self.u_rate.iter().map(|r| 1.0 / (1.0 + h * r)).collect();
        let next = apply(&next, &inv_u, 1.0 / (1.0 + h * self.v_rate));
        Ok((next, h * e.dissipation))
    }
}

/// One integrating-factor RK4 step.
pub fn step(state: &TcmState, params: &ModelParams, dt: f64) -> Result<TcmState> {
    let mut stepper = Stepper::new(params, state.grid(), Scheme::IfRk4);
    Ok(stepper.step(state, dt)?.state)
}

/// Bookkeeping passed along with every sampled state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleInfo {
    pub index: usize,
    /// Step size used on the interval that ended at this sample (0 initially).
    pub dt: f64,
    pub steps: usize,
    /// Cumulative `∫ D dt` since the start of the run.
    pub dissipated: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: TcmState,
    pub steps: usize,
    pub samples: usize,
    pub dissipated: f64,
}

/// Integrates to `t_end`, handing the state to `on_sample` at `t0`, at every
/// multiple of `sample_every`, and at `t_end`. Step sizes are adjusted so that
/// each sample time is hit exactly.
pub fn integrate(
    initial: &TcmState,
    params: &ModelParams,
    config: &StepperConfig,
    mut on_sample: impl FnMut(&TcmState, &SampleInfo) -> Result<()>,
) -> Result<RunOutcome> {
    config.validate()?;
    let mut stepper = Stepper::new(params, initial.grid(), config.scheme);
    let t0 = initial.time;
    let mut state = initial.clone();
    state.sanitize();
    let mut info = SampleInfo {
        index: 0,
        dt: 0.0,
        steps: 0,
        dissipated: 0.0,
    };
    on_sample(&state, &info)?;

    let intervals = (config.t_end / config.sample_every - 1e-9).ceil().max(0.0) as usize;
    for k in 1..=intervals {
        let target = t0 + (k as f64 * config.sample_every).min(config.t_end);
        let span = target - state.time;
        if span <= 0.0 {
            continue;
        }
        let nominal = match config.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto(_) => stable_dt(&state, params, config.cfl)?,
        };
        let n_steps = ((span / nominal) - 1e-9).ceil().max(1.0) as usize;
        let h = span / n_steps as f64;
        for _ in 0..n_steps {
            let out = stepper.step(&state, h)?;
            state = out.state;
            info.dissipated += out.dissipated;
        }
        state.time = target;
        info.index = k;
        info.dt = h;
        info.steps += n_steps;
        on_sample(&state, &info)?;
    }
    Ok(RunOutcome {
        state,
        steps: info.steps,
        samples: info.index + 1,
        dissipated: info.dissipated,
    })
}

/// Integrates and emits a diagnostics record to `sink` at every sample.
pub fn run(
    initial: &TcmState,
    params: &ModelParams,
    config: &StepperConfig,
    diagnostics: &DiagnosticsConfig,
    sink: &mut dyn RecordSink,
) -> Result<RunOutcome> {
    integrate(initial, params, config, |state, info| {
        let record = evaluate(state, params, diagnostics, info)?;
        sink.accept(&record)
    })
}
