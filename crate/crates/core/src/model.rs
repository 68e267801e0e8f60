//! Model parameters, the temperature-dependent viscosity, the semi-discrete
//! right-hand side with the pressure eliminated by Leray projection, and the
//! `L²` energy budget.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TcmError};
use crate::spectral::{SpectralField, SpectralGrid, VectorField};

/// Default viscosity law `μ(θ) = μ̲ + θ²`.
pub fn default_viscosity(theta: f64, mu_lower: f64) -> f64 {
    mu_lower + theta * theta
}

/// Shape of `μ(θ)`; every law is written as `μ̲ + h(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ViscosityLaw {
    /// `μ̲ + c·θ²`
    Quadratic {
        #[serde(default = "one")]
        coeff: f64,
    },
    /// `μ̲`
    Constant,
    /// `μ̲ + a·exp(−θ²)`
    GaussBump { amplitude: f64 },
    /// `μ̲ + c·θ`; violates the floor for `cθ < 0`, only useful for calculus checks.
    Linear { slope: f64 },
}

fn one() -> f64 {
    1.0
}

impl Default for ViscosityLaw {
    fn default() -> Self {
        ViscosityLaw::Quadratic { coeff: 1.0 }
    }
}

impl ViscosityLaw {
    /// `h(θ) = μ(θ) − μ̲`.
    pub fn excess(&self, theta: f64) -> f64 {
        match *self {
            ViscosityLaw::Quadratic { coeff } => coeff * theta * theta,
            ViscosityLaw::Constant => 0.0,
            ViscosityLaw::GaussBump { amplitude } => amplitude * (-theta * theta).exp(),
            ViscosityLaw::Linear { slope } => slope * theta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ViscosityLaw::Quadratic { .. } => "quadratic",
            ViscosityLaw::Constant => "constant",
            ViscosityLaw::GaussBump { .. } => "gauss-bump",
            ViscosityLaw::Linear { .. } => "linear",
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ViscosityLaw::Constant)
    }
}

/// A viscosity law together with its floor `μ̲`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viscosity {
    pub law: ViscosityLaw,
    pub mu_lower: f64,
}

impl Viscosity {
    pub fn value(&self, theta: f64) -> f64 {
        self.mu_lower + self.law.excess(theta)
    }

    /// `μ(0)`, the constant part treated implicitly by the integrator.
    pub fn at_zero(&self) -> f64 {
        self.value(0.0)
    }

    /// `μ(θ)` with the floor enforced.
    pub fn checked(&self, theta: f64) -> Result<f64> {
        let value = self.value(theta);
        if value >= self.mu_lower && value.is_finite() {
            Ok(value)
        } else {
            Err(TcmError::ViscosityFloor {
                theta,
                value,
                floor: self.mu_lower,
            })
        }
    }
}

/// Raw parameter inputs as they appear in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamInputs {
    #[serde(default)]
    pub alpha: f64,
    pub beta: f64,
    pub mu_lower: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default)]
    pub viscosity: ViscosityLaw,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
}

fn default_s() -> f64 {
    1.5
}

/// Validated model parameters with the derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub viscosity: Viscosity,
    pub s: f64,
    pub eta: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub delta1: u8,
}

/// Largest admissible cross-term weight `β/(4+2β²)`.
pub fn eta_max(beta: f64) -> f64 {
    beta / (4.0 + 2.0 * beta * beta)
}

/// Upper bound `min(β/2, 1/β)` for the decay cross-term weight.
pub fn kappa_max(beta: f64) -> f64 {
    (beta / 2.0).min(1.0 / beta)
}

/// Default `κ`: the bound above, clamped strictly below `1/2`.
pub fn kappa_default(beta: f64) -> f64 {
    kappa_max(beta).min(0.499)
}

pub fn derive_lambda(alpha: f64, beta: f64, mu_lower: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(TcmError::param("beta", format!("must be positive, got {beta}")));
    }
    if !(mu_lower > 0.0 && mu_lower.is_finite()) {
        return Err(TcmError::param("mu_lower", format!("must be positive, got {mu_lower}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(TcmError::param("alpha", format!("must be non-negative, got {alpha}")));
    }
    let mut m = mu_lower.min(eta_max(beta));
    if alpha > 0.0 {
        m = m.min(alpha);
    }
    Ok((0.5 * m).sqrt())
}

pub fn derive_delta1(alpha: f64) -> u8 {
    if alpha > 0.0 {
        1
    } else {
        0
    }
}

impl ModelParams {
    pub fn from_inputs(inputs: &ParamInputs) -> Result<Self> {
        let ParamInputs {
            alpha,
            beta,
            mu_lower,
            s,
            viscosity,
            eta,
            kappa,
        } = *inputs;
        let lambda = derive_lambda(alpha, beta, mu_lower)?;
        if !(s > 1.0 && s.is_finite()) {
            return Err(TcmError::param("s", format!("must exceed 1, got {s}")));
        }
        let eta = eta.unwrap_or_else(|| eta_max(beta));
        if !(eta > 0.0 && eta <= eta_max(beta) && eta < 0.25) {
            return Err(TcmError::param(
                "eta",
                format!("must lie in (0, {}], got {eta}", eta_max(beta)),
            ));
        }
        let kappa = kappa.unwrap_or_else(|| kappa_default(beta));
        if !(kappa > 0.0 && kappa <= kappa_max(beta) && kappa < 0.5) {
            return Err(TcmError::param(
                "kappa",
                format!(
                    "must lie in (0, {}] and below 1/2, got {kappa}",
                    kappa_max(beta)
                ),
            ));
        }
        let viscosity = Viscosity { law: viscosity, mu_lower };
        viscosity.checked(0.0)?;
        Ok(Self {
            alpha,
            beta,
            viscosity,
            s,
            eta,
            kappa,
            lambda,
            delta1: derive_delta1(alpha),
        })
    }

    /// Parameters with default weights and the quadratic law.
    pub fn new(alpha: f64, beta: f64, mu_lower: f64, s: f64) -> Result<Self> {
        Self::from_inputs(&ParamInputs {
            alpha,
            beta,
            mu_lower,
            s,
            viscosity: ViscosityLaw::default(),
            eta: None,
            kappa: None,
        })
    }

    pub fn with_law(mut self, law: ViscosityLaw) -> Result<Self> {
        self.viscosity.law = law;
        self.viscosity.checked(0.0)?;
        Ok(self)
    }

    pub fn is_damped(&self) -> bool {
        self.delta1 == 1
    }

    /// Viscosity coefficient of the implicit part, `μ(0)`.
    pub fn mu0(&self) -> f64 {
        self.viscosity.at_zero()
    }
}

/// `(u, v, θ)` at one instant.
#[derive(Debug, Clone)]
pub struct TcmState {
    pub u: VectorField,
    pub v: VectorField,
    pub theta: SpectralField,
    pub time: f64,
}

/// Time derivatives of the three fields.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub u: VectorField,
    pub v: VectorField,
    pub theta: SpectralField,
}

impl TcmState {
    pub fn new(u: VectorField, v: VectorField, theta: SpectralField, time: f64) -> Result<Self> {
        u.x.ensure_same_grid(&v.x)?;
        u.x.ensure_same_grid(&theta)?;
        Ok(Self { u, v, theta, time })
    }

    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            u: VectorField::zeros(grid),
            v: VectorField::zeros(grid),
            theta: SpectralField::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.theta.grid()
    }

    /// Dealiases all fields and re-projects `u` onto divergence-free fields.
    pub fn sanitize(&mut self) {
        self.u.dealias_in_place();
        self.u.leray_project_in_place();
        self.v.dealias_in_place();
        self.theta.dealias_in_place();
    }

    /// `‖div u‖ / ‖u‖` measured on the spectral divergence (0 for `u = 0`).
    pub fn divergence_ratio(&self) -> f64 {
        let norm = self.u.lambda_norm(1.0).unwrap_or(0.0);
        if norm == 0.0 {
            return 0.0;
        }
        self.u.divergence().l2_norm() / norm
    }

    /// `½(‖u‖² + ‖v‖² + ‖θ‖²)`.
    pub fn energy(&self) -> f64 {
        0.5 * (self.u.weighted_energy(0.0)
            + self.v.weighted_energy(0.0)
            + self.theta.weighted_energy(0.0))
    }

    pub fn first_non_finite(&self) -> Option<&'static str> {
        if !self.u.is_finite() {
            Some("u")
        } else if !self.v.is_finite() {
            Some("v")
        } else if !self.theta.is_finite() {
            Some("theta")
        } else {
            None
        }
    }
}

impl Tendency {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            u: VectorField::zeros(grid),
            v: VectorField::zeros(grid),
            theta: SpectralField::zeros(grid),
        }
    }
}

#[inline]
fn times_ik(c: Complex64, k: f64) -> Complex64 {
    Complex64::new(-c.im * k, c.re * k)
}

/// Output of one explicit evaluation.
#[derive(Debug, Clone)]
pub struct ExplicitTerms {
    /// Everything except the diagonal linear part `−(μ(0)|k|² + α)û`, `−βv̂`.
    pub tendency: Tendency,
    /// `∫μ(θ)|∇u|² + α‖u‖² + β‖v‖²` evaluated on the grid.
    pub dissipation: f64,
}

/// Linear decay rates of the diagonal part, per mode, for `u` and `v`.
pub fn linear_rates(grid: &SpectralGrid, params: &ModelParams) -> (Vec<f64>, f64) {
    let mu0 = params.mu0();
    let u_rate = grid
        .k_abs_all()
        .iter()
        .map(|k| mu0 * k * k + params.alpha)
        .collect();
    (u_rate, params.beta)
}

fn field(grid: &Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> SpectralField {
    SpectralField::from_coeffs(grid, coeffs).expect("coefficient length matches grid")
}

/// Evaluates the explicit part of the right-hand side:
///
/// ```text
/// N_u = P div[−u⊗u + (μ(θ)−μ(0))∇u − v⊗v]
/// N_v = −(u·∇)v − (v·∇)u + ∇θ
/// N_θ = −u·∇θ + div v
/// ```
///
/// Products are formed on the grid and dealiased after the forward transform.
/// The momentum flux uses `div u = 0`, so `u` is expected to be solenoidal.
pub fn explicit_terms(state: &TcmState, params: &ModelParams) -> Result<ExplicitTerms> {
    let grid = Arc::clone(state.grid());
    let len = grid.len();

    let kxy = grid.diff_wavevectors();
    let zero = Complex64::default();
    let dx = |c: Complex64, i: usize| times_ik(c, kxy[i].0);
    let dy = |c: Complex64, i: usize| times_ik(c, kxy[i].1);

    let (ux, uy) = (state.u.x.coeffs(), state.u.y.coeffs());
    let (vx, vy) = (state.v.x.coeffs(), state.v.y.coeffs());
    let th = state.theta.coeffs();

    let values = |a: &[Complex64], b: &[Complex64]| grid.backward_pair_pointwise(|i| (a[i], b[i]));
    let gradient = |c: &[Complex64]| grid.backward_pair_pointwise(|i| (dx(c[i], i), dy(c[i], i)));
    let (pux, puy) = values(ux, uy);
    let (pvx, pvy) = values(vx, vy);
    let (uxx, uxy) = gradient(ux);
    let (uyx, pth) = grid.backward_pair_pointwise(|i| (dx(uy[i], i), th[i]));
    let (vxx, vxy) = gradient(vx);
    let (vyx, vyy) = gradient(vy);
    let (thx, thy) = gradient(th);

    let visc = &params.viscosity;
    let mu0 = visc.at_zero();
    let constant_law = visc.law.is_constant();

    let mut gxx = Vec::with_capacity(len);
    let mut gxy = Vec::with_capacity(len);
    let mut gyx = Vec::with_capacity(len);
    let mut gyy = Vec::with_capacity(len);
    let mut nvx = Vec::with_capacity(len);
    let mut nvy = Vec::with_capacity(len);
    let mut nth = Vec::with_capacity(len);
    let mut viscous = 0.0;
    for i in 0..len {
        let (a, b) = (pux[i], puy[i]);
        let (p, q) = (pvx[i], pvy[i]);
        let (axx, axy, ayx) = (uxx[i], uxy[i], uyx[i]);
        let ayy = -axx;
        let mu = if constant_law { mu0 } else { visc.checked(pth[i])? };
        let dmu = mu - mu0;
        gxx.push(dmu * axx - a * a - p * p);
        gxy.push(dmu * axy - a * b - p * q);
        gyx.push(dmu * ayx - b * a - q * p);
        gyy.push(dmu * ayy - b * b - q * q);
        nvx.push(-(a * vxx[i] + b * vxy[i] + p * axx + q * axy));
        nvy.push(-(a * vyx[i] + b * vyy[i] + p * ayx + q * ayy));
        nth.push(-(a * thx[i] + b * thy[i]));
        viscous += mu * (axx * axx + axy * axy + ayx * ayx + ayy * ayy);
    }
    viscous *= grid.cell_area();

    let (cgxx, cgxy) = grid.forward_pair_pointwise(&gxx, &gxy);
    let (cgyx, cgyy) = grid.forward_pair_pointwise(&gyx, &gyy);
    let (cnvx, cnvy) = grid.forward_pair_pointwise(&nvx, &nvy);
    let (cnth, _) = grid.forward_pair_pointwise(&nth, &vec![0.0; len]);

    let mut nu_x = vec![zero; len];
    let mut nu_y = vec![zero; len];
    let mut nv_x = vec![zero; len];
    let mut nv_y = vec![zero; len];
    let mut n_th = vec![zero; len];
    for i in 0..len {
        if !grid.in_mask(i) {
            continue;
        }
        nu_x[i] = dx(cgxx[i], i) + dy(cgxy[i], i);
        nu_y[i] = dx(cgyx[i], i) + dy(cgyy[i], i);
        nv_x[i] = cnvx[i] + dx(th[i], i);
        nv_y[i] = cnvy[i] + dy(th[i], i);
        n_th[i] = cnth[i] + dx(vx[i], i) + dy(vy[i], i);
    }

    let mut u = VectorField::new(field(&grid, nu_x), field(&grid, nu_y))?;
    u.leray_project_in_place();
    let v = VectorField::new(field(&grid, nv_x), field(&grid, nv_y))?;
    let theta = field(&grid, n_th);

    let dissipation = viscous
        + params.alpha * state.u.weighted_energy(0.0)
        + params.beta * state.v.weighted_energy(0.0);
    Ok(ExplicitTerms {
        tendency: Tendency { u, v, theta },
        dissipation,
    })
}

/// Full tendency `(du/dt, dv/dt, dθ/dt)`.
pub fn rhs(state: &TcmState, params: &ModelParams) -> Result<Tendency> {
    Ok(rhs_with_dissipation(state, params)?.0)
}

pub(crate) fn rhs_with_dissipation(
    state: &TcmState,
    params: &ModelParams,
) -> Result<(Tendency, f64)> {
    let ExplicitTerms {
        mut tendency,
        dissipation,
    } = explicit_terms(state, params)?;
    let (u_rate, v_rate) = linear_rates(state.grid(), params);
    let (tu, su) = (&mut tendency.u, &state.u);
    for (i, rate) in u_rate.iter().enumerate() {
        tu.x.coeffs_mut()[i] -= su.x.coeffs()[i] * rate;
        tu.y.coeffs_mut()[i] -= su.y.coeffs()[i] * rate;
    }
    tendency.v.axpy(-v_rate, &state.v);
    Ok((tendency, dissipation))
}

/// Dissipation rate `∫μ(θ)|∇u|² + α‖u‖² + β‖v‖²`.
pub fn dissipation_rate(state: &TcmState, params: &ModelParams) -> Result<f64> {
    Ok(explicit_terms(state, params)?.dissipation)
}

/// Defect of the `L²` energy identity,
/// `⟨u,u_t⟩ + ⟨v,v_t⟩ + ⟨θ,θ_t⟩ + ∫μ(θ)|∇u|² + α‖u‖² + β‖v‖²`.
pub fn energy_budget_residual(state: &TcmState, params: &ModelParams) -> Result<f64> {
    Ok(energy_budget(state, params)?.residual)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    pub residual: f64,
    pub dissipation: f64,
}

pub fn energy_budget(state: &TcmState, params: &ModelParams) -> Result<EnergyBudget> {
    let (t, dissipation) = rhs_with_dissipation(state, params)?;
    let rate = state.u.inner_product(&t.u)?
        + state.v.inner_product(&t.v)?
        + state.theta.inner_product(&t.theta)?;
    Ok(EnergyBudget {
        residual: rate + dissipation,
        dissipation,
    })
}
