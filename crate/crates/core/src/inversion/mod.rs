//! Iterative inversion of the linearized channel.
//!
//! Every scheme works on the quadratic
//!
//! ```text
//! f(x) = ½‖Φ_L x − y_lin‖² + (λ/2)‖x‖²,   ∇f(x) = Φ_Lᵀ(Φ_L x − y_lin) + λx
//! ```
//!
//! where `y_lin = y^gamma` is the observation with the camera response
//! undone. Residuals are reported in the same linear domain:
//! `‖y_lin − Φ_L x‖ / ‖y_lin‖` (absolute when `y_lin = 0`).

mod linalg;
mod schemes;

pub use linalg::{conjugate_gradient, power_method, POWER_ITERATIONS};
pub use schemes::{admm_step, heavyball_step, nag_step, prirr_step};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{convolve2, Field2D};
use crate::optics::{linearize, LinearChannel, OpticsConfig, WallObservation, INVERSE_CLAMP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Prirr,
    Admm,
    Nag,
    #[serde(alias = "heavy_ball")]
    Heavyball,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Prirr, Scheme::Admm, Scheme::Nag, Scheme::Heavyball];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Prirr => "prirr",
            Scheme::Admm => "admm",
            Scheme::Nag => "nag",
            Scheme::Heavyball => "heavyball",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prirr" => Ok(Scheme::Prirr),
            "admm" => Ok(Scheme::Admm),
            "nag" => Ok(Scheme::Nag),
            "heavyball" | "heavy_ball" | "heavy-ball" => Ok(Scheme::Heavyball),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// `None` picks a step from the power-method Lipschitz estimate.
    pub step_size: Option<f64>,
    pub momentum_beta: f64,
    pub admm_rho: f64,
    pub reg_lambda: f64,
    pub gate_gamma: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Wiener regularizer inside Ψ.
    pub psi_reg: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            scheme: Scheme::Prirr,
            step_size: None,
            momentum_beta: 0.5,
            admm_rho: 1e-3,
            reg_lambda: 0.0,
            gate_gamma: 10.0,
            max_iters: 200,
            tol: 1e-6,
            psi_reg: 1e-6,
        }
    }
}

impl SchemeConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        SchemeConfig {
            scheme,
            ..SchemeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(eta) = self.step_size {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::config("step_size", format!("must be > 0, got {eta}")));
            }
        }
        if !(0.0..1.0).contains(&self.momentum_beta) {
            return Err(Error::config("momentum_beta", "must lie in [0, 1)"));
        }
        if !(self.admm_rho > 0.0 && self.admm_rho.is_finite()) {
            return Err(Error::config("admm_rho", "must be > 0"));
        }
        if !(self.reg_lambda >= 0.0 && self.reg_lambda.is_finite()) {
            return Err(Error::config("reg_lambda", "must be ≥ 0"));
        }
        if !(self.gate_gamma >= 0.0 && self.gate_gamma.is_finite()) {
            return Err(Error::config("gate_gamma", "must be ≥ 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters", "must be ≥ 1"));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::config("tol", "must be ≥ 0"));
        }
        if !(self.psi_reg > 0.0 && self.psi_reg.is_finite()) {
            return Err(Error::config("psi_reg", "must be > 0"));
        }
        Ok(())
    }
}

/// One iterate of any scheme.
///
/// `momentum` is `m` for PRIRR and the last displacement `x − x⁻` for NAG
/// and Heavy-Ball; `aux` holds the ADMM split variable and scaled dual
/// `(z, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub estimate: Field2D,
    pub momentum: Field2D,
    pub k: usize,
    pub residual_history: Vec<f64>,
    pub aux: Option<(Field2D, Field2D)>,
}

impl IterateState {
    /// A fresh state at `estimate` with zero momentum.
    pub fn new(estimate: Field2D) -> Self {
        let (h, w) = estimate.dims();
        IterateState {
            estimate,
            momentum: Field2D::zeros(h, w),
            k: 0,
            residual_history: Vec::new(),
            aux: None,
        }
    }

    pub fn with_momentum(mut self, momentum: Field2D) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn with_aux(mut self, z: Field2D, u: Field2D) -> Self {
        self.aux = Some((z, u));
        self
    }

    pub fn last_residual(&self) -> Option<f64> {
        self.residual_history.last().copied()
    }

    fn advance(&self, estimate: Field2D, momentum: Field2D, residual: f64) -> IterateState {
        let mut history = self.residual_history.clone();
        history.push(residual);
        IterateState {
            estimate,
            momentum,
            k: self.k + 1,
            residual_history: history,
            aux: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult {
    pub final_estimate: Field2D,
    pub iterations_run: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}

/// A fixed observation together with the known linear channel.
#[derive(Debug, Clone)]
pub struct InversionProblem {
    channel: LinearChannel,
    y_lin: Field2D,
    y_norm: f64,
}

impl InversionProblem {
    pub fn new(obs: &WallObservation, optics: &OpticsConfig, psi_reg: f64) -> Result<Self> {
        let y_lin = linearize(obs.irradiance(), optics);
        let channel = LinearChannel::new(optics, y_lin.dims(), psi_reg)?;
        Ok(Self::from_parts(channel, y_lin))
    }

    /// Uses `y_lin` as already-linearized data.
    pub fn from_parts(channel: LinearChannel, y_lin: Field2D) -> Self {
        assert_eq!(channel.dims(), y_lin.dims(), "channel/data dimension mismatch");
        let y_norm = y_lin.norm();
        InversionProblem { channel, y_lin, y_norm }
    }

    pub fn channel(&self) -> &LinearChannel {
        &self.channel
    }

    pub fn y_lin(&self) -> &Field2D {
        &self.y_lin
    }

    pub fn dims(&self) -> (usize, usize) {
        self.y_lin.dims()
    }

    fn check(&self, state: &IterateState) -> Result<()> {
        state
            .estimate
            .ensure_same_dims(&self.y_lin, "estimate vs observation")?;
        state
            .momentum
            .ensure_same_dims(&self.y_lin, "momentum vs observation")?;
        if let Some((z, u)) = &state.aux {
            z.ensure_same_dims(&self.y_lin, "ADMM split variable vs observation")?;
            u.ensure_same_dims(&self.y_lin, "ADMM dual vs observation")?;
        }
        Ok(())
    }

    /// `y_lin − Φ_L x`.
    pub fn data_residual(&self, x: &Field2D) -> Field2D {
        self.y_lin.sub(&self.channel.forward(x))
    }

    pub fn relative_residual(&self, x: &Field2D) -> f64 {
        let r = self.data_residual(x).norm();
        if self.y_norm > 0.0 {
            r / self.y_norm
        } else {
            r
        }
    }

    pub fn objective(&self, x: &Field2D, reg_lambda: f64) -> f64 {
        0.5 * self.data_residual(x).norm_sq() + 0.5 * reg_lambda * x.norm_sq()
    }

    pub fn gradient(&self, x: &Field2D, reg_lambda: f64) -> Field2D {
        let mut g = self.channel.adjoint(&self.data_residual(x).scale(-1.0));
        if reg_lambda > 0.0 {
            g.axpy(reg_lambda, x);
        }
        g
    }

    /// Physics-feedback residual `Ψ_L(y_lin − Φ_L x)` in source space.
    pub fn feedback_residual(&self, x: &Field2D) -> Field2D {
        self.channel.inverse_linear(&self.data_residual(x))
    }

    /// Clamped Ψ applied to the observation.
    pub fn inverse_estimate(&self) -> Field2D {
        let (lo, hi) = INVERSE_CLAMP;
        self.channel.inverse_linear(&self.y_lin).clamp(lo, hi)
    }

    /// Largest eigenvalue of `Φ_LᵀΦ_L + λI`, the Lipschitz constant of ∇f.
    pub fn lipschitz(&self, reg_lambda: f64) -> f64 {
        power_method(self.dims(), |v| self.channel.normal(v)) + reg_lambda
    }

    /// Dominant eigenvalue magnitude of the feedback map `Ψ_L Φ_L`.
    pub fn feedback_gain(&self) -> f64 {
        power_method(self.dims(), |v| self.channel.inverse_linear(&self.channel.forward(v)))
    }

    /// The configured step, or the automatic one: `0.9 / L` for the gradient
    /// schemes and the critically damped `(1 − √β) / ((1 + √β) · L_Ψ)` for
    /// PRIRR. ADMM takes no step.
    pub fn step_size(&self, scfg: &SchemeConfig) -> f64 {
        if let Some(eta) = scfg.step_size {
            return eta;
        }
        match scfg.scheme {
            Scheme::Prirr => {
                let sb = scfg.momentum_beta.sqrt();
                (1.0 - sb) / ((1.0 + sb) * self.feedback_gain())
            }
            Scheme::Nag | Scheme::Heavyball => 0.9 / self.lipschitz(scfg.reg_lambda),
            Scheme::Admm => 1.0,
        }
    }

    /// Initial state for `scheme` at `x0`.
    pub fn initial_state(&self, x0: Field2D, scheme: Scheme) -> Result<IterateState> {
        x0.ensure_same_dims(&self.y_lin, "initial estimate vs observation")?;
        Ok(match scheme {
            Scheme::Prirr => {
                let m0 = convolve2(&self.feedback_residual(&x0), &smoothing_kernel())?;
                IterateState::new(x0).with_momentum(m0)
            }
            Scheme::Admm => {
                let (h, w) = x0.dims();
                let z = x0.clone();
                IterateState::new(x0).with_aux(z, Field2D::zeros(h, w))
            }
            Scheme::Nag | Scheme::Heavyball => IterateState::new(x0),
        })
    }
}

/// Normalized 3×3 binomial kernel used to smooth the initial momentum.
pub fn smoothing_kernel() -> Field2D {
    let k = [1.0, 2.0, 1.0];
    Field2D::from_fn(3, 3, |r, c| k[r] * k[c] / 16.0)
}

/// Advances `state` by one step of the configured scheme.
pub fn step(state: &IterateState, problem: &InversionProblem, scfg: &SchemeConfig, eta: f64) -> Result<IterateState> {
    match scfg.scheme {
        Scheme::Prirr => prirr_step(state, problem, scfg, eta),
        Scheme::Admm => admm_step(state, problem, scfg),
        Scheme::Nag => nag_step(state, problem, scfg, eta),
        Scheme::Heavyball => heavyball_step(state, problem, scfg, eta),
    }
}

/// Runs `scfg.scheme` from `initial` (default: clamped Ψ(y)) until the
/// relative residual reaches `tol` or `max_iters` steps have been taken.
/// At least one step is always taken.
pub fn run_inversion(
    obs: &WallObservation,
    optics: &OpticsConfig,
    scfg: &SchemeConfig,
    initial: Option<&Field2D>,
) -> Result<InversionResult> {
    scfg.validate()?;
    let problem = InversionProblem::new(obs, optics, scfg.psi_reg)?;
    run_problem(&problem, scfg, initial)
}

pub fn run_problem(
    problem: &InversionProblem,
    scfg: &SchemeConfig,
    initial: Option<&Field2D>,
) -> Result<InversionResult> {
    scfg.validate()?;
    let x0 = match initial {
        Some(x) => x.clone(),
        None => problem.inverse_estimate(),
    };
    let eta = problem.step_size(scfg);
    let mut state = problem.initial_state(x0, scfg.scheme)?;
    let mut converged = false;
    while state.k < scfg.max_iters {
        state = step(&state, problem, scfg, eta)?;
        if state.last_residual().is_some_and(|r| r <= scfg.tol) {
            converged = true;
            break;
        }
    }
    Ok(InversionResult {
        iterations_run: state.k,
        converged,
        residual_history: state.residual_history,
        final_estimate: state.estimate,
    })
}
