use super::{conjugate_gradient, InversionProblem, IterateState, SchemeConfig};
use crate::error::{Error, Result};
use crate::numerics::Field2D;

/// Inner CG iterations for the ADMM x-update when the warp breaks the
/// Fourier diagonalization.
pub const ADMM_CG_ITERS: usize = 10;

/// Residual-gated momentum step on the physics-feedback residual.
///
/// ```text
/// r  = Ψ_L(y_lin − Φ_L x)
/// g  = exp(−γ ρ²)               ρ = relative residual of x
/// m⁺ = β m + (1 − β) r
/// x⁺ = x + η (g m⁺ + (1 − g) r)
/// ```
///
/// The step ignores `reg_lambda`: its fixed points are the exact data fits.
pub fn prirr_step(
    state: &IterateState,
    problem: &InversionProblem,
    scfg: &SchemeConfig,
    eta: f64,
) -> Result<IterateState> {
    problem.check(state)?;
    let x = &state.estimate;
    let r = problem.feedback_residual(x);
    let rho = match state.last_residual() {
        Some(rho) => rho,
        None => problem.relative_residual(x),
    };
    let g = gate(scfg.gate_gamma, rho);
    let beta = scfg.momentum_beta;
    let m_next = state.momentum.zip_map(&r, |m, ri| beta * m + (1.0 - beta) * ri);
    let dir = m_next.zip_map(&r, |m, ri| ri + g * (m - ri));
    let mut x_next = x.clone();
    x_next.axpy(eta, &dir);
    let res = problem.relative_residual(&x_next);
    Ok(state.advance(x_next, m_next, res))
}

/// `exp(−γ ρ²)`.
pub fn gate(gamma: f64, rho: f64) -> f64 {
    (-gamma * rho * rho).exp()
}

/// `x⁺ = x − η ∇f(x) + β (x − x⁻)`.
pub fn heavyball_step(
    state: &IterateState,
    problem: &InversionProblem,
    scfg: &SchemeConfig,
    eta: f64,
) -> Result<IterateState> {
    problem.check(state)?;
    let x = &state.estimate;
    let grad = problem.gradient(x, scfg.reg_lambda);
    let beta = scfg.momentum_beta;
    let step = grad.zip_map(&state.momentum, |g, d| -eta * g + beta * d);
    Ok(finish_inertial(state, problem, x.add(&step)))
}

/// Nesterov: gradient taken at the lookahead `z = x + β (x − x⁻)`,
/// `x⁺ = z − η ∇f(z)`.
pub fn nag_step(
    state: &IterateState,
    problem: &InversionProblem,
    scfg: &SchemeConfig,
    eta: f64,
) -> Result<IterateState> {
    problem.check(state)?;
    let x = &state.estimate;
    let beta = scfg.momentum_beta;
    let z = x.zip_map(&state.momentum, |xi, d| xi + beta * d);
    let grad = problem.gradient(&z, scfg.reg_lambda);
    Ok(finish_inertial(state, problem, z.zip_map(&grad, |zi, g| zi - eta * g)))
}

fn finish_inertial(state: &IterateState, problem: &InversionProblem, x_next: Field2D) -> IterateState {
    let displacement = x_next.sub(&state.estimate);
    let res = problem.relative_residual(&x_next);
    state.advance(x_next, displacement, res)
}

/// Scaled-form ADMM for `min ½‖Φ_L x − y‖² + (λ/2)‖z‖²` s.t. `x = z`:
///
/// ```text
/// x⁺ = (Φ_LᵀΦ_L + ρI)⁻¹ (Φ_Lᵀ y + ρ (z − u))
/// z⁺ = ρ (x⁺ + u) / (λ + ρ)
/// u⁺ = u + x⁺ − z⁺
/// ```
///
/// The x-update is exact in the Fourier domain when there is no warp and
/// uses [`ADMM_CG_ITERS`] warm-started CG iterations otherwise.
pub fn admm_step(state: &IterateState, problem: &InversionProblem, scfg: &SchemeConfig) -> Result<IterateState> {
    problem.check(state)?;
    let rho = scfg.admm_rho;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("ADMM penalty must be > 0, got {rho}")));
    }
    let (h, w) = problem.dims();
    let (z, u) = match &state.aux {
        Some((z, u)) => (z.clone(), u.clone()),
        None => (state.estimate.clone(), Field2D::zeros(h, w)),
    };
    let ch = problem.channel();
    let mut rhs = ch.adjoint(problem.y_lin());
    rhs.axpy(rho, &z.sub(&u));
    let x = if ch.is_circulant() {
        let s2 = ch.scale() * ch.scale();
        ch.blur().filter_with(&rhs, |hk| 1.0 / (s2 * hk * hk + rho))
    } else {
        conjugate_gradient(
            |v| {
                let mut a = ch.normal(v);
                a.axpy(rho, v);
                a
            },
            &rhs,
            &state.estimate,
            ADMM_CG_ITERS,
        )
    };
    let shrink = rho / (scfg.reg_lambda + rho);
    let z_next = x.zip_map(&u, |xi, ui| shrink * (xi + ui));
    let u_next = u.add(&x).sub(&z_next);
    let res = problem.relative_residual(&x);
    let mut next = state.advance(x, state.momentum.clone(), res);
    next.aux = Some((z_next, u_next));
    Ok(next)
}
