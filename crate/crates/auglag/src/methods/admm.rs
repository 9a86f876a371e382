//! Deterministic ADMM with variable splitting θ = μ and scaled
//! multipliers u.

use alloc::vec;
use alloc::vec::Vec;

use crate::constraint::ProxSystem;
use crate::fmath;
use crate::objective::FullObjective;
use crate::params::ParamVector;
use crate::solver::minimize_backtracking;

use super::{InnerSolve, MethodError};

/// Form of the scaled-multiplier update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualStep {
    /// u ← u + ρ(θ − μ). The default; matches the update this artifact's
    /// sources state for the scaled form.
    #[default]
    ScaledByRho,
    /// u ← u + (θ − μ), the conventional scaled-form update (the two
    /// coincide at ρ = 1).
    Conventional,
}

impl DualStep {
    pub(crate) fn factor(self, rho: f64) -> f64 {
        match self {
            DualStep::ScaledByRho => rho,
            DualStep::Conventional => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    pub rho: f64,
    pub outer_iters: usize,
    pub dual_step: DualStep,
    pub inner: InnerSolve,
}

impl AdmmConfig {
    pub fn new(rho: f64, outer_iters: usize) -> Self {
        Self {
            rho,
            outer_iters,
            dual_step: DualStep::default(),
            inner: InnerSolve::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdmmSolution {
    pub theta: ParamVector,
    pub mu: ParamVector,
    pub u: Vec<f64>,
    /// ‖θ − μ‖₂ at exit.
    pub primal_residual: f64,
}

/// Alternate the three ADMM steps for `outer_iters` rounds from
/// θ = μ = `theta0`, u = 0:
/// θ-step minimizes F(θ) + (ρ/2)‖θ − μ + u‖² to `inner.grad_tol`;
/// μ-step applies the constraint system's proximal maps to θ + u;
/// u-step accumulates the scaled residual per `dual_step`.
pub fn admm_solve<O, P>(
    obj: &O,
    set: &P,
    theta0: &ParamVector,
    cfg: &AdmmConfig,
) -> Result<AdmmSolution, MethodError>
where
    O: FullObjective + ?Sized,
    P: ProxSystem + ?Sized,
{
    if !cfg.rho.is_finite() || cfg.rho <= 0.0 {
        return Err(MethodError::InvalidConfig(alloc::format!(
            "rho must be positive, got {}",
            cfg.rho
        )));
    }
    let rho = cfg.rho;
    let dual_factor = cfg.dual_step.factor(rho);
    let mut theta = theta0.clone();
    let mut mu = theta0.clone();
    let mut u = vec![0.0; theta.len()];

    for _ in 0..cfg.outer_iters {
        let mut scratch = theta.clone();
        let mu_vals = mu.values().to_vec();
        let u_vals = u.clone();
        let f_step = |x: &[f64]| -> Result<(f64, Vec<f64>), MethodError> {
            scratch.values_mut().copy_from_slice(x);
            let (f, mut grad) = obj.value_grad_full(&scratch)?;
            let mut value = f;
            for j in 0..x.len() {
                let d = x[j] - mu_vals[j] + u_vals[j];
                value += 0.5 * rho * d * d;
                grad[j] += rho * d;
            }
            if !value.is_finite() {
                return Err(MethodError::InnerSolveDiverged);
            }
            Ok((value, grad))
        };
        let (x, _) = minimize_backtracking(
            f_step,
            theta.values().to_vec(),
            cfg.inner.grad_tol,
            cfg.inner.max_iters,
        )?;
        theta.values_mut().copy_from_slice(&x);

        let mut v = theta.clone();
        for (vj, &uj) in v.values_mut().iter_mut().zip(&u) {
            *vj += uj;
        }
        mu = set.prox_apply(&v, rho)?;

        for ((uj, &tj), &mj) in u.iter_mut().zip(theta.values()).zip(mu.values()) {
            *uj += dual_factor * (tj - mj);
        }
    }

    let primal_residual = fmath::sqrt(
        theta
            .values()
            .iter()
            .zip(mu.values())
            .map(|(t, m)| (t - m) * (t - m))
            .sum::<f64>(),
    );
    Ok(AdmmSolution {
        theta,
        mu,
        u,
        primal_residual,
    })
}
