//! Deterministic augmented Lagrangian method: full inner minimization of
//! L_ρ(θ, λ) alternating with multiplier ascent at fixed penalty.

use alloc::vec::Vec;

use crate::constraint::ConstraintSystem;
use crate::objective::FullObjective;
use crate::params::ParamVector;
use crate::solver::minimize_backtracking;

use super::state::MultiplierState;
use super::{InnerSolve, MethodError};

/// Run `outer_iters` rounds of (inner minimize to `inner.grad_tol`,
/// multiplier update) from `theta0` with λ = 0. Returns the final
/// iterates (θ*, λ*).
pub fn alm_solve<O, S>(
    obj: &O,
    system: &S,
    theta0: &ParamVector,
    rho: f64,
    outer_iters: usize,
    inner: InnerSolve,
) -> Result<(ParamVector, Vec<f64>), MethodError>
where
    O: FullObjective + ?Sized,
    S: ConstraintSystem + ?Sized,
{
    if !rho.is_finite() || rho <= 0.0 {
        return Err(MethodError::InvalidConfig(alloc::format!(
            "rho must be positive, got {rho}"
        )));
    }
    let mut theta = theta0.clone();
    let c0 = system.evaluate(&theta)?;
    let mut ms = MultiplierState::new(c0.len(), rho);

    for _ in 0..outer_iters {
        let mut scratch = theta.clone();
        let lambda = ms.lambda().to_vec();
        let f_aug = |x: &[f64]| -> Result<(f64, Vec<f64>), MethodError> {
            scratch.values_mut().copy_from_slice(x);
            let (f, mut grad) = obj.value_grad_full(&scratch)?;
            let c = system.evaluate(&scratch)?;
            let mut value = f;
            let mut weights = Vec::with_capacity(c.len());
            for (&l, &ci) in lambda.iter().zip(c.entries()) {
                value += l * ci + 0.5 * rho * ci * ci;
                weights.push(l + rho * ci);
            }
            if !value.is_finite() {
                return Err(MethodError::InnerSolveDiverged);
            }
            let jt = c.jacobian_transpose_apply(&weights)?;
            for (g, j) in grad.iter_mut().zip(&jt) {
                *g += j;
            }
            Ok((value, grad))
        };
        let (x, _) = minimize_backtracking(
            f_aug,
            theta.values().to_vec(),
            inner.grad_tol,
            inner.max_iters,
        )?;
        theta.values_mut().copy_from_slice(&x);
        let c = system.evaluate(&theta)?;
        ms.multiplier_update(&c)?;
    }
    let lambda = ms.lambda().to_vec();
    Ok((theta, lambda))
}
