//! Constraint-enforcement methods: fixed penalty, deterministic ALM and
//! ADMM, and their stochastic counterparts.

use alloc::string::String;
use alloc::vec::Vec;

use crate::constraint::{ConstraintError, ConstraintSystem, ConstraintValue};
use crate::data::{Batch, Dataset};
use crate::metrics::{self, CvOrder, MetricsError};
use crate::objective::{Objective, ObjectiveError};
use crate::params::ParamVector;
use crate::solver::SolverError;

mod admm;
mod alm;
mod fp;
mod record;
mod sadmm;
mod sal;
mod state;

pub use admm::{admm_solve, AdmmConfig, AdmmSolution, DualStep};
pub use alm::alm_solve;
pub use fp::{fp_train, FpConfig};
pub use record::{EpochRow, Termination, TrainingRecord};
pub use sadmm::{sadmm_train, SadmmConfig};
pub use sal::sal_train;
pub use state::{MultiplierState, SalAssessment, SalConfig, SalController};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MethodError {
    #[error("inner solve diverged: loss became non-finite")]
    InnerSolveDiverged,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid method config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Tolerances for the deterministic inner minimizations (ALM subproblem,
/// ADMM θ-step).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSolve {
    /// Stop once the gradient 2-norm falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for InnerSolve {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iters: 50_000,
        }
    }
}

/// L_ρ(θ, λ) = F(θ; batch) + ⟨λ, C(θ)⟩ + (ρ/2)‖C(θ)‖², with gradient
/// ∇F + Jᵀ(λ + ρ·C(θ)).
pub fn aug_lagrangian_value_grad<O, S>(
    obj: &O,
    system: &S,
    theta: &ParamVector,
    batch: Batch<'_>,
    ms: &MultiplierState,
) -> Result<(f64, Vec<f64>), MethodError>
where
    O: Objective + ?Sized,
    S: ConstraintSystem + ?Sized,
{
    let (f, mut grad) = obj.value_grad(theta, batch)?;
    let c = system.evaluate(theta)?;
    let lambda = ms.lambda();
    if c.len() != lambda.len() {
        return Err(MethodError::LengthMismatch {
            expected: lambda.len(),
            got: c.len(),
        });
    }
    let rho = ms.penalty();
    let mut value = f;
    let mut weights = Vec::with_capacity(c.len());
    for (&l, &ci) in lambda.iter().zip(c.entries()) {
        value += l * ci + 0.5 * rho * ci * ci;
        weights.push(l + rho * ci);
    }
    let jt = c.jacobian_transpose_apply(&weights)?;
    for (g, j) in grad.iter_mut().zip(&jt) {
        *g += j;
    }
    Ok((value, grad))
}

/// Expand per-spec weights to per-entry weights using the evaluated
/// value's spec spans.
pub(crate) fn expand_per_entry(
    c: &ConstraintValue,
    per_spec: &[f64],
) -> Result<Vec<f64>, MethodError> {
    let ranges = c.spec_ranges();
    if ranges.len() != per_spec.len() {
        return Err(MethodError::LengthMismatch {
            expected: ranges.len(),
            got: per_spec.len(),
        });
    }
    let mut out = alloc::vec![0.0; c.len()];
    for (&(start, end), &w) in ranges.iter().zip(per_spec) {
        for o in &mut out[start..end] {
            *o = w;
        }
    }
    Ok(out)
}

/// Full-training-set metrics snapshot for one trace row. Returns the row
/// plus the raw fidelity loss so callers can reuse it for termination
/// tests and divergence guards.
#[allow(clippy::too_many_arguments)]
pub(crate) fn snapshot_row<O, S>(
    epoch: usize,
    obj: &O,
    system: &S,
    theta: &ParamVector,
    data: &Dataset,
    full_idx: &[usize],
    cv_order: CvOrder,
    cv0: f64,
    lambda_inf: f64,
    penalty: f64,
    lr: f64,
) -> Result<EpochRow, MethodError>
where
    O: Objective + ?Sized,
    S: ConstraintSystem + ?Sized,
{
    let batch = Batch::new(data, full_idx);
    let (loss, _) = obj.value_grad(theta, batch)?;
    let c = system.evaluate(theta)?;
    let cv_p = metrics::cv(&c, cv_order)?;
    let cv_rel = if cv0 > 0.0 { Some(cv_p / cv0) } else { None };
    let accuracy = obj.predict(theta, Batch::new(data, full_idx)).map(|preds| {
        metrics::accuracy(&preds, data.labels()).expect("predictions cover the dataset")
    });
    Ok(EpochRow {
        epoch,
        loss,
        cv_p,
        cv_rel,
        accuracy,
        lambda_inf,
        penalty,
        lr,
    })
}

/// Contiguous share `k` of `n_items` split `n_shares` ways: items
/// `[k·n/K, (k+1)·n/K)`. The shares partition the range exactly.
pub(crate) fn share_bounds(n_items: usize, n_shares: usize, k: usize) -> (usize, usize) {
    (k * n_items / n_shares, (k + 1) * n_items / n_shares)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{ConstraintKind, ConstraintSet, ConstraintSpec, Target};
    use crate::data::Dataset;
    use crate::objective::QuadraticObjective;

    fn one_point_dataset(d: usize) -> Dataset {
        Dataset::new(alloc::vec![0.0; d], d, alloc::vec![0], 1).unwrap()
    }

    #[test]
    fn aug_lagrangian_reduces_to_objective_without_multipliers() {
        let obj = QuadraticObjective::new(alloc::vec![1.0, 0.0, 0.0, 1.0], alloc::vec![1.0, -2.0])
            .unwrap();
        let set = ConstraintSet::new(alloc::vec![ConstraintSpec::new(
            ConstraintKind::L2,
            Target::All,
        )]);
        let theta = ParamVector::flat("t", alloc::vec![0.5, 0.5]);
        let data = one_point_dataset(2);
        let idx = [0usize];
        let ms = MultiplierState::new(1, 0.0);
        let (value, _) =
            aug_lagrangian_value_grad(&obj, &set, &theta, Batch::new(&data, &idx), &ms).unwrap();
        let (f, _) = obj.value_grad(&theta, Batch::new(&data, &idx)).unwrap();
        assert_eq!(value, f);
    }

    #[test]
    fn aug_lagrangian_feasible_theta_keeps_value_at_f() {
        // NonNegativity on strictly positive θ: C(θ) = 0, so the value is
        // exactly F and the gradient is ∇F + Jᵀλ = ∇F (J has zero rows).
        let obj = QuadraticObjective::new(alloc::vec![1.0, 0.0, 0.0, 1.0], alloc::vec![0.0, 0.0])
            .unwrap();
        let set = ConstraintSet::new(alloc::vec![ConstraintSpec::new(
            ConstraintKind::NonNegativity,
            Target::All,
        )]);
        let theta = ParamVector::flat("t", alloc::vec![1.0, 2.0]);
        let data = one_point_dataset(2);
        let idx = [0usize];
        let mut ms = MultiplierState::new(2, 3.0);
        ms.multiplier_update(&set.evaluate(&theta).unwrap())
            .unwrap();
        let (value, grad) =
            aug_lagrangian_value_grad(&obj, &set, &theta, Batch::new(&data, &idx), &ms).unwrap();
        let (f, gf) = obj.value_grad(&theta, Batch::new(&data, &idx)).unwrap();
        assert_eq!(value, f);
        assert_eq!(grad, gf);
    }

    #[test]
    fn aug_lagrangian_lambda_dimension_check() {
        let obj = QuadraticObjective::new(alloc::vec![1.0, 0.0, 0.0, 1.0], alloc::vec![0.0, 0.0])
            .unwrap();
        let set = ConstraintSet::new(alloc::vec![ConstraintSpec::new(
            ConstraintKind::NonNegativity,
            Target::All,
        )]);
        let theta = ParamVector::flat("t", alloc::vec![1.0, 2.0]);
        let data = one_point_dataset(2);
        let idx = [0usize];
        let ms = MultiplierState::new(5, 1.0);
        assert!(matches!(
            aug_lagrangian_value_grad(&obj, &set, &theta, Batch::new(&data, &idx), &ms),
            Err(MethodError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn expand_per_entry_follows_spec_spans() {
        let theta = ParamVector::flat("w", alloc::vec![-1.0, 1.0]);
        let set = ConstraintSet::new(alloc::vec![
            ConstraintSpec::new(ConstraintKind::L2, Target::All),
            ConstraintSpec::new(ConstraintKind::NonNegativity, Target::All),
        ]);
        let c = set.evaluate(&theta).unwrap();
        let w = expand_per_entry(&c, &[0.5, 7.0]).unwrap();
        assert_eq!(w, alloc::vec![0.5, 7.0, 7.0]);
        assert!(expand_per_entry(&c, &[1.0]).is_err());
    }

    #[test]
    fn share_bounds_partition_everything() {
        for n in [0usize, 1, 5, 16, 17] {
            for shares in [1usize, 2, 3, 7] {
                let mut covered = 0;
                for k in 0..shares {
                    let (s, e) = share_bounds(n, shares, k);
                    assert!(s <= e && e <= n);
                    assert_eq!(s, covered);
                    covered = e;
                }
                assert_eq!(covered, n);
            }
        }
    }
}
