//! Fixed penalty training: minimize F(θ) + Σ_i ρ_i·c_i(θ)² by
//! mini-batch SGD/Adam with the penalty coefficients held fixed.

use alloc::vec::Vec;

use rand::Rng;

use crate::constraint::ConstraintSet;
use crate::data::{epoch_plan, Batch, Dataset};
use crate::metrics::{self, CvOrder};
use crate::objective::{Objective, ObjectiveError};
use crate::params::ParamVector;
use crate::solver::{SolverConfig, SolverState};

use super::record::{EpochRow, Termination, TrainingRecord};
use super::{expand_per_entry, snapshot_row, MethodError};

/// One penalty coefficient per constraint spec; a spec's coefficient
/// applies to every entry it contributes.
#[derive(Debug, Clone, PartialEq)]
pub struct FpConfig {
    pub rho_per_constraint: Vec<f64>,
}

impl FpConfig {
    pub fn uniform(rho: f64, n_specs: usize) -> Self {
        Self {
            rho_per_constraint: alloc::vec![rho; n_specs],
        }
    }

    fn validate(&self, n_specs: usize) -> Result<(), MethodError> {
        if self.rho_per_constraint.len() != n_specs {
            return Err(MethodError::LengthMismatch {
                expected: n_specs,
                got: self.rho_per_constraint.len(),
            });
        }
        if self
            .rho_per_constraint
            .iter()
            .any(|r| !r.is_finite() || *r < 0.0)
        {
            return Err(MethodError::InvalidConfig(
                "penalty coefficients must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

/// Mark a diverged run, keeping the rows recorded so far.
pub(crate) fn diverged(
    rows: Vec<EpochRow>,
    theta: ParamVector,
    cv0: f64,
    epoch: usize,
) -> TrainingRecord {
    TrainingRecord {
        rows,
        theta,
        termination: Termination::Diverged { epoch },
        cv0,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn fp_train<O, R>(
    obj: &O,
    set: &ConstraintSet,
    fp: &FpConfig,
    solver_cfg: SolverConfig,
    data: &Dataset,
    theta0: ParamVector,
    epochs: usize,
    n_batch: usize,
    cv_order: CvOrder,
    rng: &mut R,
) -> Result<TrainingRecord, MethodError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    fp.validate(set.n_specs())?;
    if n_batch == 0 {
        return Err(MethodError::InvalidConfig("n_batch must be ≥ 1".into()));
    }
    let mut theta = theta0;
    let mut solver = SolverState::new(solver_cfg, theta.len())?;
    let full_idx = data.all_indices();

    let c0 = set.evaluate_value(&theta)?;
    let cv0 = metrics::cv(&c0, cv_order)?;
    let penalty_col = fp
        .rho_per_constraint
        .iter()
        .fold(0.0f64, |acc, &r| if r > acc { r } else { acc });

    let mut rows = Vec::with_capacity(epochs + 1);
    rows.push(snapshot_row(
        0,
        obj,
        set,
        &theta,
        data,
        &full_idx,
        cv_order,
        cv0,
        0.0,
        penalty_col,
        solver.lr(),
    )?);

    for epoch in 1..=epochs {
        let plan = epoch_plan(data.len(), n_batch, rng);
        for idxs in plan.batches() {
            let (f, mut grad) = match obj.value_grad(&theta, Batch::new(data, idxs)) {
                Ok(fg) => fg,
                Err(ObjectiveError::NonFiniteLoss) => return Ok(diverged(rows, theta, cv0, epoch)),
                Err(e) => return Err(e.into()),
            };
            let c = set.evaluate_value(&theta)?;
            let mut weights = expand_per_entry(&c, &fp.rho_per_constraint)?;
            let mut penalized = f;
            for (w, &ci) in weights.iter_mut().zip(c.entries()) {
                penalized += *w * ci * ci;
                *w = 2.0 * *w * ci;
            }
            if !penalized.is_finite() || !all_finite(&grad) {
                return Ok(diverged(rows, theta, cv0, epoch));
            }
            let jt = c.jacobian_transpose_apply(&weights)?;
            for (g, j) in grad.iter_mut().zip(&jt) {
                *g += j;
            }
            solver.step(&mut theta, &grad)?;
        }
        solver.decay_epoch();
        match snapshot_row(
            epoch,
            obj,
            set,
            &theta,
            data,
            &full_idx,
            cv_order,
            cv0,
            0.0,
            penalty_col,
            solver.lr(),
        ) {
            Ok(row) => rows.push(row),
            Err(MethodError::Objective(ObjectiveError::NonFiniteLoss)) => {
                return Ok(diverged(rows, theta, cv0, epoch))
            }
            Err(e) => return Err(e),
        }
    }

    Ok(TrainingRecord {
        rows,
        theta,
        termination: Termination::Completed,
        cv0,
    })
}
