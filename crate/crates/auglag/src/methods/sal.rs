//! Stochastic augmented Lagrangian training: mini-batch minimization of
//! L_ρ(θ, λ) with multiplier ascent gated on sufficient decrease of the
//! constraint violation and penalty escalation on failure.

use alloc::vec::Vec;

use rand::Rng;

use crate::constraint::ConstraintSystem;
use crate::data::{epoch_plan, Batch, Dataset};
use crate::metrics::{self, CvOrder};
use crate::objective::{Objective, ObjectiveError};
use crate::params::ParamVector;
use crate::solver::{SolverConfig, SolverState};

use super::fp::{all_finite, diverged};
use super::state::{SalAssessment, SalConfig, SalController};
use super::{aug_lagrangian_value_grad, share_bounds, snapshot_row, MethodError};

/// Train with the stochastic augmented Lagrangian loop:
///
/// * C_best ← C(θ₀), λ ← 0;
/// * each shuffle re-permutes the data, restarts the penalty at
///   min((s+1)·μ_init, μ_max) and resets the learning-rate schedule,
///   carrying λ across;
/// * each of the n_aug_lag iterations runs one SGD pass over its
///   contiguous share of the shuffle's batches, then evaluates C(θ)
///   exactly and either performs the multiplier update (on sufficient
///   decrease, keeping μ) or escalates μ (keeping λ);
/// * on sufficient decrease the run terminates once the full-set
///   fidelity is within ε_f and the squared violation within ε_c —
///   tested before the multiplier update touches λ.
///
/// One trace row is recorded per shuffle (plus the epoch-0 row).
#[allow(clippy::too_many_arguments)]
pub fn sal_train<O, S, R>(
    obj: &O,
    system: &S,
    cfg: &SalConfig,
    solver_cfg: SolverConfig,
    data: &Dataset,
    theta0: ParamVector,
    cv_order: CvOrder,
    rng: &mut R,
) -> Result<super::TrainingRecord, MethodError>
where
    O: Objective + ?Sized,
    S: ConstraintSystem + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut theta = theta0;
    let mut solver = SolverState::new(solver_cfg, theta.len())?;
    let full_idx = data.all_indices();

    let c0 = system.evaluate(&theta)?;
    let cv0 = metrics::cv(&c0, cv_order)?;
    let mut ctl = SalController::new(cfg, &c0)?;

    let mut rows = Vec::with_capacity(cfg.n_shuffle + 1);
    rows.push(snapshot_row(
        0,
        obj,
        system,
        &theta,
        data,
        &full_idx,
        cv_order,
        cv0,
        0.0,
        cfg.mu_init,
        solver.lr(),
    )?);

    let mut termination = super::Termination::Completed;
    'shuffles: for s in 0..cfg.n_shuffle {
        ctl.begin_shuffle(s);
        solver.reset_lr();
        let plan = epoch_plan(data.len(), cfg.n_batch, rng);
        let batches: Vec<&[usize]> = plan.batches().collect();

        for k in 0..cfg.n_aug_lag {
            let (lo, hi) = share_bounds(batches.len(), cfg.n_aug_lag, k);
            for idxs in &batches[lo..hi] {
                let (value, grad) = match aug_lagrangian_value_grad(
                    obj,
                    system,
                    &theta,
                    Batch::new(data, idxs),
                    ctl.state(),
                ) {
                    Ok(vg) => vg,
                    Err(MethodError::Objective(ObjectiveError::NonFiniteLoss)) => {
                        return Ok(diverged(rows, theta, cv0, s + 1))
                    }
                    Err(e) => return Err(e),
                };
                if !value.is_finite() || !all_finite(&grad) {
                    return Ok(diverged(rows, theta, cv0, s + 1));
                }
                solver.step(&mut theta, &grad)?;
            }

            // Exact violation on the full parameters; the fidelity term
            // is only needed when sufficient decrease holds.
            let c = system.evaluate(&theta)?;
            if !c.squared_norm().is_finite() {
                return Ok(diverged(rows, theta, cv0, s + 1));
            }
            let full_fidelity = if ctl.state().sufficient_decrease(&c, cfg.eta) {
                match obj.value_grad(&theta, Batch::new(data, &full_idx)) {
                    Ok((f, _)) => f,
                    Err(ObjectiveError::NonFiniteLoss) => {
                        return Ok(diverged(rows, theta, cv0, s + 1))
                    }
                    Err(e) => return Err(e.into()),
                }
            } else {
                f64::INFINITY
            };
            if let SalAssessment::Accepted { terminated: true } = ctl.assess(&c, full_fidelity)? {
                termination = super::Termination::Converged {
                    shuffle: s,
                    iteration: k,
                };
                rows.push(snapshot_row(
                    s + 1,
                    obj,
                    system,
                    &theta,
                    data,
                    &full_idx,
                    cv_order,
                    cv0,
                    ctl.state().lambda_inf_norm(),
                    ctl.state().penalty(),
                    solver.lr(),
                )?);
                break 'shuffles;
            }
        }

        match snapshot_row(
            s + 1,
            obj,
            system,
            &theta,
            data,
            &full_idx,
            cv_order,
            cv0,
            ctl.state().lambda_inf_norm(),
            ctl.state().penalty(),
            solver.lr(),
        ) {
            Ok(row) => rows.push(row),
            Err(MethodError::Objective(ObjectiveError::NonFiniteLoss)) => {
                return Ok(diverged(rows, theta, cv0, s + 1))
            }
            Err(e) => return Err(e),
        }
        solver.decay_epoch();
    }

    Ok(super::TrainingRecord {
        rows,
        theta,
        termination,
        cv0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{ConstraintKind, ConstraintSet, ConstraintSpec, Target};
    use crate::data::synth_gaussians;
    use crate::methods::Termination;
    use crate::objective::QuadraticObjective;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn base_cfg() -> SalConfig {
        SalConfig {
            eta: 0.9,
            eps_f: 1e-8,
            eps_c: 1e-8,
            mu_init: 1.0,
            sigma: 2.0,
            mu_max: 100.0,
            n_batch: 8,
            n_shuffle: 4,
            n_aug_lag: 2,
        }
    }

    #[test]
    fn already_satisfied_constraints_terminate_at_first_check() {
        // NonNegativity holds at the optimum θ = b ≥ 0 from the start and
        // F(θ0) = 0, so the very first assessment terminates.
        let data = synth_gaussians(6, 2, 2, 1.0, 5);
        let obj = QuadraticObjective::new(vec![1.0, 0.0, 0.0, 1.0], vec![0.5, 1.0]).unwrap();
        let set = ConstraintSet::new(vec![ConstraintSpec::new(
            ConstraintKind::NonNegativity,
            Target::All,
        )]);
        let theta0 = ParamVector::flat("t", vec![0.5, 1.0]);
        let mut cfg = base_cfg();
        cfg.eps_f = 1e10;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = sal_train(
            &obj,
            &set,
            &cfg,
            SolverConfig::sgd(0.1),
            &data,
            theta0.clone(),
            CvOrder::P(2.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(
            rec.termination,
            Termination::Converged {
                shuffle: 0,
                iteration: 0
            }
        );
        // Gradient was zero throughout the first share, so θ* = θ0.
        assert_eq!(rec.theta.values(), theta0.values());
    }

    #[test]
    fn lambda_carries_across_shuffles_and_penalty_restarts() {
        // L2 constraint pulls θ toward 0 against the objective optimum at
        // b; multipliers accumulate over shuffles.
        let data = synth_gaussians(8, 2, 2, 1.0, 9);
        let obj = QuadraticObjective::new(vec![1.0, 0.0, 0.0, 1.0], vec![2.0, -1.0]).unwrap();
        let set = ConstraintSet::new(vec![ConstraintSpec::new(ConstraintKind::L2, Target::All)]);
        let theta0 = ParamVector::flat("t", vec![2.0, -1.0]);
        let mut cfg = base_cfg();
        cfg.n_shuffle = 3;
        cfg.eps_c = 0.0;
        cfg.eps_f = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rec = sal_train(
            &obj,
            &set,
            &cfg,
            SolverConfig::sgd(0.02),
            &data,
            theta0,
            CvOrder::P(2.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(rec.termination, Termination::Completed);
        assert_eq!(rec.rows.len(), 4);
        // λ moved at least once (violation shrinks as θ is pulled to 0).
        let lambda_final = rec.rows.last().unwrap().lambda_inf;
        assert!(lambda_final > 0.0);
        // Penalty column never exceeds the cap.
        assert!(rec.rows.iter().all(|r| r.penalty <= cfg.mu_max));
    }

    #[test]
    fn divergent_learning_rate_aborts_with_diagnostic_record() {
        let data = synth_gaussians(8, 2, 2, 1.0, 9);
        let obj = QuadraticObjective::new(vec![4.0, 0.0, 0.0, 4.0], vec![1.0, 1.0]).unwrap();
        let set = ConstraintSet::new(vec![ConstraintSpec::new(ConstraintKind::L2, Target::All)]);
        let theta0 = ParamVector::flat("t", vec![1e3, 1e3]);
        let mut cfg = base_cfg();
        cfg.mu_init = 1e4;
        cfg.mu_max = 1e4;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rec = sal_train(
            &obj,
            &set,
            &cfg,
            SolverConfig::sgd(10.0),
            &data,
            theta0,
            CvOrder::P(2.0),
            &mut rng,
        )
        .unwrap();
        assert!(matches!(rec.termination, Termination::Diverged { .. }));
    }
}
