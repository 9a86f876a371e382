//! Stochastic ADMM: a linearized θ-step in closed form per mini-batch,
//! followed by the proximal μ-step and the scaled multiplier update.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::constraint::ConstraintSet;
use crate::data::{epoch_plan, Batch, Dataset};
use crate::fmath;
use crate::metrics::{self, CvOrder};
use crate::objective::{Objective, ObjectiveError};
use crate::params::ParamVector;

use super::admm::DualStep;
use super::fp::{all_finite, diverged};
use super::{snapshot_row, MethodError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SadmmConfig {
    pub rho: f64,
    /// Base step size; step k uses η^k = η₀/√(k+1) with k counting
    /// mini-batches globally.
    pub eta0: f64,
    pub epochs: usize,
    pub n_batch: usize,
    pub dual_step: DualStep,
}

impl SadmmConfig {
    pub fn new(rho: f64, eta0: f64, epochs: usize, n_batch: usize) -> Self {
        Self {
            rho,
            eta0,
            epochs,
            n_batch,
            dual_step: DualStep::default(),
        }
    }

    fn validate(&self) -> Result<(), MethodError> {
        if !self.rho.is_finite() || self.rho <= 0.0 {
            return Err(MethodError::InvalidConfig(alloc::format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if !self.eta0.is_finite() || self.eta0 <= 0.0 {
            return Err(MethodError::InvalidConfig(alloc::format!(
                "eta0 must be positive, got {}",
                self.eta0
            )));
        }
        if self.n_batch == 0 {
            return Err(MethodError::InvalidConfig("n_batch must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Closed-form θ-step for one constrained coordinate: the minimizer of
/// the linearized augmented Lagrangian,
/// (θ/η + ρ(μ − u) − ∇F) / (1/η + ρ).
pub(crate) fn linearized_theta_step(
    theta: f64,
    grad: f64,
    mu: f64,
    u: f64,
    eta: f64,
    rho: f64,
) -> f64 {
    (theta / eta + rho * (mu - u) - grad) / (1.0 / eta + rho)
}

/// Train by stochastic ADMM. Only coordinates targeted by some
/// constraint take the split update; the rest take plain SGD steps with
/// the same decaying η^k.
pub fn sadmm_train<O, R>(
    obj: &O,
    set: &ConstraintSet,
    cfg: &SadmmConfig,
    data: &Dataset,
    theta0: ParamVector,
    cv_order: CvOrder,
    rng: &mut R,
) -> Result<super::TrainingRecord, MethodError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut theta = theta0;
    let mask = set.constrained_mask(&theta)?;
    let mut mu = theta.clone();
    let mut u = vec![0.0; theta.len()];
    let dual_factor = cfg.dual_step.factor(cfg.rho);
    let full_idx = data.all_indices();

    let c0 = set.evaluate_value(&theta)?;
    let cv0 = metrics::cv(&c0, cv_order)?;

    let mut rows = Vec::with_capacity(cfg.epochs + 1);
    rows.push(snapshot_row(
        0, obj, set, &theta, data, &full_idx, cv_order, cv0, 0.0, cfg.rho, cfg.eta0,
    )?);

    let mut k: u64 = 0;
    let mut eta = cfg.eta0;
    for epoch in 1..=cfg.epochs {
        let plan = epoch_plan(data.len(), cfg.n_batch, rng);
        for idxs in plan.batches() {
            let (f, grad) = match obj.value_grad(&theta, Batch::new(data, idxs)) {
                Ok(fg) => fg,
                Err(ObjectiveError::NonFiniteLoss) => return Ok(diverged(rows, theta, cv0, epoch)),
                Err(e) => return Err(e.into()),
            };
            if !f.is_finite() || !all_finite(&grad) {
                return Ok(diverged(rows, theta, cv0, epoch));
            }
            eta = cfg.eta0 / fmath::sqrt((k + 1) as f64);
            {
                let mu_vals = mu.values();
                let vals = theta.values_mut();
                for j in 0..vals.len() {
                    if mask[j] {
                        vals[j] =
                            linearized_theta_step(vals[j], grad[j], mu_vals[j], u[j], eta, cfg.rho);
                    } else {
                        vals[j] -= eta * grad[j];
                    }
                }
            }
            let mut v = theta.clone();
            for (vj, &uj) in v.values_mut().iter_mut().zip(&u) {
                *vj += uj;
            }
            mu = set.prox_apply(&v, cfg.rho)?;
            for ((uj, &tj), &mj) in u.iter_mut().zip(theta.values()).zip(mu.values()) {
                *uj += dual_factor * (tj - mj);
            }
            k += 1;
        }
        let lambda_inf = u
            .iter()
            .fold(0.0f64, |acc, &x| fmath::fmax(acc, fmath::abs(cfg.rho * x)));
        match snapshot_row(
            epoch, obj, set, &theta, data, &full_idx, cv_order, cv0, lambda_inf, cfg.rho, eta,
        ) {
            Ok(row) => rows.push(row),
            Err(MethodError::Objective(ObjectiveError::NonFiniteLoss)) => {
                return Ok(diverged(rows, theta, cv0, epoch))
            }
            Err(e) => return Err(e),
        }
    }

    Ok(super::TrainingRecord {
        rows,
        theta,
        termination: super::Termination::Completed,
        cv0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{ConstraintKind, ConstraintSpec, Target};
    use crate::data::synth_gaussians;
    use crate::objective::QuadraticObjective;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn theta_step_arithmetic() {
        // (1/1 + 1·(0−0) − 0) / (1/1 + 1) = 0.5
        assert_eq!(linearized_theta_step(1.0, 0.0, 0.0, 0.0, 1.0, 1.0), 0.5);
        // ∇F = 0, u = 0, μ = θ: stationary for any η, ρ.
        for (eta, rho) in [(1.0, 1.0), (0.3, 2.5), (1e-3, 10.0)] {
            let t = 1.7;
            let out = linearized_theta_step(t, 0.0, t, 0.0, eta, rho);
            assert!((out - t).abs() < 1e-12, "eta={eta} rho={rho}: {out}");
        }
    }

    #[test]
    fn zero_gradient_and_feasible_theta_stay_put() {
        let data = synth_gaussians(6, 2, 2, 1.0, 3);
        let obj = QuadraticObjective::new(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let set = ConstraintSet::new(vec![ConstraintSpec::new(
            ConstraintKind::NonNegativity,
            Target::All,
        )]);
        let theta0 = ParamVector::flat("t", vec![0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = sadmm_train(
            &obj,
            &set,
            &SadmmConfig::new(1.0, 0.5, 3, 4),
            &data,
            theta0,
            CvOrder::P(2.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(rec.theta.values(), &[0.0, 0.0]);
    }

    #[test]
    fn lasso_with_full_batches_approaches_soft_threshold() {
        let a = [2.0, -0.1];
        let obj = QuadraticObjective::new(vec![1.0, 0.0, 0.0, 1.0], a.to_vec()).unwrap();
        let set = ConstraintSet::new(vec![ConstraintSpec::new(ConstraintKind::L1, Target::All)]);
        // Single-row dataset so every batch is the full set.
        let data = Dataset::new(vec![0.0, 0.0], 2, vec![0], 1).unwrap();
        let theta0 = ParamVector::flat("t", vec![0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = sadmm_train(
            &obj,
            &set,
            &SadmmConfig::new(1.0, 1.0, 4000, 1),
            &data,
            theta0,
            CvOrder::P(2.0),
            &mut rng,
        )
        .unwrap();
        assert!(
            (rec.theta.values()[0] - 1.0).abs() < 1e-2,
            "{:?}",
            rec.theta.values()
        );
        assert!(rec.theta.values()[1].abs() < 1e-2);
    }
}
