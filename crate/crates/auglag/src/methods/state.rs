//! Multiplier/penalty state and the decision logic of the stochastic
//! augmented Lagrangian outer loop.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::constraint::ConstraintValue;
use crate::fmath;

use super::MethodError;

/// Lagrange multipliers λ, the penalty coefficient (ρ in the augmented
/// Lagrangian, μ in the stochastic outer loop — one and the same
/// quantity), and the best squared violation seen so far.
///
/// The training methods keep the penalty strictly positive; a zero
/// penalty is permitted here so the augmented Lagrangian can be
/// evaluated in its unconstrained-reduction form.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierState {
    lambda: Vec<f64>,
    penalty: f64,
    best_violation: f64,
}

impl MultiplierState {
    /// Fresh state: λ = 0, no violation history yet.
    pub fn new(m: usize, penalty: f64) -> Self {
        Self {
            lambda: vec![0.0; m],
            penalty,
            best_violation: f64::INFINITY,
        }
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda_inf_norm(&self) -> f64 {
        self.lambda
            .iter()
            .fold(0.0, |acc, &l| fmath::fmax(acc, fmath::abs(l)))
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn set_penalty(&mut self, penalty: f64) {
        self.penalty = penalty;
    }

    pub fn best_violation(&self) -> f64 {
        self.best_violation
    }

    pub fn set_best_violation(&mut self, v: f64) {
        self.best_violation = v;
    }

    /// λ ← λ + penalty·C(θ). Penalty and best violation are untouched.
    pub fn multiplier_update(&mut self, c: &ConstraintValue) -> Result<(), MethodError> {
        if c.len() != self.lambda.len() {
            return Err(MethodError::LengthMismatch {
                expected: self.lambda.len(),
                got: c.len(),
            });
        }
        for (l, &ci) in self.lambda.iter_mut().zip(c.entries()) {
            *l += self.penalty * ci;
        }
        Ok(())
    }

    /// true iff ‖C(θ)‖² ≤ η·best_violation (boundary inclusive).
    pub fn sufficient_decrease(&self, c: &ConstraintValue, eta: f64) -> bool {
        c.squared_norm() <= eta * self.best_violation
    }

    /// penalty ← min(σ·penalty, μ_max).
    pub fn penalty_update(&mut self, sigma: f64, mu_max: f64) {
        self.penalty = fmath::fmin(sigma * self.penalty, mu_max);
    }
}

/// Parameters of the stochastic augmented Lagrangian loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalConfig {
    /// Sufficient-decrease tolerance, in (0, 1).
    pub eta: f64,
    /// Full-set fidelity tolerance for termination.
    pub eps_f: f64,
    /// Squared-violation tolerance for termination.
    pub eps_c: f64,
    /// Base penalty; shuffle s starts at min((s+1)·mu_init, mu_max).
    pub mu_init: f64,
    /// Penalty escalation factor, > 1.
    pub sigma: f64,
    /// Penalty safeguard cap.
    pub mu_max: f64,
    /// Mini-batch size.
    pub n_batch: usize,
    /// Outer shuffles; each consumes the dataset exactly once.
    pub n_shuffle: usize,
    /// Augmented-Lagrangian iterations per shuffle; each takes one
    /// contiguous 1/n_aug_lag share of the shuffle's batches.
    pub n_aug_lag: usize,
}

impl SalConfig {
    pub fn validate(&self) -> Result<(), MethodError> {
        if self.eta.is_nan() || self.eta <= 0.0 || self.eta >= 1.0 {
            return Err(MethodError::InvalidConfig(format!(
                "eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        if !self.sigma.is_finite() || self.sigma <= 1.0 {
            return Err(MethodError::InvalidConfig(format!(
                "sigma must exceed 1, got {}",
                self.sigma
            )));
        }
        if !self.mu_init.is_finite() || self.mu_init <= 0.0 {
            return Err(MethodError::InvalidConfig(format!(
                "mu_init must be positive, got {}",
                self.mu_init
            )));
        }
        if self.mu_max.is_nan() || self.mu_init > self.mu_max {
            return Err(MethodError::InvalidConfig(format!(
                "mu_init {} exceeds mu_max {}",
                self.mu_init, self.mu_max
            )));
        }
        if self.n_batch == 0 || self.n_shuffle == 0 || self.n_aug_lag == 0 {
            return Err(MethodError::InvalidConfig(
                "n_batch, n_shuffle, n_aug_lag must all be ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one outer-iteration assessment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SalAssessment {
    /// Sufficient decrease held. When `terminated`, both convergence
    /// tolerances also held and the state was left untouched; otherwise
    /// λ was updated and the best violation replaced, penalty unchanged.
    Accepted { terminated: bool },
    /// Sufficient decrease failed: λ and best violation unchanged,
    /// penalty escalated (clamped at μ_max).
    Rejected,
}

/// The decision core of the stochastic augmented Lagrangian method,
/// factored out of the training loop so the accept/reject/terminate
/// semantics can be driven directly with scripted violation sequences.
#[derive(Debug, Clone)]
pub struct SalController {
    ms: MultiplierState,
    eta: f64,
    eps_f: f64,
    eps_c: f64,
    mu_init: f64,
    sigma: f64,
    mu_max: f64,
}

impl SalController {
    /// λ = 0, C_best ← C(θ₀).
    pub fn new(cfg: &SalConfig, c0: &ConstraintValue) -> Result<Self, MethodError> {
        cfg.validate()?;
        let mut ms = MultiplierState::new(c0.len(), cfg.mu_init);
        ms.set_best_violation(c0.squared_norm());
        Ok(Self {
            ms,
            eta: cfg.eta,
            eps_f: cfg.eps_f,
            eps_c: cfg.eps_c,
            mu_init: cfg.mu_init,
            sigma: cfg.sigma,
            mu_max: cfg.mu_max,
        })
    }

    pub fn state(&self) -> &MultiplierState {
        &self.ms
    }

    /// Start shuffle `s` (0-based): penalty ← (s+1)·μ_init, clamped at
    /// μ_max so escalation never exceeds the safeguard. This reset is
    /// applied even when it lowers a penalty escalated during the
    /// previous shuffle. λ carries over untouched.
    pub fn begin_shuffle(&mut self, s: usize) {
        let mu0 = (s + 1) as f64 * self.mu_init;
        self.ms.set_penalty(fmath::fmin(mu0, self.mu_max));
    }

    /// Assess the exactly-evaluated constraint vector after one inner
    /// pass. `full_fidelity` is F(θ) on the full training set, consulted
    /// only when sufficient decrease holds. On a non-terminating accept,
    /// the multiplier update precedes the best-violation replacement and
    /// uses the current penalty.
    pub fn assess(
        &mut self,
        c: &ConstraintValue,
        full_fidelity: f64,
    ) -> Result<SalAssessment, MethodError> {
        if self.ms.sufficient_decrease(c, self.eta) {
            let violation = c.squared_norm();
            if full_fidelity <= self.eps_f && violation <= self.eps_c {
                return Ok(SalAssessment::Accepted { terminated: true });
            }
            self.ms.multiplier_update(c)?;
            self.ms.set_best_violation(violation);
            Ok(SalAssessment::Accepted { terminated: false })
        } else {
            self.ms.penalty_update(self.sigma, self.mu_max);
            Ok(SalAssessment::Rejected)
        }
    }
}
