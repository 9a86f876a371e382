//! Inner unconstrained optimizers: SGD and Adam with per-epoch
//! multiplicative learning-rate decay that outer loops can reset, plus a
//! backtracking gradient-descent minimizer for deterministic subproblems.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::fmath;
use crate::params::ParamVector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Initial learning rate; the live rate is `lr0 · decay^e` where `e`
    /// counts epochs since the last reset.
    pub lr0: f64,
    /// Multiplicative per-epoch decay factor in (0, 1].
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl SolverConfig {
    pub fn sgd(lr0: f64) -> Self {
        Self {
            kind: SolverKind::Sgd,
            lr0,
            decay: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn adam(lr0: f64) -> Self {
        Self {
            kind: SolverKind::Adam,
            ..Self::sgd(lr0)
        }
    }

    pub fn with_decay(mut self, decay: f64) -> Self {
        self.decay = decay;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !self.lr0.is_finite() || self.lr0 <= 0.0 {
            return Err(SolverError::InvalidConfig(alloc::format!(
                "lr0 must be positive, got {}",
                self.lr0
            )));
        }
        if self.decay.is_nan() || self.decay <= 0.0 || self.decay > 1.0 {
            return Err(SolverError::InvalidConfig(alloc::format!(
                "decay must lie in (0, 1], got {}",
                self.decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    config: SolverConfig,
    lr: f64,
    step_count: u64,
    epochs_since_reset: u32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl SolverState {
    pub fn new(config: SolverConfig, n_params: usize) -> Result<Self, SolverError> {
        config.validate()?;
        let (m, v) = match config.kind {
            SolverKind::Sgd => (Vec::new(), Vec::new()),
            SolverKind::Adam => (vec![0.0; n_params], vec![0.0; n_params]),
        };
        Ok(Self {
            lr: config.lr0,
            config,
            step_count: 0,
            epochs_since_reset: 0,
            m,
            v,
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Adam moment vectors (both empty for SGD).
    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    /// One update of θ in place from `grad`.
    pub fn step(&mut self, theta: &mut ParamVector, grad: &[f64]) -> Result<(), SolverError> {
        if grad.len() != theta.len() {
            return Err(SolverError::LengthMismatch {
                expected: theta.len(),
                got: grad.len(),
            });
        }
        match self.config.kind {
            SolverKind::Sgd => {
                let lr = self.lr;
                for (t, g) in theta.values_mut().iter_mut().zip(grad) {
                    *t -= lr * g;
                }
            }
            SolverKind::Adam => {
                if self.m.len() != theta.len() {
                    return Err(SolverError::LengthMismatch {
                        expected: self.m.len(),
                        got: theta.len(),
                    });
                }
                let t = (self.step_count + 1) as f64;
                let (b1, b2) = (self.config.beta1, self.config.beta2);
                let bc1 = 1.0 - fmath::powf(b1, t);
                let bc2 = 1.0 - fmath::powf(b2, t);
                let lr = self.lr;
                let eps = self.config.epsilon;
                for (j, (x, &g)) in theta.values_mut().iter_mut().zip(grad).enumerate() {
                    self.m[j] = b1 * self.m[j] + (1.0 - b1) * g;
                    self.v[j] = b2 * self.v[j] + (1.0 - b2) * g * g;
                    let m_hat = self.m[j] / bc1;
                    let v_hat = self.v[j] / bc2;
                    *x -= lr * m_hat / (fmath::sqrt(v_hat) + eps);
                }
            }
        }
        self.step_count += 1;
        Ok(())
    }

    /// Apply one epoch of decay: lr ← lr0 · decay^(epochs since reset).
    pub fn decay_epoch(&mut self) {
        self.epochs_since_reset += 1;
        self.lr = self.config.lr0 * fmath::powf(self.config.decay, self.epochs_since_reset as f64);
    }

    /// Restore lr to lr0 and restart the decay schedule. Adam moments are
    /// deliberately preserved: only the rate schedule restarts per outer
    /// iteration, not the accumulated curvature estimates.
    pub fn reset_lr(&mut self) {
        self.lr = self.config.lr0;
        self.epochs_since_reset = 0;
    }
}

/// Minimize a smooth function with backtracking (Armijo) gradient
/// descent. Returns the final point and value once the gradient 2-norm
/// drops to `grad_tol`, the line search stalls, or `max_iters` passes.
pub fn minimize_backtracking<E>(
    mut f: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
    x0: Vec<f64>,
    grad_tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, f64), E> {
    let mut x = x0;
    let (mut fx, mut grad) = f(&x)?;
    let mut step = 1.0;
    for _ in 0..max_iters {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if fmath::sqrt(gnorm2) <= grad_tol {
            break;
        }
        // Try growing the last accepted step first so well-conditioned
        // problems do not crawl with tiny steps.
        let mut s = fmath::fmin(step * 2.0, 1e6);
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - s * gi).collect();
            let (ft, gt) = f(&trial)?;
            if ft <= fx - 1e-4 * s * gnorm2 {
                accepted = Some((trial, ft, gt, s));
                break;
            }
            s *= 0.5;
        }
        let Some((trial, ft, gt, s)) = accepted else {
            break;
        };
        // The Armijo margin can underflow near the optimum, "accepting"
        // steps with no representable decrease; treat that as a stall
        // rather than spinning until max_iters.
        let stalled = ft >= fx;
        x = trial;
        fx = ft;
        grad = gt;
        step = s;
        if stalled {
            break;
        }
    }
    Ok((x, fx))
}
