//! Per-epoch training traces shared by the stochastic methods.

use alloc::vec::Vec;

use crate::params::ParamVector;

/// Why a training run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// All configured epochs/shuffles ran.
    Completed,
    /// The augmented-Lagrangian success test fired: full-set fidelity and
    /// squared violation both within tolerance.
    Converged { shuffle: usize, iteration: usize },
    /// A non-finite loss or gradient aborted the run.
    Diverged { epoch: usize },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Converged { .. } => "converged",
            Termination::Diverged { .. } => "diverged",
        }
    }
}

/// One snapshot row. Epoch 0 is the initialization state, recorded
/// before any parameter update, so its `cv_rel` is exactly 1 whenever
/// the initial violation is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    /// Full-training-set data-fidelity loss F(θ) (not the penalized
    /// objective).
    pub loss: f64,
    /// CV_p at the configured order.
    pub cv_p: f64,
    /// CV(e) = CV_e / CV_0; `None` when CV_0 = 0 makes it undefined.
    pub cv_rel: Option<f64>,
    /// Training accuracy when the objective is a classifier.
    pub accuracy: Option<f64>,
    /// ‖λ‖∞ (0 where the method has no multipliers).
    pub lambda_inf: f64,
    /// Penalty in force when the row was recorded. For fixed penalty this
    /// is the largest configured coefficient.
    pub penalty: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub rows: Vec<EpochRow>,
    pub theta: ParamVector,
    pub termination: Termination,
    /// CV_p at initialization, the denominator of CV(e).
    pub cv0: f64,
}

impl TrainingRecord {
    pub fn final_row(&self) -> Option<&EpochRow> {
        self.rows.last()
    }

    /// CV(e) at the final recorded epoch; `None` when CV_0 = 0.
    pub fn cv_rel_final(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.cv_rel)
    }

    pub fn cv_p_final(&self) -> Option<f64> {
        self.rows.last().map(|r| r.cv_p)
    }
}
