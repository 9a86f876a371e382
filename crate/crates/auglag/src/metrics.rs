//! Constraint-violation metrics CV_p and relative CV(e), plus
//! classification accuracy.

use alloc::vec::Vec;

use crate::constraint::ConstraintValue;
use crate::fmath;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("norm order must be ≥ 1 or INF, got {0}")]
    InvalidOrder(f64),
    #[error("initial constraint violation is zero; relative CV is undefined")]
    ZeroInitialViolation,
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("epoch {epoch} out of range, history has {len}")]
    EpochOutOfRange { epoch: usize, len: usize },
}

/// Norm order for CV_p: a finite p ≥ 1 or the max norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CvOrder {
    P(f64),
    Inf,
}

impl CvOrder {
    fn validate(self) -> Result<(), MetricsError> {
        match self {
            CvOrder::P(p) if p >= 1.0 && p.is_finite() => Ok(()),
            CvOrder::P(p) => Err(MetricsError::InvalidOrder(p)),
            CvOrder::Inf => Ok(()),
        }
    }
}

/// CV_p = (Σ|C_i|^p)^(1/p); p = INF gives max|C_i|. p = 1 and p = 2 use
/// exact sum/Euclidean forms rather than powf round trips.
pub fn cv_entries(entries: &[f64], order: CvOrder) -> Result<f64, MetricsError> {
    order.validate()?;
    let value = match order {
        CvOrder::Inf => entries
            .iter()
            .fold(0.0, |acc, &c| fmath::fmax(acc, fmath::abs(c))),
        CvOrder::P(p) => {
            if p == 1.0 {
                entries.iter().map(|c| fmath::abs(*c)).sum()
            } else if p == 2.0 {
                fmath::sqrt(entries.iter().map(|c| c * c).sum())
            } else {
                let sum: f64 = entries.iter().map(|c| fmath::powf(fmath::abs(*c), p)).sum();
                fmath::powf(sum, 1.0 / p)
            }
        }
    };
    Ok(value)
}

/// CV_p of an evaluated constraint vector.
pub fn cv(c: &ConstraintValue, order: CvOrder) -> Result<f64, MetricsError> {
    cv_entries(c.entries(), order)
}

/// CV at initialization plus the per-epoch trace, supporting the
/// relative metric CV(e) = CV_e / CV_0.
#[derive(Debug, Clone, PartialEq)]
pub struct CvHistory {
    cv0: f64,
    per_epoch: Vec<f64>,
}

impl CvHistory {
    /// `cv0` must be measured before the first parameter update.
    pub fn new(cv0: f64) -> Self {
        debug_assert!(cv0 >= 0.0);
        Self {
            cv0,
            per_epoch: Vec::new(),
        }
    }

    pub fn push(&mut self, cv_e: f64) {
        self.per_epoch.push(cv_e);
    }

    pub fn cv0(&self) -> f64 {
        self.cv0
    }

    pub fn per_epoch(&self) -> &[f64] {
        &self.per_epoch
    }

    /// CV(e) = CV_e / CV_0. A zero CV_0 makes the ratio undefined and is
    /// reported as an error, never as ±inf/NaN.
    pub fn cv_rel(&self, e: usize) -> Result<f64, MetricsError> {
        if e >= self.per_epoch.len() {
            return Err(MetricsError::EpochOutOfRange {
                epoch: e,
                len: self.per_epoch.len(),
            });
        }
        if self.cv0 == 0.0 {
            return Err(MetricsError::ZeroInitialViolation);
        }
        Ok(self.per_epoch[e] / self.cv0)
    }

    /// CV(e) at the last recorded epoch.
    pub fn cv_rel_final(&self) -> Result<f64, MetricsError> {
        if self.per_epoch.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        self.cv_rel(self.per_epoch.len() - 1)
    }
}

/// Fraction of positions where `preds` and `labels` agree.
pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64, MetricsError> {
    if preds.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if preds.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            expected: labels.len(),
            got: preds.len(),
        });
    }
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / preds.len() as f64)
}
