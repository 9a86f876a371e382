//! Shared fixtures for the integration suites: an affine equality
//! constraint, central-difference gradient checking, and small random
//! problem generators.

#![allow(dead_code)]

use auglag::constraint::ConstraintError;
use auglag::{ConstraintSystem, ConstraintValue, ParamVector, ProxSystem};

/// The single equality constraint aᵀθ − b = 0, used by the convergence
/// oracles. Its proximal map (as the indicator of the feasible affine
/// set) is the Euclidean projection, independent of ρ.
pub struct LinearEquality {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LinearEquality {
    pub fn sum_to_one(n: usize) -> Self {
        Self {
            a: vec![1.0; n],
            b: 1.0,
        }
    }
}

impl ConstraintSystem for LinearEquality {
    fn evaluate(&self, theta: &ParamVector) -> Result<ConstraintValue, ConstraintError> {
        let dot: f64 = self
            .a
            .iter()
            .zip(theta.values())
            .map(|(ai, ti)| ai * ti)
            .sum();
        let mut value = ConstraintValue::new(theta.len());
        value.push_scalar(dot - self.b, 0, self.a.clone());
        value.end_spec();
        Ok(value)
    }
}

impl ProxSystem for LinearEquality {
    fn prox_apply(&self, v: &ParamVector, _rho: f64) -> Result<ParamVector, ConstraintError> {
        let dot: f64 = self.a.iter().zip(v.values()).map(|(ai, vi)| ai * vi).sum();
        let norm2: f64 = self.a.iter().map(|ai| ai * ai).sum();
        let scale = (dot - self.b) / norm2;
        let mut out = v.clone();
        for (o, &ai) in out.values_mut().iter_mut().zip(&self.a) {
            *o -= scale * ai;
        }
        Ok(out)
    }
}

/// Central finite differences (∂f/∂x_j ≈ (f(x+he_j) − f(x−he_j)) / 2h).
pub fn central_diff<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for j in 0..x.len() {
        let orig = probe[j];
        probe[j] = orig + h;
        let f_plus = f(&probe);
        probe[j] = orig - h;
        let f_minus = f(&probe);
        probe[j] = orig;
        grad[j] = (f_plus - f_minus) / (2.0 * h);
    }
    grad
}

/// Max over coordinates of |a−b| / max(1, |a|, |b|): relative error with
/// a unit floor so near-zero gradients compare absolutely.
pub fn max_rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    assert_eq!(analytic.len(), fd.len());
    analytic
        .iter()
        .zip(fd)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// ‖x − y‖∞.
pub fn inf_dist(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
