//! Proximal operators checked against exhaustive per-coordinate grid
//! search, plus the decrease guarantees of the iterative orthogonality
//! prox.

mod common;

use auglag::constraint::{orth_value_grad, prox};
use auglag::ConstraintKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The scalar objective the prox minimizes: penalty(μ) + (ρ/2)(v − μ)².
fn scalar_prox_objective(kind: ConstraintKind, mu: f64, v: f64, rho: f64) -> f64 {
    let penalty = match kind {
        ConstraintKind::L1 => mu.abs(),
        ConstraintKind::L2 => mu * mu,
        ConstraintKind::NonNegativity => (-mu).max(0.0),
        ConstraintKind::Orthogonality => unreachable!("not a per-coordinate prox"),
    };
    penalty + 0.5 * rho * (v - mu) * (v - mu)
}

/// Exhaustive argmin over the grid {−3, −3+step, …, 3}.
fn grid_argmin(kind: ConstraintKind, v: f64, rho: f64, step: f64) -> f64 {
    let n = (6.0 / step).round() as usize;
    let mut best_mu = -3.0;
    let mut best_val = f64::INFINITY;
    for i in 0..=n {
        let mu = -3.0 + step * i as f64;
        let val = scalar_prox_objective(kind, mu, v, rho);
        if val < best_val {
            best_val = val;
            best_mu = mu;
        }
    }
    best_mu
}

#[test]
fn separable_prox_operators_match_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for kind in [
        ConstraintKind::L1,
        ConstraintKind::L2,
        ConstraintKind::NonNegativity,
    ] {
        for draw in 0..100 {
            let v = rng.random_range(-2.5..2.5);
            let rho = 10f64.powf(rng.random_range(-1.0..1.0));
            let out = prox(kind, &[v], &[1], rho).unwrap();
            let oracle = grid_argmin(kind, v, rho, 1e-4);
            assert!(
                (out[0] - oracle).abs() < 1e-4,
                "{kind:?} draw {draw}: v={v}, rho={rho}: prox {} vs grid {oracle}",
                out[0]
            );
        }
    }
}

#[test]
fn separable_prox_operators_are_nonexpansive() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for kind in [
        ConstraintKind::L1,
        ConstraintKind::L2,
        ConstraintKind::NonNegativity,
    ] {
        for _ in 0..200 {
            let a = rng.random_range(-3.0..3.0);
            let b = rng.random_range(-3.0..3.0);
            let rho = 10f64.powf(rng.random_range(-1.0..1.0));
            let pa = prox(kind, &[a], &[1], rho).unwrap()[0];
            let pb = prox(kind, &[b], &[1], rho).unwrap()[0];
            assert!(
                (pa - pb).abs() <= (a - b).abs() + 1e-12,
                "{kind:?}: |prox(a)−prox(b)| = {} > |a−b| = {}",
                (pa - pb).abs(),
                (a - b).abs()
            );
        }
    }
}

#[test]
fn orthogonality_prox_decreases_both_objectives() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for draw in 0..40 {
        let (rows, cols) = [(2usize, 2usize), (3, 3), (2, 4), (4, 2)][draw % 4];
        let v: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-1.5..1.5))
            .collect();
        let rho = 10f64.powf(rng.random_range(-1.0..1.0));
        let out = prox(ConstraintKind::Orthogonality, &v, &[rows, cols], rho).unwrap();

        let (defect_in, _) = orth_value_grad(&v, rows, cols);
        let (defect_out, _) = orth_value_grad(&out, rows, cols);
        let dist2: f64 = v
            .iter()
            .zip(&out)
            .map(|(vi, oi)| (vi - oi) * (vi - oi))
            .sum();
        // Descent started at μ = v, where the quadratic term vanishes, so
        // the combined objective — and a fortiori the defect alone — can
        // only have gone down.
        assert!(
            defect_out + 0.5 * rho * dist2 <= defect_in + 1e-12,
            "draw {draw}: combined objective rose: {} -> {}",
            defect_in,
            defect_out + 0.5 * rho * dist2
        );
        assert!(
            defect_out <= defect_in + 1e-12,
            "draw {draw}: defect rose: {defect_in} -> {defect_out}"
        );
    }
}

#[test]
fn orthogonality_prox_fixed_point_at_orthonormal_input() {
    // An orthonormal W has zero defect and zero quadratic term: the
    // descent has nothing to improve and must return W unchanged.
    let w = vec![0.0, 1.0, -1.0, 0.0];
    let out = prox(ConstraintKind::Orthogonality, &w, &[2, 2], 1.0).unwrap();
    assert_eq!(out, w);
}
