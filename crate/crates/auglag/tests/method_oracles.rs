//! Convergence oracles with closed-form solutions, cross-method agreement,
//! degenerate-case equivalences, and run-to-run determinism.

mod common;

use auglag::methods::{admm_solve, alm_solve, fp_train, sadmm_train, sal_train, InnerSolve};
use auglag::{
    AdmmConfig, ConstraintKind, ConstraintSet, ConstraintSpec, CvOrder, Dataset, FpConfig,
    FullObjective, ParamVector, QuadraticObjective, SalConfig, SolverConfig, Target, Termination,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{inf_dist, LinearEquality};

/// min ½‖θ − a‖² subject to Σθ − 1 = 0 with a = [1, 2, 3]: the projection
/// of a onto the feasible hyperplane, θ* = a − ((Σa − 1)/3)·1.
const PROJECTION_SOLUTION: [f64; 3] = [-2.0 / 3.0, 1.0 / 3.0, 4.0 / 3.0];

fn projection_problem() -> (QuadraticObjective, LinearEquality) {
    let eye = vec![
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0,
    ];
    let obj = QuadraticObjective::new(eye, vec![1.0, 2.0, 3.0]).unwrap();
    (obj, LinearEquality::sum_to_one(3))
}

fn dummy_rows(n: usize) -> Dataset {
    Dataset::new(vec![0.0; n], 1, vec![0; n], 1).unwrap()
}

#[test]
fn alm_solves_the_constrained_projection() {
    let (obj, system) = projection_problem();
    let theta0 = ParamVector::flat("theta", vec![0.0; 3]);
    let (theta, lambda) =
        alm_solve(&obj, &system, &theta0, 1.0, 100, InnerSolve::default()).unwrap();

    assert!(
        inf_dist(theta.values(), &PROJECTION_SOLUTION) < 1e-6,
        "theta = {:?}",
        theta.values()
    );

    // KKT stationarity: ∇F(θ*) + Jᵀλ* ≈ 0.
    let (_, grad) = obj.value_grad_full(&theta).unwrap();
    let c = auglag::ConstraintSystem::evaluate(&system, &theta).unwrap();
    let jt = c.jacobian_transpose_apply(&lambda).unwrap();
    let residual: f64 = grad
        .iter()
        .zip(&jt)
        .map(|(g, j)| (g + j) * (g + j))
        .sum::<f64>()
        .sqrt();
    assert!(residual < 1e-4, "stationarity residual {residual}");
}

#[test]
fn admm_solves_the_lasso_oracle() {
    let a = [2.0, -0.1];
    let obj = QuadraticObjective::new(vec![1.0, 0.0, 0.0, 1.0], a.to_vec()).unwrap();
    let set = ConstraintSet::new(vec![ConstraintSpec::new(ConstraintKind::L1, Target::All)]);
    let theta0 = ParamVector::flat("theta", vec![0.0; 2]);
    let sol = admm_solve(&obj, &set, &theta0, &AdmmConfig::new(1.0, 200)).unwrap();

    // min ½‖θ−a‖² + ‖θ‖₁ has the closed form soft-threshold(a, 1) = [1, 0].
    assert!(
        inf_dist(sol.theta.values(), &[1.0, 0.0]) < 1e-4,
        "theta = {:?}",
        sol.theta.values()
    );
    assert!(
        sol.primal_residual < 1e-4,
        "primal residual {}",
        sol.primal_residual
    );
}

#[test]
fn admm_and_alm_agree_on_the_constrained_projection() {
    let (obj, system) = projection_problem();
    let theta0 = ParamVector::flat("theta", vec![0.0; 3]);
    let (alm_theta, _) =
        alm_solve(&obj, &system, &theta0, 1.0, 100, InnerSolve::default()).unwrap();
    let admm_sol = admm_solve(&obj, &system, &theta0, &AdmmConfig::new(1.0, 300)).unwrap();

    assert!(
        inf_dist(alm_theta.values(), admm_sol.theta.values()) < 1e-4,
        "alm {:?} vs admm {:?}",
        alm_theta.values(),
        admm_sol.theta.values()
    );
}

#[test]
fn sal_single_batch_limit_matches_alm() {
    let (obj, system) = projection_problem();
    let data = dummy_rows(256);
    let cfg = SalConfig {
        eta: 0.9,
        eps_f: 0.0,
        eps_c: 0.0,
        mu_init: 1.0,
        sigma: 2.0,
        mu_max: 10.0,
        n_batch: 1,
        n_shuffle: 40,
        n_aug_lag: 8,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let record = sal_train(
        &obj,
        &system,
        &cfg,
        SolverConfig::sgd(0.05),
        &data,
        ParamVector::flat("theta", vec![0.0; 3]),
        CvOrder::P(2.0),
        &mut rng,
    )
    .unwrap();

    assert_eq!(record.termination, Termination::Completed);
    assert!(
        inf_dist(record.theta.values(), &PROJECTION_SOLUTION) < 1e-3,
        "theta = {:?}",
        record.theta.values()
    );
    // The safeguard holds at every recorded step.
    for row in &record.rows {
        assert!(row.penalty <= cfg.mu_max + 1e-15);
    }
}

#[test]
fn sal_with_frozen_multipliers_is_fixed_penalty() {
    // Reject every sufficient-decrease test (η ≈ 0 against a violation
    // that never collapses) and pin the penalty with μ_max = μ_init: the
    // stochastic loop then minimizes F + (μ/2)‖C‖² term by term, which is
    // fixed-penalty training at ρ = μ/2. Same seed ⇒ identical batches ⇒
    // bit-identical trajectories.
    let obj = QuadraticObjective::new(vec![1.0, 0.0, 0.0, 1.0], vec![2.0, 3.0]).unwrap();
    let set = ConstraintSet::new(vec![ConstraintSpec::new(ConstraintKind::L2, Target::All)]);
    let data = dummy_rows(8);
    let theta0 = ParamVector::flat("theta", vec![5.0, 5.0]);
    let mu = 4.0;

    let sal_cfg = SalConfig {
        eta: 1e-9,
        eps_f: 0.0,
        eps_c: 0.0,
        mu_init: mu,
        sigma: 2.0,
        mu_max: mu,
        n_batch: 1,
        n_shuffle: 3,
        n_aug_lag: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let sal = sal_train(
        &obj,
        &set,
        &sal_cfg,
        SolverConfig::sgd(0.05),
        &data,
        theta0.clone(),
        CvOrder::P(2.0),
        &mut rng,
    )
    .unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let fp = fp_train(
        &obj,
        &set,
        &FpConfig::uniform(mu / 2.0, set.n_specs()),
        SolverConfig::sgd(0.05),
        &data,
        theta0,
        3,
        1,
        CvOrder::P(2.0),
        &mut rng,
    )
    .unwrap();

    assert_eq!(sal.theta.values(), fp.theta.values());
    assert_eq!(sal.rows.len(), fp.rows.len());
    for (s, f) in sal.rows.iter().zip(&fp.rows) {
        assert_eq!(s.loss, f.loss);
        assert_eq!(s.cv_p, f.cv_p);
        assert_eq!(s.lambda_inf, 0.0, "multipliers must stay frozen at zero");
    }
}

#[test]
fn all_methods_hold_still_at_a_feasible_stationary_point() {
    // Gradient and every constraint entry vanish at θ0: nothing may move.
    let b = vec![0.5, 1.0, 0.25];
    let obj = QuadraticObjective::new(
        vec![
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0,
        ],
        b.clone(),
    )
    .unwrap();
    let set = ConstraintSet::new(vec![ConstraintSpec::new(
        ConstraintKind::NonNegativity,
        Target::All,
    )]);
    let theta0 = ParamVector::flat("theta", b.clone());
    let data = dummy_rows(6);

    let (alm_theta, lambda) =
        alm_solve(&obj, &set, &theta0, 1.0, 5, InnerSolve::default()).unwrap();
    assert_eq!(alm_theta.values(), &b[..]);
    assert!(lambda.iter().all(|&l| l == 0.0));

    let admm_sol = admm_solve(&obj, &set, &theta0, &AdmmConfig::new(1.0, 5)).unwrap();
    assert_eq!(admm_sol.theta.values(), &b[..]);
    assert_eq!(admm_sol.primal_residual, 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fp = fp_train(
        &obj,
        &set,
        &FpConfig::uniform(1.0, set.n_specs()),
        SolverConfig::sgd(0.1),
        &data,
        theta0.clone(),
        3,
        2,
        CvOrder::P(2.0),
        &mut rng,
    )
    .unwrap();
    assert_eq!(fp.theta.values(), &b[..]);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sadmm = sadmm_train(
        &obj,
        &set,
        &auglag::SadmmConfig::new(1.0, 0.1, 3, 2),
        &data,
        theta0.clone(),
        CvOrder::P(2.0),
        &mut rng,
    )
    .unwrap();
    assert_eq!(sadmm.theta.values(), &b[..]);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sal = sal_train(
        &obj,
        &set,
        &SalConfig {
            eta: 0.5,
            eps_f: 1e10,
            eps_c: 1e-12,
            mu_init: 1.0,
            sigma: 2.0,
            mu_max: 8.0,
            n_batch: 2,
            n_shuffle: 3,
            n_aug_lag: 2,
        },
        SolverConfig::sgd(0.1),
        &data,
        theta0,
        CvOrder::P(2.0),
        &mut rng,
    )
    .unwrap();
    assert_eq!(sal.theta.values(), &b[..]);
    // F = 0 and ‖C‖² = 0 at the very first assessment.
    assert_eq!(
        sal.termination,
        Termination::Converged {
            shuffle: 0,
            iteration: 0
        }
    );
}

#[test]
fn identical_seeds_give_identical_records() {
    let obj = QuadraticObjective::new(vec![1.0, 0.2, 0.2, 1.0], vec![1.0, -2.0]).unwrap();
    let set = ConstraintSet::new(vec![ConstraintSpec::new(ConstraintKind::L1, Target::All)]);
    let data = dummy_rows(32);
    let theta0 = ParamVector::flat("theta", vec![0.3, -0.4]);
    let cfg = SalConfig {
        eta: 0.9,
        eps_f: 0.0,
        eps_c: 0.0,
        mu_init: 0.5,
        sigma: 3.0,
        mu_max: 20.0,
        n_batch: 4,
        n_shuffle: 4,
        n_aug_lag: 2,
    };
    let run = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sal_train(
            &obj,
            &set,
            &cfg,
            SolverConfig::sgd(0.05).with_decay(0.9),
            &data,
            theta0.clone(),
            CvOrder::P(2.0),
            &mut rng,
        )
        .unwrap()
    };
    assert_eq!(run(7), run(7));

    let run_fp = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        fp_train(
            &obj,
            &set,
            &FpConfig::uniform(0.25, set.n_specs()),
            SolverConfig::adam(0.01),
            &data,
            theta0.clone(),
            4,
            4,
            CvOrder::P(2.0),
            &mut rng,
        )
        .unwrap()
    };
    assert_eq!(run_fp(7), run_fp(7));
}

/// A quadratic whose unconstrained minimizer is infeasible for the batch
/// objective: used by the S-ADMM lasso check below.
#[test]
fn sadmm_approaches_the_lasso_solution() {
    let a = [2.0, -0.1];
    let obj = QuadraticObjective::new(vec![1.0, 0.0, 0.0, 1.0], a.to_vec()).unwrap();
    let set = ConstraintSet::new(vec![ConstraintSpec::new(ConstraintKind::L1, Target::All)]);
    let data = dummy_rows(1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let record = sadmm_train(
        &obj,
        &set,
        &auglag::SadmmConfig::new(1.0, 1.0, 4000, 1),
        &data,
        ParamVector::flat("theta", vec![0.0; 2]),
        CvOrder::P(2.0),
        &mut rng,
    )
    .unwrap();
    assert!(
        inf_dist(record.theta.values(), &[1.0, 0.0]) < 1e-2,
        "theta = {:?}",
        record.theta.values()
    );
}
