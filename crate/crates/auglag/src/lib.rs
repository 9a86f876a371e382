//! Constraint-enforced training of differentiable models.
//!
//! Training with regularizers is framed as equality-constrained optimization:
//! minimize a data-fidelity loss `F(θ)` subject to `C(θ) = 0`, where each
//! entry of `C` is a nonnegative penalty form (L1/L2 norms, orthogonality
//! defect, non-negativity violations). The crate provides
//!
//! - [`params`]: a flat parameter vector with named, shaped group views,
//! - [`objective`]: differentiable objectives with exact analytic gradients
//!   (softmax-cross-entropy MLPs and a quadratic test objective),
//! - [`constraint`]: the constraint catalog with values, subgradients, and
//!   proximal operators,
//! - [`solver`]: SGD and Adam inner solvers with resettable learning-rate
//!   decay, plus a deterministic line-search descent routine,
//! - [`methods`]: the enforcement methods — fixed penalty, deterministic
//!   augmented Lagrangian and ADMM, stochastic augmented Lagrangian, and
//!   stochastic ADMM,
//! - [`metrics`]: constraint-violation norms `CV_p`, the relative curve
//!   `CV(e) = CV_e / CV_0`, and classification accuracy,
//! - [`data`]: in-memory datasets, synthetic Gaussian generators, and epoch
//!   planning (shuffle + batch split).
//!
//! The crate is `no_std`-compatible (with `alloc`); file formats, the
//! experiment harness, and the CLI live in the companion `auglag-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod constraint;
pub mod data;
mod fmath;
pub mod methods;
pub mod metrics;
pub mod objective;
pub mod params;
pub mod solver;

pub use constraint::{
    ConstraintKind, ConstraintSet, ConstraintSpec, ConstraintSystem, ConstraintValue, ProxSystem,
    Reduction, Target,
};
pub use data::{Batch, Dataset, EpochPlan};
pub use methods::{
    AdmmConfig, DualStep, EpochRow, FpConfig, MultiplierState, SadmmConfig, SalConfig,
    SalController, Termination, TrainingRecord,
};
pub use metrics::CvOrder;
pub use objective::{FullObjective, MlpObjective, MlpSpec, Objective, QuadraticObjective};
pub use params::{GroupDesc, ParamVector};
pub use solver::{SolverConfig, SolverKind, SolverState};
