//! Constraint catalog: values, (sub)gradients, and proximal operators for
//! the four supported constraint functions, plus assembly of the stacked
//! constraint vector C(θ) over a parameter vector.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::fmath;
use crate::params::{GroupDesc, ParamVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstraintError {
    #[error("unknown parameter group `{0}`")]
    UnknownGroup(String),
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("penalty must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    L1,
    L2,
    Orthogonality,
    NonNegativity,
}

/// How a constraint contributes to C(θ): one scalar entry per targeted
/// group, or one entry per targeted parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Scalar,
    Elementwise,
}

impl ConstraintKind {
    pub fn reduction(self) -> Reduction {
        match self {
            ConstraintKind::NonNegativity => Reduction::Elementwise,
            _ => Reduction::Scalar,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::L1 => "l1",
            ConstraintKind::L2 => "l2",
            ConstraintKind::Orthogonality => "orthogonality",
            ConstraintKind::NonNegativity => "nonnegativity",
        }
    }
}

/// What a constraint applies to. `All` targets every group separately —
/// each group contributes its own entries, so an L2 constraint on `All`
/// yields one scalar per layer, not one global scalar. For
/// `Orthogonality`, `All` targets every 2-D group and errors when the
/// vector has none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Group(String),
    All,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub target: Target,
}

impl ConstraintSpec {
    pub fn new(kind: ConstraintKind, target: Target) -> Self {
        Self { kind, target }
    }

    pub fn reduction(&self) -> Reduction {
        self.kind.reduction()
    }
}

/// Ordered list of constraint specs; evaluation stacks their entries in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintSet {
    specs: Vec<ConstraintSpec>,
}

/// Anything that can evaluate a constraint vector C(θ) with a usable
/// Jacobian. The penalty methods are generic over this so that problems
/// outside the built-in catalog (e.g. affine equality constraints in
/// convergence tests) can reuse them.
pub trait ConstraintSystem {
    fn evaluate(&self, theta: &ParamVector) -> Result<ConstraintValue, ConstraintError>;
}

impl<T: ConstraintSystem + ?Sized> ConstraintSystem for &T {
    fn evaluate(&self, theta: &ParamVector) -> Result<ConstraintValue, ConstraintError> {
        (**self).evaluate(theta)
    }
}

/// One evaluated piece of the Jacobian, kept in factored form so that
/// Jᵀv never materializes an m×n matrix (NonNegativity alone can make
/// m as large as n).
#[derive(Debug, Clone)]
enum JacTerm {
    /// `entry`'s gradient is dense over params `[offset, offset+grad.len())`.
    Scalar {
        entry: usize,
        offset: usize,
        grad: Vec<f64>,
    },
    /// Entries `entry_start + j` each touch only param `offset + j`.
    Elementwise {
        entry_start: usize,
        offset: usize,
        diag: Vec<f64>,
    },
}

/// The evaluated constraint vector C(θ) together with the capability to
/// apply Jᵀ to a multiplier-space vector, and the entry span of each spec
/// (used to expand per-spec penalty weights to per-entry weights).
#[derive(Debug, Clone)]
pub struct ConstraintValue {
    n_params: usize,
    entries: Vec<f64>,
    terms: Vec<JacTerm>,
    spec_ranges: Vec<(usize, usize)>,
    spec_open: usize,
}

impl ConstraintValue {
    /// Empty value for a parameter vector with `n_params` coordinates.
    /// Custom constraint systems build on this with the `push_*` methods,
    /// closing each spec's contribution with [`end_spec`](Self::end_spec).
    pub fn new(n_params: usize) -> Self {
        Self {
            n_params,
            entries: Vec::new(),
            terms: Vec::new(),
            spec_ranges: Vec::new(),
            spec_open: 0,
        }
    }

    /// Append one scalar entry whose gradient is dense over the
    /// contiguous parameter range starting at `offset`.
    pub fn push_scalar(&mut self, value: f64, offset: usize, grad: Vec<f64>) {
        debug_assert!(offset + grad.len() <= self.n_params);
        let entry = self.entries.len();
        self.entries.push(value);
        self.terms.push(JacTerm::Scalar {
            entry,
            offset,
            grad,
        });
    }

    /// Append one entry per element of `values`; entry `j` has gradient
    /// `diag[j]` with respect to parameter `offset + j` only.
    pub fn push_elementwise(&mut self, values: &[f64], offset: usize, diag: Vec<f64>) {
        debug_assert_eq!(values.len(), diag.len());
        debug_assert!(offset + diag.len() <= self.n_params);
        let entry_start = self.entries.len();
        self.entries.extend_from_slice(values);
        self.terms.push(JacTerm::Elementwise {
            entry_start,
            offset,
            diag,
        });
    }

    /// Close the current spec's entry span.
    pub fn end_spec(&mut self) {
        self.spec_ranges.push((self.spec_open, self.entries.len()));
        self.spec_open = self.entries.len();
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Entry ranges `[start, end)` per spec, in declaration order.
    pub fn spec_ranges(&self) -> &[(usize, usize)] {
        &self.spec_ranges
    }

    /// ‖C(θ)‖².
    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|c| c * c).sum()
    }

    /// Jᵀv = Σ_i v_i ∇c_i(θ), returned as a flat parameter-space vector.
    pub fn jacobian_transpose_apply(&self, v: &[f64]) -> Result<Vec<f64>, ConstraintError> {
        if v.len() != self.entries.len() {
            return Err(ConstraintError::LengthMismatch {
                expected: self.entries.len(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.n_params];
        for term in &self.terms {
            match term {
                JacTerm::Scalar {
                    entry,
                    offset,
                    grad,
                } => {
                    let s = v[*entry];
                    if s != 0.0 {
                        for (j, &g) in grad.iter().enumerate() {
                            out[offset + j] += s * g;
                        }
                    }
                }
                JacTerm::Elementwise {
                    entry_start,
                    offset,
                    diag,
                } => {
                    for (j, &d) in diag.iter().enumerate() {
                        out[offset + j] += v[entry_start + j] * d;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// value = Σ|w_i|; subgradient sign(w_i), 0 at w_i = 0 so sparse
/// coordinates stay put.
pub fn l1_value_grad(w: &[f64]) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; w.len()];
    for (g, &x) in grad.iter_mut().zip(w) {
        value += fmath::abs(x);
        *g = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
    }
    (value, grad)
}

/// value = Σw_i²; gradient 2w.
pub fn l2_value_grad(w: &[f64]) -> (f64, Vec<f64>) {
    let value = w.iter().map(|x| x * x).sum();
    let grad = w.iter().map(|x| 2.0 * x).collect();
    (value, grad)
}

/// value = ‖WᵀW − I‖²_F; gradient 4·W·(WᵀW − I). `w` is rows×cols
/// row-major.
pub fn orth_value_grad(w: &[f64], rows: usize, cols: usize) -> (f64, Vec<f64>) {
    debug_assert_eq!(w.len(), rows * cols);
    // G = WᵀW − I, symmetric cols×cols
    let mut g = vec![0.0; cols * cols];
    for a in 0..cols {
        for b in a..cols {
            let mut acc = 0.0;
            for i in 0..rows {
                acc += w[i * cols + a] * w[i * cols + b];
            }
            if a == b {
                acc -= 1.0;
            }
            g[a * cols + b] = acc;
            g[b * cols + a] = acc;
        }
    }
    let value = g.iter().map(|x| x * x).sum();
    let mut grad = vec![0.0; rows * cols];
    for i in 0..rows {
        for a in 0..cols {
            let mut acc = 0.0;
            for b in 0..cols {
                acc += w[i * cols + b] * g[b * cols + a];
            }
            grad[i * cols + a] = 4.0 * acc;
        }
    }
    (value, grad)
}

/// entry_i = max(0, −w_i); d(entry_i)/d(w_i) = −1 where w_i < 0, else 0.
pub fn nonneg_value_grad(w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut values = vec![0.0; w.len()];
    let mut diag = vec![0.0; w.len()];
    for (i, &x) in w.iter().enumerate() {
        if x < 0.0 {
            values[i] = -x;
            diag[i] = -1.0;
        }
    }
    (values, diag)
}

impl ConstraintSet {
    pub fn new(specs: Vec<ConstraintSpec>) -> Self {
        Self { specs }
    }

    pub fn specs(&self) -> &[ConstraintSpec] {
        &self.specs
    }

    pub fn n_specs(&self) -> usize {
        self.specs.len()
    }

    fn resolve_targets(
        spec: &ConstraintSpec,
        theta: &ParamVector,
    ) -> Result<Vec<GroupDesc>, ConstraintError> {
        let needs_matrix = spec.kind == ConstraintKind::Orthogonality;
        match &spec.target {
            Target::Group(name) => {
                let g = theta
                    .group(name)
                    .map_err(|_| ConstraintError::UnknownGroup(name.clone()))?;
                if needs_matrix && !g.is_matrix() {
                    return Err(ConstraintError::ShapeError(format!(
                        "orthogonality requires a 2-D group, `{name}` has shape {:?}",
                        g.shape()
                    )));
                }
                Ok(vec![g.clone()])
            }
            Target::All => {
                let groups: Vec<GroupDesc> = theta
                    .groups()
                    .iter()
                    .filter(|g| !needs_matrix || g.is_matrix())
                    .cloned()
                    .collect();
                if groups.is_empty() {
                    return Err(ConstraintError::ShapeError(
                        "no 2-D groups available for orthogonality".into(),
                    ));
                }
                Ok(groups)
            }
        }
    }

    fn matrix_shape(g: &GroupDesc) -> (usize, usize) {
        debug_assert!(g.is_matrix());
        (g.shape()[0], g.shape()[1])
    }

    /// Evaluate C(θ): entries stacked in spec order, per-group within
    /// each spec.
    pub fn evaluate_value(&self, theta: &ParamVector) -> Result<ConstraintValue, ConstraintError> {
        let mut cv = ConstraintValue::new(theta.len());
        for spec in &self.specs {
            for g in Self::resolve_targets(spec, theta)? {
                let w = &theta.values()[g.offset()..g.offset() + g.len()];
                match spec.kind {
                    ConstraintKind::L1 => {
                        let (v, grad) = l1_value_grad(w);
                        cv.push_scalar(v, g.offset(), grad);
                    }
                    ConstraintKind::L2 => {
                        let (v, grad) = l2_value_grad(w);
                        cv.push_scalar(v, g.offset(), grad);
                    }
                    ConstraintKind::Orthogonality => {
                        let (rows, cols) = Self::matrix_shape(&g);
                        let (v, grad) = orth_value_grad(w, rows, cols);
                        cv.push_scalar(v, g.offset(), grad);
                    }
                    ConstraintKind::NonNegativity => {
                        let (values, diag) = nonneg_value_grad(w);
                        cv.push_elementwise(&values, g.offset(), diag);
                    }
                }
            }
            cv.end_spec();
        }
        Ok(cv)
    }

    /// Coordinates touched by at least one spec; the stochastic ADMM
    /// θ-step treats only these implicitly.
    pub fn constrained_mask(&self, theta: &ParamVector) -> Result<Vec<bool>, ConstraintError> {
        let mut mask = vec![false; theta.len()];
        for spec in &self.specs {
            for g in Self::resolve_targets(spec, theta)? {
                for m in &mut mask[g.offset()..g.offset() + g.len()] {
                    *m = true;
                }
            }
        }
        Ok(mask)
    }

    /// μ-step: argmin_μ C(μ) + (ρ/2)‖v − μ‖², coordinate block by
    /// coordinate block. Untargeted coordinates pass through unchanged.
    /// When several specs target the same coordinates the proximal maps
    /// compose sequentially in declaration order, an approximation of the
    /// joint minimizer.
    pub fn prox_apply(&self, v: &ParamVector, rho: f64) -> Result<ParamVector, ConstraintError> {
        if rho <= 0.0 {
            return Err(ConstraintError::NonPositiveRho(rho));
        }
        let mut out = v.clone();
        for spec in &self.specs {
            for g in Self::resolve_targets(spec, v)? {
                let slice = &mut out.values_mut()[g.offset()..g.offset() + g.len()];
                match spec.kind {
                    ConstraintKind::L1 => prox_l1(slice, rho),
                    ConstraintKind::L2 => prox_l2(slice, rho),
                    ConstraintKind::NonNegativity => prox_nonneg(slice, rho),
                    ConstraintKind::Orthogonality => {
                        let (rows, cols) = Self::matrix_shape(&g);
                        prox_orth(slice, rows, cols, rho);
                    }
                }
            }
        }
        Ok(out)
    }
}

impl ConstraintSystem for ConstraintSet {
    fn evaluate(&self, theta: &ParamVector) -> Result<ConstraintValue, ConstraintError> {
        self.evaluate_value(theta)
    }
}

/// Anything offering the μ-step proximal map argmin_μ C(μ) + (ρ/2)‖v−μ‖².
/// ADMM is generic over this so that constraints whose proximal map is a
/// projection (e.g. affine equality in convergence tests) plug in next to
/// the built-in catalog.
pub trait ProxSystem {
    fn prox_apply(&self, v: &ParamVector, rho: f64) -> Result<ParamVector, ConstraintError>;
}

impl<T: ProxSystem + ?Sized> ProxSystem for &T {
    fn prox_apply(&self, v: &ParamVector, rho: f64) -> Result<ParamVector, ConstraintError> {
        (**self).prox_apply(v, rho)
    }
}

impl ProxSystem for ConstraintSet {
    fn prox_apply(&self, v: &ParamVector, rho: f64) -> Result<ParamVector, ConstraintError> {
        ConstraintSet::prox_apply(self, v, rho)
    }
}

/// Proximal map of one constraint kind on a flat block of values.
/// `shape` is only consulted for `Orthogonality`, which requires a 2-D
/// shape matching `v`.
pub fn prox(
    kind: ConstraintKind,
    v: &[f64],
    shape: &[usize],
    rho: f64,
) -> Result<Vec<f64>, ConstraintError> {
    if rho <= 0.0 {
        return Err(ConstraintError::NonPositiveRho(rho));
    }
    let mut out = v.to_vec();
    match kind {
        ConstraintKind::L1 => prox_l1(&mut out, rho),
        ConstraintKind::L2 => prox_l2(&mut out, rho),
        ConstraintKind::NonNegativity => prox_nonneg(&mut out, rho),
        ConstraintKind::Orthogonality => {
            if shape.len() != 2 || shape[0] * shape[1] != v.len() {
                return Err(ConstraintError::ShapeError(format!(
                    "orthogonality prox needs a 2-D shape covering {} values, got {:?}",
                    v.len(),
                    shape
                )));
            }
            prox_orth(&mut out, shape[0], shape[1], rho);
        }
    }
    Ok(out)
}

/// Soft-threshold: sign(v_i)·max(0, |v_i| − 1/ρ).
fn prox_l1(v: &mut [f64], rho: f64) {
    let t = 1.0 / rho;
    for x in v {
        let mag = fmath::abs(*x) - t;
        *x = if mag > 0.0 {
            if *x > 0.0 {
                mag
            } else {
                -mag
            }
        } else {
            0.0
        };
    }
}

/// Shrinkage: v / (1 + 2/ρ).
fn prox_l2(v: &mut [f64], rho: f64) {
    let s = 1.0 / (1.0 + 2.0 / rho);
    for x in v {
        *x *= s;
    }
}

/// Piecewise: v_i if v_i ≥ 0; 0 if −1/ρ ≤ v_i < 0; v_i + 1/ρ below.
fn prox_nonneg(v: &mut [f64], rho: f64) {
    let t = 1.0 / rho;
    for x in v {
        if *x < 0.0 {
            *x = if *x < -t { *x + t } else { 0.0 };
        }
    }
}

/// No closed form: minimize ‖μᵀμ − I‖²_F + (ρ/2)‖v − μ‖² by backtracking
/// gradient descent from μ = v, stopping when the step-to-step value
/// change drops below 1e-10 or after 500 iterations. Accepted steps only
/// ever decrease the objective, so the exit value never exceeds the
/// entry value.
fn prox_orth(v: &mut [f64], rows: usize, cols: usize, rho: f64) {
    let target = v.to_vec();
    let objective = |mu: &[f64]| -> (f64, Vec<f64>) {
        let (c, mut grad) = orth_value_grad(mu, rows, cols);
        let mut val = c;
        for (j, g) in grad.iter_mut().enumerate() {
            let d = mu[j] - target[j];
            val += 0.5 * rho * d * d;
            *g += rho * d;
        }
        (val, grad)
    };
    let mut mu = v.to_vec();
    let (mut f_cur, mut grad) = objective(&mu);
    for _ in 0..500 {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2 == 0.0 {
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = mu.iter().zip(&grad).map(|(m, g)| m - step * g).collect();
            let (f_trial, g_trial) = objective(&trial);
            if f_trial <= f_cur - 1e-4 * step * gnorm2 {
                accepted = Some((trial, f_trial, g_trial));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, f_trial, g_trial)) = accepted else {
            break;
        };
        let change = f_cur - f_trial;
        mu = trial;
        f_cur = f_trial;
        grad = g_trial;
        if change < 1e-10 {
            break;
        }
    }
    v.copy_from_slice(&mu);
}
