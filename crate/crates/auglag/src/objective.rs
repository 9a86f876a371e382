//! Differentiable data-fidelity objectives with exact analytic gradients.
//!
//! Two objectives are provided: a softmax-cross-entropy MLP (ReLU hidden
//! layers, manual reverse-mode gradients) and a quadratic least-squares
//! objective used as a convergence oracle by the deterministic methods.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Batch;
use crate::fmath;
use crate::params::ParamVector;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("batch is empty")]
    EmptyBatch,
}

/// Batched objective `F(θ; ξ)`: mean loss over a mini-batch plus gradient
/// with respect to every parameter.
pub trait Objective {
    fn value_grad(
        &self,
        theta: &ParamVector,
        batch: Batch<'_>,
    ) -> Result<(f64, Vec<f64>), ObjectiveError>;

    /// Class predictions for the batch, when the objective is a classifier.
    fn predict(&self, _theta: &ParamVector, _batch: Batch<'_>) -> Option<Vec<usize>> {
        None
    }
}

/// Deterministic objective `F(θ)` over its full data (or no data at all);
/// the inner problems of the deterministic methods minimize these.
pub trait FullObjective {
    fn value_grad_full(&self, theta: &ParamVector) -> Result<(f64, Vec<f64>), ObjectiveError>;
}

/// Adapter exposing a batched objective on an entire dataset as a
/// deterministic one.
pub struct OnDataset<'a, O> {
    pub objective: &'a O,
    pub data: &'a crate::data::Dataset,
}

impl<'a, O: Objective> FullObjective for OnDataset<'a, O> {
    fn value_grad_full(&self, theta: &ParamVector) -> Result<(f64, Vec<f64>), ObjectiveError> {
        let idx = self.data.all_indices();
        self.objective
            .value_grad(theta, Batch::new(self.data, &idx))
    }
}

/// `F(θ) = ½‖Aθ − b‖²` with gradient `Aᵀ(Aθ − b)`; `A` is n×n row-major.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    a: Vec<f64>,
    b: Vec<f64>,
    n: usize,
}

impl QuadraticObjective {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, ObjectiveError> {
        let n = b.len();
        if a.len() != n * n {
            return Err(ObjectiveError::DimensionMismatch(format!(
                "A has {} entries, expected {}×{}",
                a.len(),
                n,
                n
            )));
        }
        Ok(Self { a, b, n })
    }

    fn residual(&self, theta: &[f64]) -> Vec<f64> {
        self.a
            .chunks_exact(self.n)
            .zip(&self.b)
            .map(|(row, &bi)| row.iter().zip(theta).map(|(aij, tj)| aij * tj).sum::<f64>() - bi)
            .collect()
    }
}

impl FullObjective for QuadraticObjective {
    fn value_grad_full(&self, theta: &ParamVector) -> Result<(f64, Vec<f64>), ObjectiveError> {
        if theta.len() != self.n {
            return Err(ObjectiveError::DimensionMismatch(format!(
                "theta has {} entries, expected {}",
                theta.len(),
                self.n
            )));
        }
        let r = self.residual(theta.values());
        let value = 0.5 * r.iter().map(|x| x * x).sum::<f64>();
        let mut grad = vec![0.0; self.n];
        for (row, &ri) in self.a.chunks_exact(self.n).zip(&r) {
            for (g, &aij) in grad.iter_mut().zip(row) {
                *g += aij * ri;
            }
        }
        if !value.is_finite() {
            return Err(ObjectiveError::NonFiniteLoss);
        }
        Ok((value, grad))
    }
}

// The quadratic ignores mini-batch contents, which lets the stochastic
// methods degenerate to their deterministic counterparts in tests.
impl Objective for QuadraticObjective {
    fn value_grad(
        &self,
        theta: &ParamVector,
        _batch: Batch<'_>,
    ) -> Result<(f64, Vec<f64>), ObjectiveError> {
        self.value_grad_full(theta)
    }
}

/// Layer widths of a fully connected ReLU network ending in softmax
/// cross-entropy: `[d_in, hidden…, K]`. No hidden entries means softmax
/// regression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    widths: Vec<usize>,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>) -> Result<Self, ObjectiveError> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(ObjectiveError::ShapeMismatch(
                "layer widths need at least [d_in, n_classes], all positive".into(),
            ));
        }
        Ok(Self { widths })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Group layout: `w0 [d_in × h0], b0 [h0], w1 …` Weight matrices are
    /// `fan_in × fan_out`, so the layer map is `z = xᵀW + b`.
    pub fn param_groups(&self) -> Vec<(String, Vec<usize>)> {
        let mut groups = Vec::new();
        for l in 0..self.n_layers() {
            groups.push((format!("w{l}"), vec![self.widths[l], self.widths[l + 1]]));
            groups.push((format!("b{l}"), vec![self.widths[l + 1]]));
        }
        groups
    }

    /// Zero-initialized parameter vector with this spec's layout.
    pub fn zero_params(&self) -> ParamVector {
        let groups = self.param_groups();
        let refs: Vec<(&str, &[usize])> = groups
            .iter()
            .map(|(n, s)| (n.as_str(), s.as_slice()))
            .collect();
        ParamVector::zeros(&refs).expect("spec layout is valid by construction")
    }

    /// Glorot-uniform weights in `±√(6/(fan_in+fan_out))`, zero biases,
    /// drawn from a ChaCha stream seeded with `seed`.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let mut theta = self.zero_params();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in 0..self.n_layers() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let bound = fmath::sqrt(6.0 / (fan_in + fan_out) as f64);
            let mut w = theta
                .view_group_mut(&format!("w{l}"))
                .expect("group exists");
            for v in w.as_mut_slice() {
                *v = rng.random_range(-bound..=bound);
            }
        }
        theta
    }
}

/// Softmax cross-entropy MLP with manual reverse-mode gradients.
#[derive(Debug, Clone)]
pub struct MlpObjective {
    spec: MlpSpec,
}

struct Forward {
    // activations[0] is the input; activations[l+1] the output of layer l
    activations: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

impl MlpObjective {
    pub fn new(spec: MlpSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    fn check_layout(&self, theta: &ParamVector, batch: &Batch<'_>) -> Result<(), ObjectiveError> {
        if batch.dim() != self.spec.input_dim() {
            return Err(ObjectiveError::ShapeMismatch(format!(
                "batch dim {} vs model input {}",
                batch.dim(),
                self.spec.input_dim()
            )));
        }
        for (name, shape) in self.spec.param_groups() {
            match theta.group(&name) {
                Ok(g) if g.shape() == shape.as_slice() => {}
                _ => {
                    return Err(ObjectiveError::ShapeMismatch(format!(
                        "parameter group `{name}` missing or misshapen"
                    )))
                }
            }
        }
        Ok(())
    }

    fn forward(&self, theta: &ParamVector, batch: &Batch<'_>) -> Forward {
        let n = batch.len();
        let widths = self.spec.widths();
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(widths.len());
        let mut input = Vec::with_capacity(n * widths[0]);
        for i in 0..n {
            input.extend_from_slice(batch.row(i));
        }
        activations.push(input);

        let mut logits = Vec::new();
        for l in 0..self.spec.n_layers() {
            let (din, dout) = (widths[l], widths[l + 1]);
            let w = theta.view_group(&format!("w{l}")).unwrap();
            let b = theta.view_group(&format!("b{l}")).unwrap();
            let prev = &activations[l];
            let mut z = vec![0.0; n * dout];
            for i in 0..n {
                let x = &prev[i * din..(i + 1) * din];
                let zi = &mut z[i * dout..(i + 1) * dout];
                zi.copy_from_slice(b.as_slice());
                for (p, &xp) in x.iter().enumerate() {
                    if xp != 0.0 {
                        let wrow = &w.as_slice()[p * dout..(p + 1) * dout];
                        for (q, &wpq) in wrow.iter().enumerate() {
                            zi[q] += xp * wpq;
                        }
                    }
                }
            }
            if l + 1 == self.spec.n_layers() {
                logits = z.clone();
                activations.push(z);
            } else {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                activations.push(z);
            }
        }
        Forward {
            activations,
            logits,
        }
    }
}

impl Objective for MlpObjective {
    fn value_grad(
        &self,
        theta: &ParamVector,
        batch: Batch<'_>,
    ) -> Result<(f64, Vec<f64>), ObjectiveError> {
        if batch.is_empty() {
            return Err(ObjectiveError::EmptyBatch);
        }
        self.check_layout(theta, &batch)?;
        let n = batch.len();
        let widths = self.spec.widths();
        let k = self.spec.n_classes();
        let fwd = self.forward(theta, &batch);

        // Mean cross-entropy via shifted log-sum-exp, and dL/dz = (softmax − onehot)/n.
        let mut loss = 0.0;
        let mut dz = vec![0.0; n * k];
        for i in 0..n {
            let zi = &fwd.logits[i * k..(i + 1) * k];
            let m = zi.iter().cloned().fold(f64::NEG_INFINITY, fmath::fmax);
            let mut sum = 0.0;
            for &z in zi {
                sum += fmath::exp(z - m);
            }
            let lse = m + fmath::ln(sum);
            let label = batch.label(i);
            loss += lse - zi[label];
            let dzi = &mut dz[i * k..(i + 1) * k];
            for (c, &z) in zi.iter().enumerate() {
                dzi[c] = fmath::exp(z - lse) / n as f64;
            }
            dzi[label] -= 1.0 / n as f64;
        }
        loss /= n as f64;
        if !loss.is_finite() {
            return Err(ObjectiveError::NonFiniteLoss);
        }

        // Backward pass, writing gradients at each group's flat offset.
        let mut grad = vec![0.0; theta.len()];
        let mut delta = dz; // dL/dz for the current layer, n × dout
        for l in (0..self.spec.n_layers()).rev() {
            let (din, dout) = (widths[l], widths[l + 1]);
            let w_desc = theta.group(&format!("w{l}")).unwrap();
            let b_desc = theta.group(&format!("b{l}")).unwrap();
            let prev = &fwd.activations[l];
            {
                let gw = &mut grad[w_desc.offset()..w_desc.offset() + w_desc.len()];
                for i in 0..n {
                    let x = &prev[i * din..(i + 1) * din];
                    let di = &delta[i * dout..(i + 1) * dout];
                    for (p, &xp) in x.iter().enumerate() {
                        if xp != 0.0 {
                            let gr = &mut gw[p * dout..(p + 1) * dout];
                            for (q, &dq) in di.iter().enumerate() {
                                gr[q] += xp * dq;
                            }
                        }
                    }
                }
            }
            {
                let gb = &mut grad[b_desc.offset()..b_desc.offset() + b_desc.len()];
                for i in 0..n {
                    let di = &delta[i * dout..(i + 1) * dout];
                    for (q, &dq) in di.iter().enumerate() {
                        gb[q] += dq;
                    }
                }
            }
            if l > 0 {
                // Propagate through W, then gate by ReLU' of the previous
                // pre-activation (ReLU'(0) taken as 0; the stored activation
                // is zero exactly where the pre-activation was clamped).
                let w = theta.view_group(&format!("w{l}")).unwrap();
                let mut next = vec![0.0; n * din];
                for i in 0..n {
                    let di = &delta[i * dout..(i + 1) * dout];
                    let ni = &mut next[i * din..(i + 1) * din];
                    let act = &prev[i * din..(i + 1) * din];
                    for p in 0..din {
                        if act[p] > 0.0 {
                            let wrow = &w.as_slice()[p * dout..(p + 1) * dout];
                            let mut acc = 0.0;
                            for (q, &wpq) in wrow.iter().enumerate() {
                                acc += wpq * di[q];
                            }
                            ni[p] = acc;
                        }
                    }
                }
                delta = next;
            }
        }
        Ok((loss, grad))
    }

    fn predict(&self, theta: &ParamVector, batch: Batch<'_>) -> Option<Vec<usize>> {
        if batch.is_empty() || self.check_layout(theta, &batch).is_err() {
            return None;
        }
        let k = self.spec.n_classes();
        let fwd = self.forward(theta, &batch);
        let mut preds = Vec::with_capacity(batch.len());
        for i in 0..batch.len() {
            let zi = &fwd.logits[i * k..(i + 1) * k];
            let mut best = 0;
            for (c, &z) in zi.iter().enumerate() {
                if z > zi[best] {
                    best = c;
                }
            }
            preds.push(best);
        }
        Some(preds)
    }
}
