//! In-memory datasets, synthetic generators, and epoch planning.
//!
//! Datasets are immutable after construction and shareable across runs; each
//! training run draws its own shuffled [`EpochPlan`] from its private RNG
//! stream so that sweeps stay reproducible.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fmath;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DataError {
    #[error("feature buffer length {got} is not rows × dim = {expected}")]
    FeatureLengthMismatch { expected: usize, got: usize },
    #[error("label count {got} does not match row count {expected}")]
    LabelCountMismatch { expected: usize, got: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("dataset must contain at least one row")]
    Empty,
}

/// Feature matrix (row-major, n × d) with class labels in `[0, n_classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self, DataError> {
        if labels.is_empty() {
            return Err(DataError::Empty);
        }
        if features.len() != labels.len() * dim {
            return Err(DataError::FeatureLengthMismatch {
                expected: labels.len() * dim,
                got: features.len(),
            });
        }
        for &l in &labels {
            if l >= n_classes {
                return Err(DataError::LabelOutOfRange {
                    label: l,
                    n_classes,
                });
            }
        }
        for (idx, &x) in features.iter().enumerate() {
            if !x.is_finite() {
                return Err(DataError::NonFiniteFeature {
                    row: idx / dim,
                    col: idx % dim,
                });
            }
        }
        Ok(Self {
            features,
            dim,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Per-feature standardization: mean 0, stdev 1, with the stdev floored
    /// at 1e-8 so constant features map to zero instead of NaN.
    pub fn standardize(&mut self) {
        let n = self.len() as f64;
        for j in 0..self.dim {
            let mut mean = 0.0;
            for i in 0..self.len() {
                mean += self.features[i * self.dim + j];
            }
            mean /= n;
            let mut var = 0.0;
            for i in 0..self.len() {
                let dx = self.features[i * self.dim + j] - mean;
                var += dx * dx;
            }
            let std = fmath::fmax(fmath::sqrt(var / n), 1e-8);
            for i in 0..self.len() {
                let x = &mut self.features[i * self.dim + j];
                *x = (*x - mean) / std;
            }
        }
    }

    /// New dataset holding the listed rows (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            dim: self.dim,
            labels,
            n_classes: self.n_classes,
        }
    }

    /// Splits into (first `n_head` rows, remainder).
    pub fn split_at(&self, n_head: usize) -> (Dataset, Dataset) {
        let head: Vec<usize> = (0..n_head.min(self.len())).collect();
        let tail: Vec<usize> = (n_head.min(self.len())..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }
}

/// `k` isotropic unit-variance Gaussian clusters in `d` dimensions, with the
/// mean of class `j` at `separation · e_{j mod d}`. Rows are generated
/// class-major and are deterministic for a given seed.
pub fn synth_gaussians(
    n_per_class: usize,
    k: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Dataset {
    assert!(n_per_class > 0 && k > 0 && d > 0, "counts must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n_per_class * k * d);
    let mut labels = Vec::with_capacity(n_per_class * k);
    for class in 0..k {
        let axis = class % d;
        for _ in 0..n_per_class {
            for j in 0..d {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let mean = if j == axis { separation } else { 0.0 };
                features.push(mean + noise);
            }
            labels.push(class);
        }
    }
    Dataset {
        features,
        dim: d,
        labels,
        n_classes: k,
    }
}

/// One epoch's shuffled visit order, split into contiguous batches of
/// `n_batch` indices (the last batch may be shorter).
#[derive(Debug, Clone)]
pub struct EpochPlan {
    perm: Vec<usize>,
    n_batch: usize,
}

impl EpochPlan {
    pub fn batches(&self) -> impl Iterator<Item = &[usize]> {
        self.perm.chunks(self.n_batch)
    }

    pub fn num_batches(&self) -> usize {
        self.perm.len().div_ceil(self.n_batch)
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }
}

/// Draws a uniformly random permutation of `0..n` from `rng` and plans
/// contiguous batches over it.
pub fn epoch_plan<R: Rng + ?Sized>(n: usize, n_batch: usize, rng: &mut R) -> EpochPlan {
    assert!(n >= 1 && n_batch >= 1, "n and n_batch must be >= 1");
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    EpochPlan { perm, n_batch }
}

/// A mini-batch: a borrowed dataset plus the row indices it covers.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    data: &'a Dataset,
    indices: &'a [usize],
}

impl<'a> Batch<'a> {
    pub fn new(data: &'a Dataset, indices: &'a [usize]) -> Self {
        Self { data, indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn n_classes(&self) -> usize {
        self.data.n_classes()
    }

    /// Features of the i-th example in the batch.
    pub fn row(&self, i: usize) -> &'a [f64] {
        self.data.row(self.indices[i])
    }

    pub fn label(&self, i: usize) -> usize {
        self.data.labels()[self.indices[i]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn epoch_plan_batch_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let plan = epoch_plan(10, 3, &mut rng);
        let sizes: Vec<usize> = plan.batches().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![3, 3, 3, 1]);
    }

    #[test]
    fn epoch_plan_small_data_single_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let plan = epoch_plan(4, 128, &mut rng);
        let sizes: Vec<usize> = plan.batches().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4]);
    }

    #[test]
    fn epoch_plan_is_a_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for n in [1usize, 2, 17, 100] {
            let plan = epoch_plan(n, 7, &mut rng);
            let mut seen = BTreeSet::new();
            for b in plan.batches() {
                for &i in b {
                    assert!(seen.insert(i), "duplicate index {i}");
                }
            }
            assert_eq!(seen.len(), n);
            assert_eq!(*seen.iter().next_back().unwrap(), n - 1);
        }
    }

    #[test]
    fn synth_gaussians_deterministic_under_seed() {
        let a = synth_gaussians(5, 3, 4, 2.0, 42);
        let b = synth_gaussians(5, 3, 4, 2.0, 42);
        assert_eq!(a, b);
        let c = synth_gaussians(5, 3, 4, 2.0, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn synth_gaussians_shape_and_labels() {
        let d = synth_gaussians(10, 3, 5, 1.0, 0);
        assert_eq!(d.len(), 30);
        assert_eq!(d.dim(), 5);
        assert_eq!(d.n_classes(), 3);
        assert_eq!(d.labels().iter().filter(|&&l| l == 2).count(), 10);
    }

    #[test]
    fn standardize_is_idempotent() {
        let mut d = synth_gaussians(50, 2, 3, 4.0, 9);
        d.standardize();
        let once = d.features().to_vec();
        d.standardize();
        for (a, b) in d.features().iter().zip(&once) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn standardize_handles_constant_features() {
        let mut d = Dataset::new(vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0], 2, vec![0, 0, 1], 2).unwrap();
        d.standardize();
        for i in 0..3 {
            assert_eq!(d.row(i)[0], 0.0);
            assert!(d.row(i)[1].is_finite());
        }
    }

    #[test]
    fn dataset_validation_errors() {
        assert!(matches!(
            Dataset::new(vec![1.0; 5], 2, vec![0, 0, 0], 1),
            Err(DataError::FeatureLengthMismatch { .. })
        ));
        assert!(matches!(
            Dataset::new(vec![1.0; 4], 2, vec![0, 3], 2),
            Err(DataError::LabelOutOfRange { .. })
        ));
        assert!(matches!(
            Dataset::new(vec![1.0, f64::NAN], 2, vec![0], 1),
            Err(DataError::NonFiniteFeature { row: 0, col: 1 })
        ));
    }
}
