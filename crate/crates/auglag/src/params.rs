//! Flat parameter storage with named, shaped group views.
//!
//! Constraints target specific layers or matrices by group name; optimizers
//! see one contiguous `&[f64]`. Matrix groups are row-major and limited to
//! two dimensions.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

/// Name, offset, and shape of one contiguous slice of a [`ParamVector`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDesc {
    name: String,
    offset: usize,
    shape: Vec<usize>,
}

impl GroupDesc {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// One entry for vectors, two (rows, cols) for matrices.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_matrix(&self) -> bool {
        self.shape.len() == 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("unknown parameter group `{0}`")]
    UnknownGroup(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("duplicate parameter group `{0}`")]
    DuplicateGroup(String),
    #[error("invalid shape for group `{0}`: must be 1-D or 2-D with positive dims")]
    InvalidShape(String),
}

/// Flat `f64` parameter store carved into named groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    groups: Vec<GroupDesc>,
}

impl ParamVector {
    /// Builds a zero-initialized vector from `(name, shape)` pairs, laid out
    /// contiguously in declaration order.
    pub fn zeros(groups: &[(&str, &[usize])]) -> Result<Self, ParamError> {
        let mut descs: Vec<GroupDesc> = Vec::with_capacity(groups.len());
        let mut offset = 0;
        for (name, shape) in groups {
            if shape.is_empty() || shape.len() > 2 || shape.contains(&0) {
                return Err(ParamError::InvalidShape(name.to_string()));
            }
            if descs.iter().any(|g| g.name == *name) {
                return Err(ParamError::DuplicateGroup(name.to_string()));
            }
            let size: usize = shape.iter().product();
            descs.push(GroupDesc {
                name: name.to_string(),
                offset,
                shape: shape.to_vec(),
            });
            offset += size;
        }
        Ok(Self {
            values: vec![0.0; offset],
            groups: descs,
        })
    }

    /// Like [`ParamVector::zeros`] but with the flat values supplied.
    pub fn from_values(groups: &[(&str, &[usize])], values: Vec<f64>) -> Result<Self, ParamError> {
        let mut p = Self::zeros(groups)?;
        if values.len() != p.values.len() {
            return Err(ParamError::LengthMismatch {
                expected: p.values.len(),
                got: values.len(),
            });
        }
        p.values = values;
        Ok(p)
    }

    /// Single 1-D group named `name` holding `values`. Handy for test
    /// objectives where the layout is just "one vector".
    pub fn flat(name: &str, values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "flat parameter vector must be nonempty");
        let groups = vec![GroupDesc {
            name: name.to_string(),
            offset: 0,
            shape: vec![values.len()],
        }];
        Self { values, groups }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn groups(&self) -> &[GroupDesc] {
        &self.groups
    }

    pub fn group(&self, name: &str) -> Result<&GroupDesc, ParamError> {
        self.groups
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| ParamError::UnknownGroup(name.to_string()))
    }

    /// Read-only view of a group, reshaped per its descriptor.
    pub fn view_group(&self, name: &str) -> Result<GroupView<'_>, ParamError> {
        let g = self.group(name)?;
        Ok(GroupView {
            data: &self.values[g.offset..g.offset + g.len()],
            shape: g.shape.clone(),
        })
    }

    /// Mutable view of a group; writes go straight to the flat store.
    pub fn view_group_mut(&mut self, name: &str) -> Result<GroupViewMut<'_>, ParamError> {
        let g = self.group(name)?.clone();
        Ok(GroupViewMut {
            data: &mut self.values[g.offset..g.offset + g.len()],
            shape: g.shape,
        })
    }

    /// `values ← values + alpha · d`, elementwise.
    pub fn axpy(&mut self, alpha: f64, d: &[f64]) -> Result<(), ParamError> {
        if d.len() != self.values.len() {
            return Err(ParamError::LengthMismatch {
                expected: self.values.len(),
                got: d.len(),
            });
        }
        for (v, di) in self.values.iter_mut().zip(d) {
            *v += alpha * di;
        }
        Ok(())
    }
}

/// Borrowed, shaped, read-only slice of a [`ParamVector`] group.
#[derive(Debug, Clone)]
pub struct GroupView<'a> {
    data: &'a [f64],
    shape: Vec<usize>,
}

impl<'a> GroupView<'a> {
    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() == 2 {
            self.shape[1]
        } else {
            1
        }
    }

    /// Matrix element (row-major); panics if the group is 1-D.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert_eq!(self.shape.len(), 2, "get(i, j) requires a matrix group");
        self.data[row * self.shape[1] + col]
    }
}

/// Borrowed, shaped, mutable slice of a [`ParamVector`] group.
#[derive(Debug)]
pub struct GroupViewMut<'a> {
    data: &'a mut [f64],
    shape: Vec<usize>,
}

impl<'a> GroupViewMut<'a> {
    pub fn as_slice(&self) -> &[f64] {
        self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        self.data
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Matrix element (row-major); panics if the group is 1-D.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert_eq!(self.shape.len(), 2, "get(i, j) requires a matrix group");
        self.data[row * self.shape[1] + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert_eq!(self.shape.len(), 2, "set(i, j) requires a matrix group");
        self.data[row * self.shape[1] + col] = value;
    }
}
