use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

/// A symmetric bilinear form at a point, stored as its upper triangle so
/// symmetry holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymBilinear {
    label: String,
    dim: usize,
    upper: Vec<f64>,
}

impl SymBilinear {
    pub fn zeros(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
            upper: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    /// Build from `entry(i, j)` evaluated for `i <= j`.
    pub fn from_fn(label: impl Into<String>, dim: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                upper.push(entry(i, j));
            }
        }
        Self {
            label: label.into(),
            dim,
            upper,
        }
    }

    /// Symmetric part of a dense row-major matrix.
    pub fn symmetrize(label: impl Into<String>, dim: usize, dense: &[f64]) -> Self {
        Self::from_fn(label, dim, |i, j| 0.5 * (dense[i * dim + j] + dense[j * dim + i]))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.upper[i * (2 * self.dim - i - 1) / 2 + j]
    }

    pub fn apply(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v[i] * self.get(i, j) * w[j];
            }
        }
        acc
    }

    pub fn quad(&self, v: &[f64]) -> f64 {
        self.apply(v, v)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// `a·self + b·other`, keeping this form's label.
    pub fn combine(&self, a: f64, other: &SymBilinear, b: f64) -> SymBilinear {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            label: self.label.clone(),
            dim: self.dim,
            upper: self.upper.iter().zip(&other.upper).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> SymBilinear {
        Self {
            label: self.label.clone(),
            dim: self.dim,
            upper: self.upper.iter().map(|x| k * x).collect(),
        }
    }

    /// Metric trace `g^{ij} B_ij` given the inverse metric.
    pub fn trace_with(&self, inverse: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += inverse[(i, j)] * self.get(i, j);
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute eigenvalue of the coordinate matrix.
    pub fn spectral_norm(&self) -> f64 {
        if self.dim == 1 {
            return self.upper[0].abs();
        }
        SymmetricEigen::new(self.to_matrix())
            .eigenvalues
            .iter()
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn entries(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }
}
