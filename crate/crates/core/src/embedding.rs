//! Appearance embedding vectors and their distance.

use alloc::vec::Vec;
use core::fmt;

use crate::fmath;

/// Fixed-length appearance feature vector. All vectors of one dataset
/// share the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingError {
    DimensionMismatch { left: usize, right: usize },
    NonFinite,
    Empty,
}

impl fmt::Display for EmbeddingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingError::DimensionMismatch { left, right } => {
                write!(f, "embedding dimension mismatch: {left} vs {right}")
            }
            EmbeddingError::NonFinite => write!(f, "embedding contains a non-finite entry"),
            EmbeddingError::Empty => write!(f, "embedding must be non-empty"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EmbeddingError {}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        fmath::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    /// Scale to unit L2 norm. Zero vectors are returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Self {
            values: self.values.iter().map(|v| v / n).collect(),
        }
    }

    /// Element-wise mean of a non-empty set of same-dimension vectors.
    pub fn mean<'a, I>(vectors: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = &'a EmbeddingVector>,
    {
        let mut iter = vectors.into_iter();
        let first = iter.next().ok_or(EmbeddingError::Empty)?;
        let mut acc: Vec<f64> = first.values.clone();
        let mut count = 1usize;
        for v in iter {
            if v.dim() != acc.len() {
                return Err(EmbeddingError::DimensionMismatch {
                    left: acc.len(),
                    right: v.dim(),
                });
            }
            for (a, x) in acc.iter_mut().zip(&v.values) {
                *a += x;
            }
            count += 1;
        }
        for a in acc.iter_mut() {
            *a /= count as f64;
        }
        Self::new(acc)
    }
}

/// Euclidean distance between two embeddings of equal dimension.
pub fn feature_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let sum: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(fmath::sqrt(sum))
}
