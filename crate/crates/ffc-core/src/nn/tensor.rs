use crate::error::{Error, Result};

/// Dense row-major f64 tensor. Model inputs are `[B, C, H, W]` batches or
/// `[C, H, W]` single samples; logits are `[B, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch(format!(
                "tensor shape must be nonempty and positive, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} expects {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tensor value at flat index {pos}")));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            values: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
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

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Repack a list of `[C,H,W]` samples into one `[B,C,H,W]` batch.
    pub fn batch_of(samples: &[&Tensor]) -> Result<Tensor> {
        let first = samples
            .first()
            .ok_or_else(|| Error::DimensionMismatch("empty batch".into()))?;
        let mut values = Vec::with_capacity(samples.len() * first.len());
        for s in samples {
            if s.shape() != first.shape() {
                return Err(Error::DimensionMismatch(format!(
                    "inhomogeneous batch: {:?} vs {:?}",
                    s.shape(),
                    first.shape()
                )));
            }
            values.extend_from_slice(s.values());
        }
        let mut shape = vec![samples.len()];
        shape.extend_from_slice(first.shape());
        Tensor::new(shape, values)
    }

    /// View a `[B, ...]` tensor as `B` per-sample slices.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        let per = self.values.len() / self.shape[0];
        self.values.chunks_exact(per)
    }
}
