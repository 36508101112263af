//! In-memory labeled sample collections.

use crate::error::{Error, Result};
use crate::nn::model::ModelSpec;
use crate::nn::planted::PlantedInfo;
use crate::nn::tensor::Tensor;

/// Samples are [C,H,W] tensors with one label each; every sample shares a
/// shape and every label is below `classes`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    samples: Vec<Tensor>,
    labels: Vec<usize>,
    classes: usize,
    planted: Option<PlantedInfo>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<Tensor>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidConfig("dataset must be nonempty".into()));
        }
        if samples.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if classes == 0 {
            return Err(Error::InvalidConfig("class count must be positive".into()));
        }
        let shape = samples[0].shape().to_vec();
        if shape.len() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "samples must be rank 3 [C,H,W], got rank {}",
                shape.len()
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.shape() != shape.as_slice() {
                return Err(Error::DimensionMismatch(format!(
                    "sample {i} has shape {:?}, expected {:?}",
                    s.shape(),
                    shape
                )));
            }
        }
        for (i, &l) in labels.iter().enumerate() {
            if l >= classes {
                return Err(Error::InvalidConfig(format!(
                    "label {l} at index {i} exceeds class count {classes}"
                )));
            }
        }
        Ok(Self {
            samples,
            labels,
            classes,
            planted: None,
        })
    }

    pub fn with_planted(mut self, planted: PlantedInfo) -> Self {
        self.planted = Some(planted);
        self
    }

    /// Same samples, replacement labels. Keeps planted metadata.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        let mut out = Self::new(self.samples.clone(), labels, self.classes)?;
        out.planted = self.planted.clone();
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn samples(&self) -> &[Tensor] {
        &self.samples
    }

    pub fn sample(&self, index: usize) -> &Tensor {
        &self.samples[index]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    pub fn planted(&self) -> Option<&PlantedInfo> {
        self.planted.as_ref()
    }

    /// Shape of one sample as (channels, height, width).
    pub fn sample_shape(&self) -> (usize, usize, usize) {
        let s = self.samples[0].shape();
        (s[0], s[1], s[2])
    }

    pub fn check_against(&self, spec: &ModelSpec) -> Result<()> {
        if self.sample_shape() != spec.input {
            return Err(Error::DimensionMismatch(format!(
                "dataset samples are {:?} but the model expects {:?}",
                self.sample_shape(),
                spec.input
            )));
        }
        if self.classes != spec.classes {
            return Err(Error::DimensionMismatch(format!(
                "dataset has {} classes but the model has {}",
                self.classes, spec.classes
            )));
        }
        Ok(())
    }

    /// Stack the selected samples into a [B,C,H,W] batch with their labels.
    pub fn gather(&self, indices: &[usize]) -> Result<(Tensor, Vec<usize>)> {
        let mut refs = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let s = self.samples.get(i).ok_or_else(|| {
                Error::DimensionMismatch(format!(
                    "index {i} out of range for dataset of {}",
                    self.samples.len()
                ))
            })?;
            refs.push(s);
            labels.push(self.labels[i]);
        }
        Ok((Tensor::batch_of(&refs)?, labels))
    }
}
