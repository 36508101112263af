//! Importance scoring: rectification of an input against a frozen network,
//! Fourier-domain projection scores, spatial gradient baselines, and
//! Fourier-domain baselines.

pub mod baseline;
pub mod ffc;
pub mod rectify;
pub mod spatial;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{dft2, idft2, FeatureIndex, MultiSpectrum, RealGrid, Spectrum};
use crate::io::{
    expect_eof, expect_magic, read_f64_vec_le, read_u32_le, write_f64_slice_le, write_magic,
    write_u32_le,
};
use crate::nn::{Checkpoint, Tensor};

pub use baseline::{baseline_scores, spectrum_of_scores, BaselineKind, SpectrumDirection};
pub use ffc::{ffc, ffc_importance, ffc_project, ffc_with_trace};
pub use rectify::{rectify, RectificationTrace};
pub use spatial::{input_x_gradient, integrated_gradients, smoothgrad};

/// Which class the scored explanation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetPolicy {
    /// The model's own argmax on the unmodified input.
    Predicted,
    /// A caller-supplied class, typically the dataset label.
    Label(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionDenominator {
    /// Divide by the magnitude of the rectified (expected) component.
    Expected,
    /// Divide by the magnitude of the original component.
    Original,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributionConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub target: TargetPolicy,
    /// Denominators smaller than this in magnitude zero the projection.
    pub epsilon: f64,
    pub denominator: ProjectionDenominator,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1000.0,
            iterations: 50,
            target: TargetPolicy::Predicted,
            epsilon: 1e-12,
            denominator: ProjectionDenominator::Expected,
        }
    }
}

impl AttributionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Resolve the class a score map explains. `Predicted` is frozen from the
/// unmodified input before any rectification step.
pub fn resolve_target(ckpt: &Checkpoint, x: &Tensor, policy: TargetPolicy) -> Result<usize> {
    match policy {
        TargetPolicy::Predicted => ckpt.predict_single(x),
        TargetPolicy::Label(class) => {
            if class >= ckpt.spec().classes {
                return Err(Error::InvalidConfig(format!(
                    "target class {class} out of range for {} classes",
                    ckpt.spec().classes
                )));
            }
            Ok(class)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Fourier,
    Spatial,
}

/// One score per feature: Fourier component (channel, u, v) or pixel
/// (channel, row, col), row-major. Scores are finite; higher means more
/// important.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceMap {
    domain: Domain,
    channels: usize,
    height: usize,
    width: usize,
    scores: Vec<f64>,
}

impl ImportanceMap {
    pub fn new(
        domain: Domain,
        dims: (usize, usize, usize),
        scores: Vec<f64>,
    ) -> Result<Self> {
        let (channels, height, width) = dims;
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::DimensionMismatch(format!(
                "importance map dimensions must be positive, got {dims:?}"
            )));
        }
        if scores.len() != channels * height * width {
            return Err(Error::DimensionMismatch(format!(
                "importance map {dims:?} expects {} scores, got {}",
                channels * height * width,
                scores.len()
            )));
        }
        if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("score at flat index {pos}")));
        }
        Ok(Self {
            domain,
            channels,
            height,
            width,
            scores,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn score(&self, idx: FeatureIndex) -> Result<f64> {
        self.check_bounds(idx)?;
        Ok(self.scores[self.flat(idx)])
    }

    fn check_bounds(&self, idx: FeatureIndex) -> Result<()> {
        if idx.channel >= self.channels || idx.u >= self.height || idx.v >= self.width {
            return Err(Error::IndexOutOfBounds {
                channel: idx.channel,
                u: idx.u,
                v: idx.v,
                channels: self.channels,
                height: self.height,
                width: self.width,
            });
        }
        Ok(())
    }

    fn flat(&self, idx: FeatureIndex) -> usize {
        (idx.channel * self.height + idx.u) * self.width + idx.v
    }

    pub fn feature_of_flat(&self, flat: usize) -> FeatureIndex {
        let v = flat % self.width;
        let u = (flat / self.width) % self.height;
        let channel = flat / (self.width * self.height);
        FeatureIndex { channel, u, v }
    }

    /// Features sorted by descending score; ties break toward the lower
    /// flat index so orderings are total and reproducible.
    pub fn ranked_desc(&self) -> Vec<FeatureIndex> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[b]
                .partial_cmp(&self.scores[a])
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        order.into_iter().map(|f| self.feature_of_flat(f)).collect()
    }

    /// Mean score per sample-wide map.
    pub fn mean(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}

pub const IMPORTANCE_MAGIC: &[u8; 8] = b"FFCIMP01";
const IMPORTANCE: &str = "FFCIMP01";

pub fn write_importance_map(path: &Path, map: &ImportanceMap) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_magic(&mut w, IMPORTANCE_MAGIC)?;
    let tag = match map.domain {
        Domain::Fourier => b'F',
        Domain::Spatial => b'S',
    };
    w.write_all(&[tag])?;
    for d in [map.channels, map.height, map.width] {
        let d32 = u32::try_from(d)
            .map_err(|_| Error::format(IMPORTANCE, format!("dimension {d} exceeds u32")))?;
        write_u32_le(&mut w, d32)?;
    }
    write_f64_slice_le(&mut w, &map.scores)?;
    w.flush()?;
    Ok(())
}

pub fn read_importance_map(path: &Path) -> Result<ImportanceMap> {
    let mut r = BufReader::new(File::open(path)?);
    expect_magic(&mut r, IMPORTANCE_MAGIC, IMPORTANCE)?;
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)
        .map_err(|_| Error::format(IMPORTANCE, "truncated domain tag"))?;
    let domain = match tag[0] {
        b'F' => Domain::Fourier,
        b'S' => Domain::Spatial,
        other => {
            return Err(Error::format(
                IMPORTANCE,
                format!("unknown domain tag 0x{other:02x}"),
            ))
        }
    };
    let channels = read_u32_le(&mut r, IMPORTANCE)? as usize;
    let height = read_u32_le(&mut r, IMPORTANCE)? as usize;
    let width = read_u32_le(&mut r, IMPORTANCE)? as usize;
    let count = crate::io::checked_len(&[channels, height, width], IMPORTANCE)?;
    let scores = read_f64_vec_le(&mut r, count, IMPORTANCE)?;
    expect_eof(&mut r, IMPORTANCE)?;
    ImportanceMap::new(domain, (channels, height, width), scores)
}

/// Per-channel forward transform of a [C,H,W] tensor.
pub fn tensor_spectra(x: &Tensor) -> Result<MultiSpectrum> {
    let shape = x.shape();
    if shape.len() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "expected a [C,H,W] tensor, got shape {:?}",
            shape
        )));
    }
    let (h, w) = (shape[1], shape[2]);
    let channels = x
        .values()
        .chunks(h * w)
        .map(|chunk| Ok(dft2(&RealGrid::new(h, w, chunk.to_vec())?)))
        .collect::<Result<Vec<Spectrum>>>()?;
    MultiSpectrum::new(channels)
}

/// Per-channel inverse transform back to a [C,H,W] tensor. Fails if any
/// channel's spectrum lost conjugate symmetry.
pub fn spectra_tensor(spectra: &MultiSpectrum) -> Result<Tensor> {
    let (c, h, w) = (
        spectra.channel_count(),
        spectra.height(),
        spectra.width(),
    );
    let mut values = Vec::with_capacity(c * h * w);
    for channel in spectra.channels() {
        values.extend(idft2(channel)?.into_values());
    }
    Tensor::new(vec![c, h, w], values)
}
