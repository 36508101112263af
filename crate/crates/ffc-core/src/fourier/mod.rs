//! Exact 2D discrete Fourier transforms, spectral energy accounting and
//! component deletion.
//!
//! The forward transform is unnormalized (`F(0,0)` is the plain sum of the
//! grid) and the inverse carries the full `1/(m*n)` factor, so
//! `idft2(dft2(g)) == g` up to rounding. Deleting a component means setting
//! it to exactly `0+0j`; with conjugate pairing the result of a deletion is
//! guaranteed to invert back to a real grid.

mod delete;
mod serial;
mod transform;

pub use delete::{conjugate_pair, delete_components, frequency_magnitude, is_self_conjugate};
pub use serial::{read_multispectrum, write_multispectrum, SPECTRUM_MAGIC};
pub use transform::{dft2, idft2, idft2_complex};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A real-valued spatial signal: one channel of an image or gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::DimensionMismatch(format!(
                "grid dimensions must be positive, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "grid {height}x{width} expects {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "grid value at flat index {pos}"
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// One channel of a complex Fourier representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    values: Vec<Complex64>,
    from_real: bool,
}

/// Absolute tolerance for the conjugate-symmetry invariant of spectra
/// derived from real grids.
pub const CONJ_SYMMETRY_TOL: f64 = 1e-9;

impl Spectrum {
    /// Wrap raw complex values. `from_real` marks the spectrum as derived
    /// from a real grid, which promises conjugate symmetry.
    pub fn new(
        height: usize,
        width: usize,
        values: Vec<Complex64>,
        from_real: bool,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::DimensionMismatch(format!(
                "spectrum dimensions must be positive, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "spectrum {height}x{width} expects {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(pos) = values
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite(format!(
                "spectrum component at flat index {pos}"
            )));
        }
        let s = Self {
            height,
            width,
            values,
            from_real,
        };
        if from_real {
            let residual = s.symmetry_residual();
            if residual > CONJ_SYMMETRY_TOL {
                return Err(Error::SymmetryViolation {
                    residual,
                    limit: CONJ_SYMMETRY_TOL,
                });
            }
        }
        Ok(s)
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![Complex64::new(0.0, 0.0); height * width],
            from_real: true,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn from_real(&self) -> bool {
        self.from_real
    }

    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.values[u * self.width + v]
    }

    pub(crate) fn set(&mut self, u: usize, v: usize, value: Complex64) {
        self.values[u * self.width + v] = value;
    }

    pub(crate) fn clear_from_real(&mut self) {
        self.from_real = false;
    }

    /// Largest deviation from `F(u,v) = conj(F(-u mod m, -v mod n))`.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for u in 0..self.height {
            for v in 0..self.width {
                let a = self.get(u, v);
                let b = self
                    .get((self.height - u) % self.height, (self.width - v) % self.width)
                    .conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    /// Magnitude `|F(u,v)| = sqrt(re^2 + im^2)` of one component.
    pub fn energy(&self, u: usize, v: usize) -> Result<f64> {
        if u >= self.height || v >= self.width {
            return Err(Error::IndexOutOfBounds {
                channel: 0,
                u,
                v,
                channels: 1,
                height: self.height,
                width: self.width,
            });
        }
        Ok(self.get(u, v).norm())
    }
}

/// Address of one Fourier feature: channel plus frequency bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureIndex {
    pub channel: usize,
    pub u: usize,
    pub v: usize,
}

impl FeatureIndex {
    pub fn new(channel: usize, u: usize, v: usize) -> Self {
        Self { channel, u, v }
    }
}

/// Per-channel spectra of a multichannel input. All channels share the same
/// grid dimensions; feature identity is `(channel, u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSpectrum {
    channels: Vec<Spectrum>,
}

impl MultiSpectrum {
    pub fn new(channels: Vec<Spectrum>) -> Result<Self> {
        let first = channels.first().ok_or_else(|| {
            Error::DimensionMismatch("multispectrum needs at least one channel".into())
        })?;
        let (h, w) = (first.height(), first.width());
        for (i, c) in channels.iter().enumerate() {
            if c.height() != h || c.width() != w {
                return Err(Error::DimensionMismatch(format!(
                    "channel {i} is {}x{}, expected {h}x{w}",
                    c.height(),
                    c.width()
                )));
            }
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[Spectrum] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn feature_count(&self) -> usize {
        self.channels.len() * self.height() * self.width()
    }

    pub fn check_bounds(&self, idx: FeatureIndex) -> Result<()> {
        if idx.channel >= self.channels.len() || idx.u >= self.height() || idx.v >= self.width() {
            return Err(Error::IndexOutOfBounds {
                channel: idx.channel,
                u: idx.u,
                v: idx.v,
                channels: self.channels.len(),
                height: self.height(),
                width: self.width(),
            });
        }
        Ok(())
    }

    pub fn get(&self, idx: FeatureIndex) -> Complex64 {
        self.channels[idx.channel].get(idx.u, idx.v)
    }

    pub(crate) fn channels_mut(&mut self) -> &mut [Spectrum] {
        &mut self.channels
    }
}
