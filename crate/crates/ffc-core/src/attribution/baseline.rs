//! Fourier-domain reference scorers and spectral transforms of spatial
//! score maps.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::{Domain, ImportanceMap};
use crate::error::{Error, Result};
use crate::fourier::{
    dft2, frequency_magnitude, idft2_complex, FeatureIndex, MultiSpectrum, RealGrid, Spectrum,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    /// I.i.d. uniform scores from a seeded stream.
    Random { seed: u64 },
    /// Low frequencies first: score = -(centered frequency magnitude).
    SortedFreq,
    /// Signal magnitude: score = |F_X(u,v)| per channel.
    Energy,
}

pub fn baseline_scores(kind: BaselineKind, spectra: &MultiSpectrum) -> Result<ImportanceMap> {
    let (c, h, w) = (
        spectra.channel_count(),
        spectra.height(),
        spectra.width(),
    );
    let scores = match kind {
        BaselineKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..c * h * w).map(|_| rng.gen_range(0.0..1.0)).collect()
        }
        BaselineKind::SortedFreq => {
            let mut scores = Vec::with_capacity(c * h * w);
            for channel in 0..c {
                for u in 0..h {
                    for v in 0..w {
                        let idx = FeatureIndex { channel, u, v };
                        scores.push(-frequency_magnitude(idx, h, w));
                    }
                }
            }
            scores
        }
        BaselineKind::Energy => {
            let mut scores = Vec::with_capacity(c * h * w);
            for channel in spectra.channels() {
                scores.extend(channel.values().iter().map(|c| c.norm()));
            }
            scores
        }
    };
    ImportanceMap::new(Domain::Fourier, (c, h, w), scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumDirection {
    Fft,
    Ifft,
}

/// Move a spatial score map into the Fourier domain: per channel, take the
/// modulus of the forward or inverse transform of the score grid.
pub fn spectrum_of_scores(
    map: &ImportanceMap,
    direction: SpectrumDirection,
) -> Result<ImportanceMap> {
    if map.domain() != Domain::Spatial {
        return Err(Error::InvalidConfig(
            "spectrum_of_scores expects a spatial map".into(),
        ));
    }
    let (c, h, w) = map.dims();
    let mut scores = Vec::with_capacity(c * h * w);
    for chunk in map.scores().chunks(h * w) {
        let transformed = match direction {
            SpectrumDirection::Fft => dft2(&RealGrid::new(h, w, chunk.to_vec())?),
            SpectrumDirection::Ifft => {
                let complex: Vec<Complex64> =
                    chunk.iter().map(|&s| Complex64::new(s, 0.0)).collect();
                idft2_complex(&Spectrum::new(h, w, complex, false)?)
            }
        };
        scores.extend(transformed.values().iter().map(|c| c.norm()));
    }
    ImportanceMap::new(Domain::Fourier, (c, h, w), scores)
}
