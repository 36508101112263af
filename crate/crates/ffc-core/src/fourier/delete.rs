//! Component deletion and frequency geometry.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::error::Result;
use crate::fourier::{FeatureIndex, MultiSpectrum};

/// The partner index that must be zeroed together with `(u,v)` to keep a
/// real signal real: `(channel, (-u) mod m, (-v) mod n)`. Self-conjugate
/// points (DC and the Nyquist lines of even dimensions) map to themselves.
pub fn conjugate_pair(idx: FeatureIndex, height: usize, width: usize) -> FeatureIndex {
    FeatureIndex {
        channel: idx.channel,
        u: (height - idx.u % height) % height,
        v: (width - idx.v % width) % width,
    }
}

/// Whether `(u,v)` is its own conjugate partner.
pub fn is_self_conjugate(idx: FeatureIndex, height: usize, width: usize) -> bool {
    conjugate_pair(idx, height, width) == idx
}

/// Centered frequency magnitude `sqrt(u'^2 + v'^2)` where `u' = u` for
/// `u <= m/2` and `u - m` otherwise (likewise `v'`).
pub fn frequency_magnitude(idx: FeatureIndex, height: usize, width: usize) -> f64 {
    let center = |coord: usize, dim: usize| -> f64 {
        if 2 * coord <= dim {
            coord as f64
        } else {
            coord as f64 - dim as f64
        }
    };
    let cu = center(idx.u, height);
    let cv = center(idx.v, width);
    (cu * cu + cv * cv).sqrt()
}

/// Zero the listed components, and their conjugate partners when
/// `pair_conjugates` is set. The input is untouched; all other components
/// of the copy stay bit-identical.
pub fn delete_components(
    spectra: &MultiSpectrum,
    features: &BTreeSet<FeatureIndex>,
    pair_conjugates: bool,
) -> Result<MultiSpectrum> {
    for &idx in features {
        spectra.check_bounds(idx)?;
    }
    let (h, w) = (spectra.height(), spectra.width());
    let mut out = spectra.clone();
    let pairing_breaks_symmetry = !pair_conjugates
        && features
            .iter()
            .any(|&idx| !features.contains(&conjugate_pair(idx, h, w)));
    for (ch, spectrum) in out.channels_mut().iter_mut().enumerate() {
        if pairing_breaks_symmetry {
            spectrum.clear_from_real();
        }
        for &idx in features.iter().filter(|f| f.channel == ch) {
            spectrum.set(idx.u, idx.v, Complex64::new(0.0, 0.0));
            if pair_conjugates {
                let pair = conjugate_pair(idx, h, w);
                spectrum.set(pair.u, pair.v, Complex64::new(0.0, 0.0));
            }
        }
    }
    Ok(out)
}
