//! Spatial rendering of removed Fourier components: invert a spectrum
//! masked down to only the deleted set.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::attribution::tensor_spectra;
use crate::error::Result;
use crate::fourier::{conjugate_pair, idft2, FeatureIndex, Spectrum};
use crate::nn::Tensor;

/// The spatial signal carried by `deleted` alone: every other component
/// is zeroed before inverting. Conjugate partners are included
/// automatically so the inverse stays real. Subtracting the result from
/// `x` reproduces the deletion of those components.
pub fn deleted_features_to_spatial(
    x: &Tensor,
    deleted: &BTreeSet<FeatureIndex>,
) -> Result<Tensor> {
    let spectra = tensor_spectra(x)?;
    for &idx in deleted {
        spectra.check_bounds(idx)?;
    }
    let (h, w) = (spectra.height(), spectra.width());
    let mut out = Vec::with_capacity(x.len());
    for (c, channel) in spectra.channels().iter().enumerate() {
        let mut values = vec![Complex64::new(0.0, 0.0); h * w];
        for &idx in deleted {
            if idx.channel != c {
                continue;
            }
            let pair = conjugate_pair(idx, h, w);
            values[idx.u * w + idx.v] = channel.get(idx.u, idx.v);
            values[pair.u * w + pair.v] = channel.get(pair.u, pair.v);
        }
        let masked = Spectrum::new(h, w, values, true)?;
        out.extend_from_slice(idft2(&masked)?.values());
    }
    Tensor::new(x.shape().to_vec(), out)
}
