//! Decision-maintain rate: keep only the top-scored Fourier components
//! and check whether the model still predicts the same class.

use rayon::prelude::*;

use crate::attribution::{spectra_tensor, tensor_spectra, Domain, ImportanceMap};
use crate::error::{Error, Result};
use crate::fourier::{delete_components, FeatureIndex};
use crate::game::{budgeted_set, Direction};
use crate::nn::{Checkpoint, Tensor};
use std::collections::BTreeSet;

/// Zero every component outside the top-`keep_fraction` of the map's
/// scores (conjugate partners kept together). Keeping everything returns
/// the input bit-exactly.
pub fn keep_top_fraction(
    x: &Tensor,
    map: &ImportanceMap,
    keep_fraction: f64,
) -> Result<Tensor> {
    if map.domain() != Domain::Fourier {
        return Err(Error::InvalidConfig(
            "keep/maintain analysis requires Fourier-domain maps".into(),
        ));
    }
    if !(keep_fraction.is_finite() && (0.0..=1.0).contains(&keep_fraction)) {
        return Err(Error::InvalidConfig(format!(
            "keep fraction must be in [0,1], got {keep_fraction}"
        )));
    }
    let dims = map.dims();
    if x.shape() != [dims.0, dims.1, dims.2] {
        return Err(Error::DimensionMismatch(format!(
            "sample shape {:?} does not match map dims {:?}",
            x.shape(),
            dims
        )));
    }
    let budget = (keep_fraction * map.len() as f64).round() as usize;
    let kept = budgeted_set(map, budget, Direction::MostFirst, true);
    let doomed: BTreeSet<FeatureIndex> = (0..map.len())
        .map(|f| map.feature_of_flat(f))
        .filter(|idx| !kept.contains(idx))
        .collect();
    if doomed.is_empty() {
        return Ok(x.clone());
    }
    let spectra = tensor_spectra(x)?;
    let deleted = delete_components(&spectra, &doomed, true)?;
    spectra_tensor(&deleted)
}

/// For each keep fraction, the share of samples whose argmax class
/// survives keeping only that fraction of top-scored components.
pub fn maintain_rate_curve(
    ckpt: &Checkpoint,
    samples: &[Tensor],
    maps: &[ImportanceMap],
    keep_fractions: &[f64],
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("no samples to evaluate".into()));
    }
    if samples.len() != maps.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples but {} importance maps",
            samples.len(),
            maps.len()
        )));
    }
    if keep_fractions.is_empty() {
        return Err(Error::InvalidConfig("empty keep-fraction grid".into()));
    }
    let maintained: Vec<Vec<bool>> = samples
        .par_iter()
        .zip(maps.par_iter())
        .map(|(x, map)| {
            let original = ckpt.predict_single(x)?;
            keep_fractions
                .iter()
                .map(|&k| {
                    let kept = keep_top_fraction(x, map, k)?;
                    Ok(ckpt.predict_single(&kept)? == original)
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    Ok((0..keep_fractions.len())
        .map(|f| maintained.iter().filter(|row| row[f]).count() as f64 / n)
        .collect())
}
