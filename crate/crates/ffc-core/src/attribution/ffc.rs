//! Fourier-domain projection scores between an input and its rectified
//! counterpart.

use crate::attribution::{
    rectify, tensor_spectra, AttributionConfig, Domain, ImportanceMap, ProjectionDenominator,
    RectificationTrace,
};
use crate::error::{Error, Result};
use crate::fourier::MultiSpectrum;
use crate::nn::{Checkpoint, Tensor};

fn check_matching(fx: &MultiSpectrum, fxp: &MultiSpectrum) -> Result<()> {
    if fx.channel_count() != fxp.channel_count()
        || fx.height() != fxp.height()
        || fx.width() != fxp.width()
    {
        return Err(Error::DimensionMismatch(format!(
            "spectra differ: {}x{}x{} vs {}x{}x{}",
            fx.channel_count(),
            fx.height(),
            fx.width(),
            fxp.channel_count(),
            fxp.height(),
            fxp.width()
        )));
    }
    Ok(())
}

/// Per-component projection of the original spectrum onto the rectified
/// one: Re(F_X·conj(F_X')) over the magnitude of the component selected by
/// the denominator policy. Denominators below epsilon give 0.
pub fn ffc_project(
    fx: &MultiSpectrum,
    fxp: &MultiSpectrum,
    config: &AttributionConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    check_matching(fx, fxp)?;
    let (h, w) = (fx.height(), fx.width());
    let mut scores = Vec::with_capacity(fx.feature_count());
    for (ca, cb) in fx.channels().iter().zip(fxp.channels()) {
        for u in 0..h {
            for v in 0..w {
                let a = ca.get(u, v);
                let b = cb.get(u, v);
                let den = match config.denominator {
                    ProjectionDenominator::Expected => b.norm(),
                    ProjectionDenominator::Original => a.norm(),
                };
                scores.push(if den < config.epsilon {
                    0.0
                } else {
                    (a * b.conj()).re / den
                });
            }
        }
    }
    Ok(scores)
}

/// Importance per component: projection minus the original magnitude.
/// Under the default denominator this equals |F_X|·(cos Δφ − 1), which is
/// nonpositive and zero exactly when rectification kept the phase.
pub fn ffc_importance(
    fx: &MultiSpectrum,
    fxp: &MultiSpectrum,
    config: &AttributionConfig,
) -> Result<ImportanceMap> {
    let mut scores = ffc_project(fx, fxp, config)?;
    let (h, w) = (fx.height(), fx.width());
    for (c, channel) in fx.channels().iter().enumerate() {
        for u in 0..h {
            for v in 0..w {
                scores[(c * h + u) * w + v] -= channel.get(u, v).norm();
            }
        }
    }
    ImportanceMap::new(Domain::Fourier, (fx.channel_count(), h, w), scores)
}

/// Full pipeline: rectify, transform both signals per channel, score.
/// Returns the trace too, since downstream sweeps need the loss curve.
pub fn ffc_with_trace(
    ckpt: &Checkpoint,
    x: &Tensor,
    config: &AttributionConfig,
) -> Result<(ImportanceMap, RectificationTrace)> {
    let trace = rectify(ckpt, x, config)?;
    let fx = tensor_spectra(&trace.original)?;
    let fxp = tensor_spectra(&trace.rectified)?;
    let map = ffc_importance(&fx, &fxp, config)?;
    Ok((map, trace))
}

pub fn ffc(ckpt: &Checkpoint, x: &Tensor, config: &AttributionConfig) -> Result<ImportanceMap> {
    Ok(ffc_with_trace(ckpt, x, config)?.0)
}
