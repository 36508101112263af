//! Score-method grammar shared by attribute/game/analyze/correct:
//! `ffc | input_x_gradient | intgrad | smoothgrad | random | sorted_freq |
//! energy | fft_of:<spatial method> | ifft_of:<spatial method>`.

use ffc_core::attribution::{
    baseline_scores, ffc, input_x_gradient, integrated_gradients, smoothgrad, spectrum_of_scores,
    tensor_spectra, AttributionConfig, BaselineKind, Domain, ImportanceMap, SpectrumDirection,
};
use ffc_core::error::Result;
use ffc_core::nn::{Checkpoint, Tensor};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpatialMethod {
    InputXGradient,
    IntGrad,
    SmoothGrad,
}

impl SpatialMethod {
    fn parse(raw: &str) -> Option<Self> {
        match raw {
            "input_x_gradient" => Some(Self::InputXGradient),
            "intgrad" => Some(Self::IntGrad),
            "smoothgrad" => Some(Self::SmoothGrad),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::InputXGradient => "input_x_gradient",
            Self::IntGrad => "intgrad",
            Self::SmoothGrad => "smoothgrad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    Ffc,
    Spatial(SpatialMethod),
    Random,
    SortedFreq,
    Energy,
    FftOf(SpatialMethod),
    IfftOf(SpatialMethod),
}

impl Method {
    pub fn parse(raw: &str) -> CliResult<Self> {
        if let Some(inner) = raw.strip_prefix("fft_of:") {
            return match SpatialMethod::parse(inner) {
                Some(m) => Ok(Self::FftOf(m)),
                None => Err(CliError::usage(format!(
                    "unknown method `{raw}`: fft_of expects a spatial method, got `{inner}`"
                ))),
            };
        }
        if let Some(inner) = raw.strip_prefix("ifft_of:") {
            return match SpatialMethod::parse(inner) {
                Some(m) => Ok(Self::IfftOf(m)),
                None => Err(CliError::usage(format!(
                    "unknown method `{raw}`: ifft_of expects a spatial method, got `{inner}`"
                ))),
            };
        }
        match raw {
            "ffc" => Ok(Self::Ffc),
            "random" => Ok(Self::Random),
            "sorted_freq" => Ok(Self::SortedFreq),
            "energy" => Ok(Self::Energy),
            other => SpatialMethod::parse(other).map(Self::Spatial).ok_or_else(|| {
                CliError::usage(format!(
                    "unknown method `{other}`; expected ffc, input_x_gradient, intgrad, \
                     smoothgrad, random, sorted_freq, energy, fft_of:<m>, or ifft_of:<m>"
                ))
            }),
        }
    }

    pub fn parse_many(raw: &str) -> CliResult<Vec<Method>> {
        let methods: Vec<Method> = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(Method::parse)
            .collect::<CliResult<_>>()?;
        if methods.is_empty() {
            return Err(CliError::usage("method list is empty"));
        }
        Ok(methods)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Ffc => "ffc".into(),
            Self::Spatial(m) => m.name().into(),
            Self::Random => "random".into(),
            Self::SortedFreq => "sorted_freq".into(),
            Self::Energy => "energy".into(),
            Self::FftOf(m) => format!("fft_of:{}", m.name()),
            Self::IfftOf(m) => format!("ifft_of:{}", m.name()),
        }
    }

    /// Name usable as a file-system path component.
    pub fn dir_name(&self) -> String {
        self.name().replace(':', "_")
    }

    pub fn domain(&self) -> Domain {
        match self {
            Self::Spatial(_) => Domain::Spatial,
            _ => Domain::Fourier,
        }
    }
}

/// Everything a method invocation needs beyond the sample itself. The seed
/// feeds the stochastic methods; per-sample streams are decorrelated by the
/// sample index.
#[derive(Debug, Clone)]
pub struct MethodParams {
    pub attribution: AttributionConfig,
    pub ig_steps: usize,
    pub sg_draws: usize,
    pub sg_sigma: f64,
    pub seed: u64,
}

fn spatial_map(
    method: &SpatialMethod,
    ckpt: &Checkpoint,
    x: &Tensor,
    sample_index: usize,
    params: &MethodParams,
) -> Result<ImportanceMap> {
    let policy = params.attribution.target;
    match method {
        SpatialMethod::InputXGradient => input_x_gradient(ckpt, x, policy),
        SpatialMethod::IntGrad => integrated_gradients(ckpt, x, policy, params.ig_steps),
        SpatialMethod::SmoothGrad => smoothgrad(
            ckpt,
            x,
            policy,
            params.sg_draws,
            params.sg_sigma,
            params.seed.wrapping_add(sample_index as u64),
        ),
    }
}

/// Compute one method's map for one sample. Deterministic given
/// (checkpoint, sample, params, sample_index).
pub fn compute_map(
    method: &Method,
    ckpt: &Checkpoint,
    x: &Tensor,
    sample_index: usize,
    params: &MethodParams,
) -> Result<ImportanceMap> {
    match method {
        Method::Ffc => ffc(ckpt, x, &params.attribution),
        Method::Spatial(m) => spatial_map(m, ckpt, x, sample_index, params),
        Method::Random => baseline_scores(
            BaselineKind::Random {
                seed: params.seed.wrapping_add(sample_index as u64),
            },
            &tensor_spectra(x)?,
        ),
        Method::SortedFreq => baseline_scores(BaselineKind::SortedFreq, &tensor_spectra(x)?),
        Method::Energy => baseline_scores(BaselineKind::Energy, &tensor_spectra(x)?),
        Method::FftOf(m) => {
            let spatial = spatial_map(m, ckpt, x, sample_index, params)?;
            spectrum_of_scores(&spatial, SpectrumDirection::Fft)
        }
        Method::IfftOf(m) => {
            let spatial = spatial_map(m, ckpt, x, sample_index, params)?;
            spectrum_of_scores(&spatial, SpectrumDirection::Ifft)
        }
    }
}
