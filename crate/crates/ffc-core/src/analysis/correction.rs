//! Remove top-scored Fourier components from misclassified samples under
//! a growing budget schedule and record when predictions flip to the
//! ground-truth label.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{spectra_tensor, tensor_spectra, Domain, ImportanceMap};
use crate::error::{Error, Result};
use crate::fourier::delete_components;
use crate::game::{budgeted_set, Direction};
use crate::nn::{Checkpoint, LabeledDataset, Tensor};

/// Cumulative removal budgets as fractions of the feature count:
/// 1%, 2%, ..., 10%.
pub fn default_correction_schedule() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CorrectionOutcome {
    /// Prediction flipped to the label at this schedule step (0-based)
    /// after removing `fraction` of the features.
    Corrected { step: usize, fraction: f64 },
    /// The full schedule never produced the labeled class.
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleCorrection {
    pub index: usize,
    pub label: usize,
    pub predicted: usize,
    pub outcome: CorrectionOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub method: String,
    pub schedule: Vec<f64>,
    pub misclassified: usize,
    pub corrected: usize,
    /// corrected / misclassified; None when nothing was misclassified.
    pub rate: Option<f64>,
    pub outcomes: Vec<SampleCorrection>,
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidConfig("empty correction schedule".into()));
    }
    for pair in schedule.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::InvalidConfig(format!(
                "correction schedule must be strictly ascending, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let (first, last) = (schedule[0], *schedule.last().unwrap());
    if !(first.is_finite() && first > 0.0 && last <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "correction schedule must lie in (0,1], got {first}..{last}"
        )));
    }
    Ok(())
}

/// Indices of dataset samples the model gets wrong on the untouched input.
pub fn misclassified_indices(ckpt: &Checkpoint, data: &LabeledDataset) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..data.len() {
        if ckpt.predict_single(data.sample(i))? != data.label(i) {
            out.push(i);
        }
    }
    Ok(out)
}

/// Walk one misclassified sample through the schedule. Budgets grow, so
/// each step's removal set extends the previous one.
fn correct_one(
    ckpt: &Checkpoint,
    x: &Tensor,
    label: usize,
    map: &ImportanceMap,
    schedule: &[f64],
) -> Result<CorrectionOutcome> {
    if map.domain() != Domain::Fourier {
        return Err(Error::InvalidConfig(
            "correction requires Fourier-domain maps".into(),
        ));
    }
    let spectra = tensor_spectra(x)?;
    for (step, &fraction) in schedule.iter().enumerate() {
        let budget = (fraction * map.len() as f64).round() as usize;
        let doomed = budgeted_set(map, budget, Direction::MostFirst, true);
        let modified = spectra_tensor(&delete_components(&spectra, &doomed, true)?)?;
        if ckpt.predict_single(&modified)? == label {
            return Ok(CorrectionOutcome::Corrected { step, fraction });
        }
    }
    Ok(CorrectionOutcome::Failed)
}

/// Try to flip every misclassified prediction to its label by removing
/// top-scored components. `map_provider` receives the dataset index and
/// the sample so callers can seed per-sample randomness; maps come from
/// it exactly once per sample.
pub fn correct_misclassified<P>(
    ckpt: &Checkpoint,
    data: &LabeledDataset,
    map_provider: P,
    schedule: &[f64],
    method: &str,
) -> Result<CorrectionReport>
where
    P: Fn(usize, &Tensor) -> Result<ImportanceMap> + Sync,
{
    validate_schedule(schedule)?;
    data.check_against(ckpt.spec())?;
    let wrong = misclassified_indices(ckpt, data)?;
    let outcomes: Vec<SampleCorrection> = wrong
        .par_iter()
        .map(|&i| {
            let x = data.sample(i);
            let label = data.label(i);
            let predicted = ckpt.predict_single(x)?;
            let map = map_provider(i, x)?;
            let outcome = correct_one(ckpt, x, label, &map, schedule)?;
            Ok(SampleCorrection {
                index: i,
                label,
                predicted,
                outcome,
            })
        })
        .collect::<Result<_>>()?;
    let corrected = outcomes
        .iter()
        .filter(|o| matches!(o.outcome, CorrectionOutcome::Corrected { .. }))
        .count();
    let rate = if outcomes.is_empty() {
        None
    } else {
        Some(corrected as f64 / outcomes.len() as f64)
    };
    Ok(CorrectionReport {
        method: method.to_string(),
        schedule: schedule.to_vec(),
        misclassified: outcomes.len(),
        corrected,
        rate,
        outcomes,
    })
}

/// One row per misclassified sample.
pub fn write_correction_csv<W: Write>(report: &CorrectionReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_csv = |e: csv::Error| Error::format("CSV", e.to_string());
    w.write_record(["index", "label", "predicted", "corrected", "step", "fraction"])
        .map_err(to_csv)?;
    for o in &report.outcomes {
        let (corrected, step, fraction) = match o.outcome {
            CorrectionOutcome::Corrected { step, fraction } => {
                (true, step.to_string(), fraction.to_string())
            }
            CorrectionOutcome::Failed => (false, String::new(), String::new()),
        };
        w.write_record([
            o.index.to_string(),
            o.label.to_string(),
            o.predicted.to_string(),
            corrected.to_string(),
            step,
            fraction,
        ])
        .map_err(to_csv)?;
    }
    w.flush()?;
    Ok(())
}
