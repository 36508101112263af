//! Relative-confidence curves over a deletion-fraction grid and their AUC.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::ImportanceMap;
use crate::error::{Error, Result};
use crate::game::{
    delete_fraction, relative_confidence, trapezoid_percent, Direction, GameConfig,
};
use crate::nn::{Checkpoint, Tensor};

/// Mean relative confidence per deletion fraction, one direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeletionCurve {
    pub fractions: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Per-sample confidences, `samples[i][f]`; kept in memory for paired
    /// statistics but left out of serialized reports.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

impl DeletionCurve {
    fn from_rows(fractions: &[f64], rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len() as f64;
        let mut means = Vec::with_capacity(fractions.len());
        let mut std_errors = Vec::with_capacity(fractions.len());
        for f in 0..fractions.len() {
            let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
            let se = if rows.len() < 2 {
                0.0
            } else {
                let var =
                    rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            };
            means.push(mean);
            std_errors.push(se);
        }
        Self {
            fractions: fractions.to_vec(),
            means,
            std_errors,
            samples: rows,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameReport {
    pub config: GameConfig,
    pub n: usize,
    pub least_first: DeletionCurve,
    pub most_first: DeletionCurve,
    /// Area between the curves on the percent axis:
    /// trapezoid(least_first) − trapezoid(most_first).
    pub auc: f64,
}

impl GameReport {
    /// AUC of each sample's own curve pair; their mean recovers `auc` up
    /// to rounding. Requires in-memory per-sample rows.
    pub fn per_sample_auc(&self) -> Vec<f64> {
        self.least_first
            .samples
            .iter()
            .zip(&self.most_first.samples)
            .map(|(least, most)| {
                trapezoid_percent(&self.least_first.fractions, least)
                    - trapezoid_percent(&self.most_first.fractions, most)
            })
            .collect()
    }
}

/// Play the game over a sample set: delete each map's features at every
/// fraction in both score orders and record the model's relative
/// confidence. Samples evaluate in parallel; aggregation keeps the given
/// sample order, so results do not depend on the worker count.
pub fn deletion_curves(
    ckpt: &Checkpoint,
    samples: &[Tensor],
    maps: &[ImportanceMap],
    config: &GameConfig,
) -> Result<GameReport> {
    config.validate()?;
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
    let rows: Vec<(Vec<f64>, Vec<f64>)> = samples
        .par_iter()
        .zip(maps.par_iter())
        .map(|(x, map)| {
            let mut least = Vec::with_capacity(config.fractions.len());
            let mut most = Vec::with_capacity(config.fractions.len());
            for &fraction in &config.fractions {
                for (direction, row) in [
                    (Direction::LeastFirst, &mut least),
                    (Direction::MostFirst, &mut most),
                ] {
                    let modified = delete_fraction(x, map, fraction, direction, config)?;
                    row.push(relative_confidence(ckpt, &modified, x)?);
                }
            }
            Ok((least, most))
        })
        .collect::<Result<_>>()?;
    let (least_rows, most_rows): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let least_first = DeletionCurve::from_rows(&config.fractions, least_rows);
    let most_first = DeletionCurve::from_rows(&config.fractions, most_rows);
    let auc = trapezoid_percent(&config.fractions, &least_first.means)
        - trapezoid_percent(&config.fractions, &most_first.means);
    Ok(GameReport {
        config: config.clone(),
        n: samples.len(),
        least_first,
        most_first,
        auc,
    })
}

/// One row per fraction: both curves' means and standard errors.
pub fn write_game_csv<W: Write>(report: &GameReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_csv = |e: csv::Error| Error::format("CSV", e.to_string());
    w.write_record([
        "fraction",
        "least_first_mean",
        "least_first_se",
        "most_first_mean",
        "most_first_se",
    ])
    .map_err(to_csv)?;
    for (f, fraction) in report.config.fractions.iter().enumerate() {
        w.serialize((
            fraction,
            report.least_first.means[f],
            report.least_first.std_errors[f],
            report.most_first.means[f],
            report.most_first.std_errors[f],
        ))
        .map_err(to_csv)?;
    }
    w.flush()?;
    Ok(())
}
