//! Deletion-Insertion Game: zero features in score order, track the
//! model's relative confidence, and integrate the gap between the
//! least-important-first and most-important-first curves.

mod curves;
mod delete;

pub use curves::{deletion_curves, write_game_csv, DeletionCurve, GameReport};
pub use delete::{budget_for, budgeted_set, delete_fraction, Direction};

use serde::{Deserialize, Serialize};

use crate::attribution::Domain;
use crate::error::{Error, Result};
use crate::nn::model::softmax_row;
use crate::nn::{argmax, Checkpoint, Tensor};

/// Which deletion orders a run is interested in. Reports always carry both
/// curves (the AUC needs them); this narrows standalone deletions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionChoice {
    LeastFirst,
    MostFirst,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub domain: Domain,
    /// Ascending deletion fractions; must start at 0 and stay within [0,1].
    pub fractions: Vec<f64>,
    pub direction: DirectionChoice,
    /// Fourier only: delete the conjugate partner along with each
    /// component, keeping inverses real. Pairs count twice toward budgets.
    pub pair_conjugates: bool,
}

impl GameConfig {
    pub fn fourier() -> Self {
        Self {
            domain: Domain::Fourier,
            fractions: default_fractions(),
            direction: DirectionChoice::Both,
            pair_conjugates: true,
        }
    }

    pub fn spatial() -> Self {
        Self {
            domain: Domain::Spatial,
            fractions: default_fractions(),
            direction: DirectionChoice::Both,
            pair_conjugates: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::InvalidConfig("empty fraction grid".into()));
        }
        if self.fractions[0] != 0.0 {
            return Err(Error::InvalidConfig(format!(
                "fraction grid must start at 0, got {}",
                self.fractions[0]
            )));
        }
        for pair in self.fractions.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidConfig(format!(
                    "fraction grid must be strictly ascending, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        let last = *self.fractions.last().unwrap();
        if !(last.is_finite() && last <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "fractions must stay within [0,1], got {last}"
            )));
        }
        Ok(())
    }
}

/// 0.00, 0.05, ..., 0.95.
pub fn default_fractions() -> Vec<f64> {
    (0..20).map(|i| i as f64 / 20.0).collect()
}

/// Confidence of the originally predicted class after modification,
/// relative to before. Identity modifications give exactly 1.
pub fn relative_confidence(
    ckpt: &Checkpoint,
    x_modified: &Tensor,
    x_original: &Tensor,
) -> Result<f64> {
    let orig_logits = ckpt.forward_single(x_original)?;
    let class = argmax(&orig_logits);
    let orig_conf = softmax_row(&orig_logits)[class];
    if orig_conf <= 0.0 {
        return Err(Error::NonFinite(format!(
            "original confidence underflowed for class {class}"
        )));
    }
    let mod_logits = ckpt.forward_single(x_modified)?;
    Ok(softmax_row(&mod_logits)[class] / orig_conf)
}

/// Trapezoid integral of the curve over the percent axis (fractions ×100).
pub fn trapezoid_percent(fractions: &[f64], values: &[f64]) -> f64 {
    fractions
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]) * 100.0)
        .sum()
}
