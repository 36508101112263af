//! Iterated gradient descent on the input against a frozen network.

use crate::attribution::{resolve_target, AttributionConfig};
use crate::error::{Error, Result};
use crate::nn::model::single_batch;
use crate::nn::{cross_entropy, Checkpoint, Tensor};

/// Record of one rectification run. The rectified input is the final
/// iterate; `losses[k]` is the loss right after step k+1, so the trace
/// length equals the configured iteration count.
#[derive(Debug, Clone, PartialEq)]
pub struct RectificationTrace {
    pub initial_loss: f64,
    pub losses: Vec<f64>,
    pub original: Tensor,
    pub rectified: Tensor,
    /// Class the loss was measured against, frozen before the first step.
    pub target: usize,
}

impl RectificationTrace {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().unwrap_or(&self.initial_loss)
    }
}

fn loss_of(ckpt: &Checkpoint, x: &Tensor, target: usize) -> Result<f64> {
    let logits = ckpt.forward(&single_batch(x)?)?;
    cross_entropy(&logits, &[target])
}

/// Run `iterations` steps of X ← X − lr·g/‖g‖₂ where g is the input
/// gradient of the cross-entropy against the frozen target. The gradient
/// norm is taken over the whole sample; zero-gradient steps leave the
/// input unchanged.
pub fn rectify(
    ckpt: &Checkpoint,
    x: &Tensor,
    config: &AttributionConfig,
) -> Result<RectificationTrace> {
    config.validate()?;
    let target = resolve_target(ckpt, x, config.target)?;
    let initial_loss = loss_of(ckpt, x, target)?;
    if !initial_loss.is_finite() {
        return Err(Error::Divergence {
            context: "rectification".into(),
            step: 0,
            value: initial_loss,
        });
    }
    let mut cur = x.clone();
    let mut losses = Vec::with_capacity(config.iterations);
    for step in 1..=config.iterations {
        let grad = ckpt.input_gradient(&single_batch(&cur)?, &[target])?;
        let norm = grad.values().iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (v, g) in cur.values_mut().iter_mut().zip(grad.values()) {
                *v -= config.learning_rate * g / norm;
            }
        }
        if let Some(pos) = cur.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                context: "rectification".into(),
                step,
                value: cur.values()[pos],
            });
        }
        let loss = loss_of(ckpt, &cur, target)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                context: "rectification".into(),
                step,
                value: loss,
            });
        }
        losses.push(loss);
    }
    Ok(RectificationTrace {
        initial_loss,
        losses,
        original: x.clone(),
        rectified: cur,
        target,
    })
}
