//! Plain SGD with a fixed step size; deterministic for a fixed seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::dataset::LabeledDataset;
use crate::nn::model::{argmax, cross_entropy, Checkpoint, ModelSpec, TrainMeta};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub step_size: f64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 30,
            step_size: 0.05,
            batch_size: 32,
        }
    }
}

// Keeps the shuffle stream independent of the init stream, which also uses
// the raw seed.
const SHUFFLE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Per-epoch mean loss and accuracy over the training set, measured after
/// the epoch's updates. Empty for zero epochs.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainHistory {
    pub epoch_loss: Vec<f64>,
    pub epoch_accuracy: Vec<f64>,
}

/// Train a fresh model. Same seed and config twice gives bit-identical
/// checkpoints; zero epochs returns the seeded initialization.
pub fn train(
    spec: &ModelSpec,
    dataset: &LabeledDataset,
    config: &TrainConfig,
) -> Result<Checkpoint> {
    train_with_history(spec, dataset, config).map(|(ckpt, _)| ckpt)
}

/// Like [`train`], additionally recording the loss/accuracy curve. The
/// measurements never touch the shuffle stream, so the resulting checkpoint
/// is bit-identical to [`train`]'s.
pub fn train_with_history(
    spec: &ModelSpec,
    dataset: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(Checkpoint, TrainHistory)> {
    dataset.check_against(spec)?;
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    if config.epochs > 0 && !(config.step_size.is_finite() && config.step_size > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "step size must be positive, got {}",
            config.step_size
        )));
    }
    let plan = spec.plan()?;
    let mut params = spec.init_params(config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_STREAM);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(config.batch_size) {
            let (batch, targets) = dataset.gather(chunk)?;
            let (loss, dparams) =
                crate::nn::model::training_step(&plan, &params, spec.classes, &batch, &targets);
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    context: "training".into(),
                    step: epoch,
                    value: loss,
                });
            }
            for (p, g) in params.iter_mut().zip(&dparams) {
                *p -= config.step_size * g;
            }
        }
        let probe =
            Checkpoint::new(spec.clone(), params.clone(), TrainMeta::untrained(config.seed))?;
        let (loss, accuracy) = evaluate(&probe, dataset)?;
        history.epoch_loss.push(loss);
        history.epoch_accuracy.push(accuracy);
    }

    let probe = Checkpoint::new(spec.clone(), params, TrainMeta::untrained(config.seed))?;
    let (final_loss, final_accuracy) = evaluate(&probe, dataset)?;
    if !final_loss.is_finite() {
        return Err(Error::Divergence {
            context: "training".into(),
            step: config.epochs,
            value: final_loss,
        });
    }
    let ckpt = Checkpoint::new(
        spec.clone(),
        probe.params().to_vec(),
        TrainMeta {
            seed: config.seed,
            epochs: config.epochs,
            step_size: config.step_size,
            batch_size: config.batch_size,
            final_loss,
            final_accuracy,
        },
    )?;
    Ok((ckpt, history))
}

/// Mean cross-entropy and accuracy over a whole dataset.
pub fn evaluate(model: &Checkpoint, dataset: &LabeledDataset) -> Result<(f64, f64)> {
    dataset.check_against(model.spec())?;
    let mut total_loss = 0.0;
    let mut correct = 0usize;
    let n = dataset.len();
    let all: Vec<usize> = (0..n).collect();
    for chunk in all.chunks(64) {
        let (batch, targets) = dataset.gather(chunk)?;
        let logits = model.forward(&batch)?;
        total_loss += cross_entropy(&logits, &targets)? * chunk.len() as f64;
        for (row, &t) in logits.rows().zip(&targets) {
            if argmax(row) == t {
                correct += 1;
            }
        }
    }
    Ok((total_loss / n as f64, correct as f64 / n as f64))
}

/// Flip a fraction of labels to a different uniformly drawn class.
/// Used to produce deliberately degraded models for correction studies.
pub fn with_label_noise(dataset: &LabeledDataset, fraction: f64, seed: u64) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "label noise fraction must be in [0,1], got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c61_6265_6c5f_6e73);
    let mut labels = dataset.labels().to_vec();
    let k = dataset.classes();
    let n_flip = (fraction * labels.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(n_flip) {
        if k > 1 {
            let shift = rng.gen_range(1..k);
            labels[i] = (labels[i] + shift) % k;
        }
    }
    dataset.with_labels(labels)
}
