//! `ffc train`: fit a model on a saved split, emitting an FFCCKPT1
//! checkpoint plus a metrics report with per-epoch curves.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use ffc_core::nn::{
    save_checkpoint, train_with_history, with_label_noise, ModelSpec, TrainConfig,
};

use crate::config::{parse_list, Resolver};
use crate::error::{CliError, CliResult};
use crate::report::{write_report, PhaseClock};

use super::{load_dataset, required};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory (as written by dataset-gen).
    #[arg(long)]
    data: Option<String>,
    /// Split name inside the dataset directory.
    #[arg(long)]
    split: Option<String>,
    /// Architecture: mlp | convnet.
    #[arg(long)]
    arch: Option<String>,
    /// Comma-separated hidden-layer widths (mlp).
    #[arg(long)]
    hidden: Option<String>,
    /// Comma-separated channel counts (convnet).
    #[arg(long)]
    channels: Option<String>,
    /// Square kernel size (convnet).
    #[arg(long)]
    kernel: Option<usize>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// SGD step size.
    #[arg(long)]
    step_size: Option<f64>,
    /// Mini-batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Initialization and shuffling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of training labels to scramble before fitting.
    #[arg(long)]
    label_noise: Option<f64>,
    /// Seed for the label scrambling.
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Checkpoint file name inside the output directory.
    #[arg(long)]
    checkpoint_out: Option<String>,
    /// Metrics report file name inside the output directory.
    #[arg(long)]
    metrics_out: Option<String>,
}

#[derive(Serialize)]
struct Payload {
    checkpoint: String,
    arch: String,
    input_shape: (usize, usize, usize),
    classes: usize,
    parameters: usize,
    train_samples: usize,
    final_loss: f64,
    final_accuracy: f64,
    epoch_loss: Vec<f64>,
    epoch_accuracy: Vec<f64>,
}

pub fn run(args: TrainArgs, mut r: Resolver, out_dir: &Path) -> CliResult<()> {
    let started = Instant::now();
    let data = required(r.optional("data", args.data.clone())?, "data")?;
    let split = r.value("split", args.split.clone(), "planted-train".to_string())?;
    let arch = r.value("arch", args.arch.clone(), "mlp".to_string())?;
    let hidden = r.value("hidden", args.hidden.clone(), "64".to_string())?;
    let channels = r.value("channels", args.channels.clone(), "4".to_string())?;
    let kernel = r.value("kernel", args.kernel, 3usize)?;
    let tc = TrainConfig {
        seed: r.value("seed", args.seed, 7u64)?,
        epochs: r.value("epochs", args.epochs, 30usize)?,
        step_size: r.value("step_size", args.step_size, 0.1)?,
        batch_size: r.value("batch_size", args.batch_size, 32usize)?,
    };
    let label_noise = r.optional("label_noise", args.label_noise)?;
    let noise_seed = r.value("noise_seed", args.noise_seed, tc.seed.wrapping_add(1))?;
    let checkpoint_out = r.value(
        "checkpoint_out",
        args.checkpoint_out.clone(),
        "model.ffcckpt".to_string(),
    )?;
    let metrics_out = r.value(
        "metrics_out",
        args.metrics_out.clone(),
        "train-metrics.json".to_string(),
    )?;
    let config = r.finish();

    let mut clock = PhaseClock::default();
    let data_dir = PathBuf::from(&data);
    let mut dataset = clock.time("load", || load_dataset(&data_dir, &split))?;
    if let Some(rate) = label_noise {
        dataset = with_label_noise(&dataset, rate, noise_seed)?;
    }

    let spec = match arch.as_str() {
        "mlp" => ModelSpec::mlp(
            dataset.sample_shape(),
            parse_list(&hidden, "hidden widths")?,
            dataset.classes(),
        ),
        "convnet" => ModelSpec::convnet(
            dataset.sample_shape(),
            parse_list(&channels, "channel counts")?,
            kernel,
            dataset.classes(),
        ),
        other => {
            return Err(CliError::usage(format!(
                "arch must be `mlp` or `convnet`, got `{other}`"
            )))
        }
    };

    let (ckpt, history) = clock.time("train", || train_with_history(&spec, &dataset, &tc))?;
    let ckpt_path = out_dir.join(&checkpoint_out);
    clock.time("save", || -> CliResult<()> {
        if let Some(parent) = ckpt_path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        save_checkpoint(&ckpt_path, &ckpt)?;
        Ok(())
    })?;

    let payload = Payload {
        checkpoint: checkpoint_out,
        arch,
        input_shape: dataset.sample_shape(),
        classes: dataset.classes(),
        parameters: spec.param_count()?,
        train_samples: dataset.len(),
        final_loss: ckpt.meta().final_loss,
        final_accuracy: ckpt.meta().final_accuracy,
        epoch_loss: history.epoch_loss,
        epoch_accuracy: history.epoch_accuracy,
    };
    write_report(
        &out_dir.join(&metrics_out),
        &config,
        &payload,
        started.elapsed().as_secs_f64(),
        clock,
    )
}
