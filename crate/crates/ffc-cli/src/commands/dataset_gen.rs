//! `ffc dataset-gen`: synthesize a planted-frequency dataset and save a
//! train and an eval split that share their class carrier frequencies.

use std::path::Path;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use ffc_core::nn::{generate_planted_dataset, save_split, PlantedConfig, PlantedInfo};

use crate::config::Resolver;
use crate::error::CliResult;
use crate::report::{write_report, PhaseClock};

#[derive(Args, Debug)]
pub struct DatasetGenArgs {
    /// Image height.
    #[arg(long)]
    height: Option<usize>,
    /// Image width.
    #[arg(long)]
    width: Option<usize>,
    /// Number of classes.
    #[arg(long)]
    classes: Option<usize>,
    /// Carrier frequencies planted per class.
    #[arg(long)]
    freqs_per_class: Option<usize>,
    /// Samples generated per class, per split.
    #[arg(long)]
    per_class: Option<usize>,
    /// Additive Gaussian noise level.
    #[arg(long)]
    sigma: Option<f64>,
    /// Lower bound of the carrier amplitude range.
    #[arg(long)]
    amp_lo: Option<f64>,
    /// Upper bound of the carrier amplitude range.
    #[arg(long)]
    amp_hi: Option<f64>,
    /// Generation seed; the eval split uses seed+1 with the same carriers.
    #[arg(long)]
    seed: Option<u64>,
    /// Base name for the split files.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Serialize)]
struct Payload {
    train_split: String,
    eval_split: String,
    train_samples: usize,
    eval_samples: usize,
    files: Vec<String>,
    planted: PlantedInfo,
}

pub fn run(args: DatasetGenArgs, mut r: Resolver, out_dir: &Path) -> CliResult<()> {
    let started = Instant::now();
    let d = PlantedConfig::default();
    let cfg = PlantedConfig {
        height: r.value("height", args.height, d.height)?,
        width: r.value("width", args.width, d.width)?,
        classes: r.value("classes", args.classes, d.classes)?,
        freqs_per_class: r.value("freqs_per_class", args.freqs_per_class, d.freqs_per_class)?,
        per_class: r.value("per_class", args.per_class, d.per_class)?,
        sigma: r.value("sigma", args.sigma, d.sigma)?,
        amp_range: (
            r.value("amp_lo", args.amp_lo, d.amp_range.0)?,
            r.value("amp_hi", args.amp_hi, d.amp_range.1)?,
        ),
        class_frequencies: None,
    };
    let seed = r.value("seed", args.seed, 1u64)?;
    let name = r.value("name", args.name.clone(), "planted".to_string())?;
    let config = r.finish();

    let mut clock = PhaseClock::default();
    let train = clock.time("generate_train", || generate_planted_dataset(seed, &cfg))?;
    let mut eval_cfg = cfg.clone();
    let planted = train
        .planted()
        .expect("generated datasets always carry planted metadata")
        .clone();
    eval_cfg.class_frequencies = Some(planted.class_frequencies.clone());
    let eval = clock.time("generate_eval", || {
        generate_planted_dataset(seed + 1, &eval_cfg)
    })?;

    let train_split = format!("{name}-train");
    let eval_split = format!("{name}-eval");
    clock.time("save", || -> CliResult<()> {
        save_split(out_dir, &train_split, &train)?;
        save_split(out_dir, &eval_split, &eval)?;
        Ok(())
    })?;

    let files = [&train_split, &eval_split]
        .iter()
        .flat_map(|split| {
            ["images.ffct", "labels.idx", "meta.json"]
                .iter()
                .map(move |suffix| format!("{split}-{suffix}"))
        })
        .collect();
    let payload = Payload {
        train_split,
        eval_split,
        train_samples: train.len(),
        eval_samples: eval.len(),
        files,
        planted,
    };
    write_report(
        &out_dir.join(format!("{name}-dataset.json")),
        &config,
        &payload,
        started.elapsed().as_secs_f64(),
        clock,
    )
}
