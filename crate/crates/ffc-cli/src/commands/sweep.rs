//! `ffc sweep`: run the rectification attribution over an (lr, iterations)
//! grid, reporting each cell's mean final loss and deletion-game AUC.

use std::path::Path;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use ffc_core::attribution::{ffc_with_trace, AttributionConfig, ImportanceMap};
use ffc_core::game::{deletion_curves, GameConfig};

use crate::config::{parse_list, Resolver};
use crate::error::{CliError, CliResult};
use crate::report::{write_report, PhaseClock};
use crate::svg::write_scatter_plot;

use super::{
    effective_count, load_dataset, load_model, parse_denominator, parse_target, required,
    spearman,
};

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Dataset directory.
    #[arg(long)]
    data: Option<String>,
    /// Split to sweep over.
    #[arg(long)]
    split: Option<String>,
    /// Checkpoint file.
    #[arg(long)]
    checkpoint: Option<String>,
    /// Comma-separated learning-rate grid.
    #[arg(long)]
    lrs: Option<String>,
    /// Comma-separated iteration grid.
    #[arg(long)]
    iters: Option<String>,
    /// Loss target during rectification: predicted | label.
    #[arg(long)]
    target: Option<String>,
    /// Guard added to near-zero denominators.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Projection denominator: expected | original.
    #[arg(long)]
    denominator: Option<String>,
    /// Cap on evaluated samples.
    #[arg(long)]
    limit: Option<usize>,
    /// Emit an SVG scatter of the grid.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    svg: Option<bool>,
    /// Base name for sweep artifacts.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Serialize)]
struct Cell {
    learning_rate: f64,
    iterations: usize,
    mean_final_loss: f64,
    auc: f64,
}

#[derive(Serialize)]
struct Payload {
    samples: usize,
    cells: Vec<Cell>,
    spearman_neg_loss_auc: f64,
}

fn validate_grid(lrs: &[f64], iters: &[usize]) -> CliResult<()> {
    if lrs.is_empty() || iters.is_empty() {
        return Err(CliError::usage("sweep grids must be nonempty"));
    }
    if lrs.iter().any(|&lr| !(lr.is_finite() && lr > 0.0)) {
        return Err(CliError::usage("learning rates must be positive"));
    }
    if iters.contains(&0) {
        return Err(CliError::usage("iteration counts must be positive"));
    }
    Ok(())
}

pub fn run(args: SweepArgs, mut r: Resolver, out_dir: &Path) -> CliResult<()> {
    let started = Instant::now();
    let data = required(r.optional("data", args.data.clone())?, "data")?;
    let split = r.value("split", args.split.clone(), "planted-eval".to_string())?;
    let checkpoint = required(r.optional("checkpoint", args.checkpoint.clone())?, "checkpoint")?;
    let lrs: Vec<f64> = parse_list(
        &r.value("lrs", args.lrs.clone(), "0.1,1,10,100,1000".to_string())?,
        "learning rates",
    )?;
    let iters: Vec<usize> = parse_list(
        &r.value("iters", args.iters.clone(), "1,5,10,25,50".to_string())?,
        "iteration counts",
    )?;
    validate_grid(&lrs, &iters)?;
    let target = parse_target(&r.value("target", args.target.clone(), "predicted".to_string())?)?;
    let epsilon = r.value("epsilon", args.epsilon, 1e-12)?;
    let denominator =
        parse_denominator(&r.value("denominator", args.denominator.clone(), "expected".to_string())?)?;
    let limit = r.optional("limit", args.limit)?;
    let svg = r.value("svg", args.svg, false)?;
    let out = r.value("out", args.out.clone(), "sweep".to_string())?;
    let config = r.finish();

    let mut clock = PhaseClock::default();
    let dataset = clock.time("load", || load_dataset(Path::new(&data), &split))?;
    let ckpt = load_model(Path::new(&checkpoint))?;
    dataset.check_against(ckpt.spec())?;
    let n = effective_count(dataset.len(), limit)?;
    let samples = &dataset.samples()[..n];
    let game = GameConfig::fourier();

    let mut cells = Vec::with_capacity(lrs.len() * iters.len());
    for &lr in &lrs {
        for &iterations in &iters {
            let cell_cfg = AttributionConfig {
                learning_rate: lr,
                iterations,
                target: ffc_core::attribution::TargetPolicy::Predicted,
                epsilon,
                denominator,
            };
            let (maps, losses): (Vec<ImportanceMap>, Vec<f64>) = clock.time(
                &format!("cell_lr{lr}_e{iterations}"),
                || -> CliResult<_> {
                    Ok(samples
                        .par_iter()
                        .enumerate()
                        .map(|(i, x)| {
                            let mut cfg = cell_cfg;
                            cfg.target = target.policy(dataset.label(i));
                            let (map, trace) = ffc_with_trace(&ckpt, x, &cfg)?;
                            Ok((map, trace.final_loss()))
                        })
                        .collect::<ffc_core::error::Result<Vec<_>>>()?
                        .into_iter()
                        .unzip())
                },
            )?;
            let mean_final_loss = losses.iter().sum::<f64>() / losses.len() as f64;
            let report = deletion_curves(&ckpt, samples, &maps, &game)?;
            cells.push(Cell {
                learning_rate: lr,
                iterations,
                mean_final_loss,
                auc: report.auc,
            });
        }
    }

    let neg_losses: Vec<f64> = cells.iter().map(|c| -c.mean_final_loss).collect();
    let aucs: Vec<f64> = cells.iter().map(|c| c.auc).collect();
    let rho = spearman(&neg_losses, &aucs);

    let mut csv = csv::Writer::from_path(out_dir.join(format!("{out}.csv")))
        .map_err(|e| CliError::data(format!("sweep CSV: {e}")))?;
    csv.write_record(["learning_rate", "iterations", "mean_final_loss", "auc"])
        .map_err(|e| CliError::data(format!("sweep CSV: {e}")))?;
    for c in &cells {
        csv.write_record([
            c.learning_rate.to_string(),
            c.iterations.to_string(),
            c.mean_final_loss.to_string(),
            c.auc.to_string(),
        ])
        .map_err(|e| CliError::data(format!("sweep CSV: {e}")))?;
    }
    csv.flush()?;

    if svg {
        let points: Vec<(f64, f64, f64)> = cells
            .iter()
            .map(|c| (c.learning_rate.log10(), c.iterations as f64, c.auc))
            .collect();
        write_scatter_plot(
            &out_dir.join(format!("{out}.svg")),
            "sweep grid (dot size = AUC)",
            "log10 learning rate",
            "iterations",
            &points,
        )?;
    }

    let payload = Payload {
        samples: n,
        cells,
        spearman_neg_loss_auc: rho,
    };
    write_report(
        &out_dir.join(format!("{out}.json")),
        &config,
        &payload,
        started.elapsed().as_secs_f64(),
        clock,
    )
}
