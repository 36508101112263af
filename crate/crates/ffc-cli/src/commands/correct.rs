//! `ffc correct`: try to flip misclassified predictions by deleting each
//! sample's top-scored Fourier components on a growing schedule, with
//! optional spatial renderings of what was removed.

use std::path::Path;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use ffc_core::analysis::{
    correct_misclassified, default_correction_schedule, deleted_features_to_spatial,
    write_correction_csv, CorrectionOutcome, CorrectionReport,
};
use ffc_core::attribution::Domain;
use ffc_core::game::{budget_for, budgeted_set, Direction};
use ffc_core::nn::{write_tensor_file, LabeledDataset};

use crate::config::{parse_list, Resolver};
use crate::error::{CliError, CliResult};
use crate::methods::{compute_map, Method};
use crate::pgm::write_pgm;
use crate::report::{write_report, PhaseClock};

use super::{effective_count, load_dataset, load_model, required, ScoreFlags};

#[derive(Args, Debug)]
pub struct CorrectArgs {
    /// Dataset directory.
    #[arg(long)]
    data: Option<String>,
    /// Split whose misclassifications to correct.
    #[arg(long)]
    split: Option<String>,
    /// Checkpoint file.
    #[arg(long)]
    checkpoint: Option<String>,
    /// Comma-separated Fourier-domain method list.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated ascending removal schedule in (0,1].
    #[arg(long)]
    schedule: Option<String>,
    #[command(flatten)]
    score: ScoreFlags,
    /// Cap on evaluated samples.
    #[arg(long)]
    limit: Option<usize>,
    /// Write spatial renderings of the removed components.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    render: Option<bool>,
    /// Cap on rendered samples per method.
    #[arg(long)]
    render_limit: Option<usize>,
    /// Base name for correction artifacts.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Serialize)]
struct MethodPayload {
    report: CorrectionReport,
    /// True when the model misclassified nothing, so there was nothing
    /// to correct; the run still succeeds.
    empty_misclassified: bool,
    renders: Vec<String>,
}

pub fn run(args: CorrectArgs, mut r: Resolver, out_dir: &Path) -> CliResult<()> {
    let started = Instant::now();
    let data = required(r.optional("data", args.data.clone())?, "data")?;
    let split = r.value("split", args.split.clone(), "planted-eval".to_string())?;
    let checkpoint = required(r.optional("checkpoint", args.checkpoint.clone())?, "checkpoint")?;
    let methods_raw = r.value("methods", args.methods.clone(), "ffc".to_string())?;
    let methods = Method::parse_many(&methods_raw)?;
    for method in &methods {
        if method.domain() != Domain::Fourier {
            return Err(CliError::usage(format!(
                "correction deletes Fourier components, but `{}` is a spatial method \
                 (wrap it as fft_of:{} to lift it)",
                method.name(),
                method.name()
            )));
        }
    }
    let schedule = match r.optional("schedule", args.schedule.clone())? {
        Some(raw) => parse_list(&raw, "schedule")?,
        None => default_correction_schedule(),
    };
    let (params, target) = super::resolve_score_flags(&mut r, &args.score)?;
    let limit = r.optional("limit", args.limit)?;
    let render = r.value("render", args.render, false)?;
    let render_limit = r.value("render_limit", args.render_limit, 4usize)?;
    let out = r.value("out", args.out.clone(), "correct".to_string())?;
    let config = r.finish();

    let mut clock = PhaseClock::default();
    let full = clock.time("load", || load_dataset(Path::new(&data), &split))?;
    let ckpt = load_model(Path::new(&checkpoint))?;
    full.check_against(ckpt.spec())?;
    let n = effective_count(full.len(), limit)?;
    let dataset = LabeledDataset::new(
        full.samples()[..n].to_vec(),
        full.labels()[..n].to_vec(),
        full.classes(),
    )?;

    let mut payloads = Vec::new();
    for method in &methods {
        let provider = |i: usize, x: &ffc_core::nn::Tensor| {
            let mut p = params.clone();
            p.attribution.target = target.policy(dataset.label(i));
            compute_map(method, &ckpt, x, i, &p)
        };
        let report = clock.time(&format!("correct_{}", method.dir_name()), || {
            correct_misclassified(&ckpt, &dataset, provider, &schedule, &method.name())
        })?;

        let mut renders = Vec::new();
        if render {
            let corrected: Vec<_> = report
                .outcomes
                .iter()
                .filter_map(|o| match o.outcome {
                    CorrectionOutcome::Corrected { fraction, .. } => Some((o.index, fraction)),
                    CorrectionOutcome::Failed => None,
                })
                .take(render_limit)
                .collect();
            let render_dir = format!("render/{}", method.dir_name());
            std::fs::create_dir_all(out_dir.join(&render_dir))?;
            for (index, fraction) in corrected {
                let x = dataset.sample(index);
                let map = provider(index, x)?;
                let budget = budget_for(fraction, map.len());
                let doomed = budgeted_set(&map, budget, Direction::MostFirst, true);
                let removed = deleted_features_to_spatial(x, &doomed)?;
                let stem = format!("{render_dir}/sample-{index}-removed");
                write_tensor_file(&out_dir.join(format!("{stem}.ffct")), &removed)?;
                for pgm in write_pgm(&out_dir.join(&stem), &removed)? {
                    renders.push(
                        pgm.strip_prefix(out_dir)
                            .unwrap_or(&pgm)
                            .display()
                            .to_string(),
                    );
                }
                renders.push(format!("{stem}.ffct"));
            }
        }

        let csv_path = out_dir.join(format!("{out}-{}.csv", method.dir_name()));
        write_correction_csv(&report, std::fs::File::create(&csv_path)?)?;
        payloads.push(MethodPayload {
            empty_misclassified: report.misclassified == 0,
            report,
            renders,
        });
    }

    write_report(
        &out_dir.join(format!("{out}.json")),
        &config,
        &payloads,
        started.elapsed().as_secs_f64(),
        clock,
    )
}
