//! `ffc attribute`: compute one importance map per (sample, method) and
//! index everything in a manifest for the downstream commands.

use std::path::Path;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;

use ffc_core::attribution::{write_importance_map, ImportanceMap};
use ffc_core::nn::{Checkpoint, LabeledDataset};

use crate::config::Resolver;
use crate::error::CliResult;
use crate::methods::{compute_map, Method, MethodParams};
use crate::report::{write_report, PhaseClock};

use super::{
    effective_count, load_dataset, load_model, required, Manifest, ManifestMethod, ScoreFlags,
    TargetKind,
};

#[derive(Args, Debug)]
pub struct AttributeArgs {
    /// Dataset directory.
    #[arg(long)]
    data: Option<String>,
    /// Split to attribute.
    #[arg(long)]
    split: Option<String>,
    /// Checkpoint file.
    #[arg(long)]
    checkpoint: Option<String>,
    /// Comma-separated method list.
    #[arg(long)]
    methods: Option<String>,
    #[command(flatten)]
    score: ScoreFlags,
    /// Cap on the number of samples attributed.
    #[arg(long)]
    limit: Option<usize>,
    /// Manifest file name inside the output directory.
    #[arg(long)]
    manifest_out: Option<String>,
}

/// Maps for the first `n` samples under one method, order-fixed.
pub(crate) fn method_maps(
    method: &Method,
    ckpt: &Checkpoint,
    dataset: &LabeledDataset,
    n: usize,
    params: &MethodParams,
    target: TargetKind,
) -> CliResult<Vec<ImportanceMap>> {
    let maps = dataset.samples()[..n]
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut p = params.clone();
            p.attribution.target = target.policy(dataset.label(i));
            compute_map(method, ckpt, x, i, &p)
        })
        .collect::<ffc_core::error::Result<Vec<_>>>()?;
    Ok(maps)
}

pub fn run(args: AttributeArgs, mut r: Resolver, out_dir: &Path) -> CliResult<()> {
    let started = Instant::now();
    let data = required(r.optional("data", args.data.clone())?, "data")?;
    let split = r.value("split", args.split.clone(), "planted-eval".to_string())?;
    let checkpoint = required(r.optional("checkpoint", args.checkpoint.clone())?, "checkpoint")?;
    let methods_raw = r.value("methods", args.methods.clone(), "ffc".to_string())?;
    let methods = Method::parse_many(&methods_raw)?;
    let (params, target) = super::resolve_score_flags(&mut r, &args.score)?;
    let limit = r.optional("limit", args.limit)?;
    let manifest_out = r.value(
        "manifest_out",
        args.manifest_out.clone(),
        "attribute-manifest.json".to_string(),
    )?;
    let config = r.finish();

    let mut clock = PhaseClock::default();
    let dataset = clock.time("load", || load_dataset(Path::new(&data), &split))?;
    let ckpt = load_model(Path::new(&checkpoint))?;
    dataset.check_against(ckpt.spec())?;
    let n = effective_count(dataset.len(), limit)?;

    let mut entries = Vec::new();
    for method in &methods {
        let maps = clock.time(&format!("attribute_{}", method.dir_name()), || {
            method_maps(method, &ckpt, &dataset, n, &params, target)
        })?;
        let rel_dir = format!("maps/{}", method.dir_name());
        let abs_dir = out_dir.join(&rel_dir);
        std::fs::create_dir_all(&abs_dir)?;
        let mut files = Vec::with_capacity(n);
        for (i, map) in maps.iter().enumerate() {
            let file = format!("{rel_dir}/sample-{i}.ffcimp");
            write_importance_map(&out_dir.join(&file), map)?;
            files.push(file);
        }
        entries.push(ManifestMethod {
            method: method.name(),
            domain: Manifest::from_domain(method.domain()),
            dims: maps[0].dims(),
            files,
        });
    }

    let payload = Manifest {
        data,
        split,
        checkpoint,
        samples: n,
        methods: entries,
    };
    write_report(
        &out_dir.join(&manifest_out),
        &config,
        &payload,
        started.elapsed().as_secs_f64(),
        clock,
    )
}
