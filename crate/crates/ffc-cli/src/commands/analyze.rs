//! `ffc analyze`: score-distribution characteristics (per-class kurtosis
//! and class specificity) for attributed methods.

use std::path::Path;
use std::time::Instant;

use clap::Args;

use ffc_core::analysis::{characteristics, write_characteristics_csv, CharacteristicsReport};
use ffc_core::attribution::read_importance_map;

use crate::config::{require_readable, Resolver};
use crate::error::{CliError, CliResult};
use crate::report::{write_report, PhaseClock};

use super::{effective_count, load_dataset, required, Manifest};

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Manifest written by `ffc attribute`.
    #[arg(long)]
    manifest: Option<String>,
    /// Dataset directory; defaults to the manifest's record.
    #[arg(long)]
    data: Option<String>,
    /// Split name; defaults to the manifest's record.
    #[arg(long)]
    split: Option<String>,
    /// Subset of manifest methods to analyze (default: all of them).
    #[arg(long)]
    methods: Option<String>,
    /// Cap on analyzed samples.
    #[arg(long)]
    limit: Option<usize>,
    /// Base name for analysis artifacts.
    #[arg(long)]
    out: Option<String>,
}

pub fn run(args: AnalyzeArgs, mut r: Resolver, out_dir: &Path) -> CliResult<()> {
    let started = Instant::now();
    let manifest_path = required(r.optional("manifest", args.manifest.clone())?, "manifest")?;
    let (manifest, base) = Manifest::read(Path::new(&manifest_path))?;
    let data = r.value("data", args.data.clone(), manifest.data.clone())?;
    let split = r.value("split", args.split.clone(), manifest.split.clone())?;
    let method_names: Vec<String> = match r.optional("methods", args.methods.clone())? {
        Some(raw) => raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect(),
        None => manifest.methods.iter().map(|m| m.method.clone()).collect(),
    };
    if method_names.is_empty() {
        return Err(CliError::usage("method list is empty"));
    }
    let limit = r.optional("limit", args.limit)?;
    let out = r.value("out", args.out.clone(), "analyze".to_string())?;

    let selected: Vec<_> = method_names
        .iter()
        .map(|name| manifest.method(name).cloned())
        .collect::<CliResult<_>>()?;
    for entry in &selected {
        for file in &entry.files {
            require_readable(&base.join(file), "importance map")?;
        }
    }
    let config = r.finish();

    let mut clock = PhaseClock::default();
    let dataset = clock.time("load", || load_dataset(Path::new(&data), &split))?;
    let n = effective_count(manifest.samples, limit)?;
    if dataset.len() < n {
        return Err(CliError::data(format!(
            "manifest covers {n} samples but split `{split}` has only {}",
            dataset.len()
        )));
    }

    let mut reports: Vec<CharacteristicsReport> = Vec::new();
    for entry in &selected {
        let maps = entry.files[..n.min(entry.files.len())]
            .iter()
            .map(|f| read_importance_map(&base.join(f)))
            .collect::<ffc_core::error::Result<Vec<_>>>()?;
        if maps.len() < n {
            return Err(CliError::data(format!(
                "method `{}` has {} maps but {n} samples were requested",
                entry.method,
                maps.len()
            )));
        }
        let report = clock.time(&format!("analyze_{}", entry.method), || {
            characteristics(&maps, &dataset.labels()[..n], dataset.classes(), &entry.method)
        })?;
        let csv_path = out_dir.join(format!(
            "{out}-{}.csv",
            entry.method.replace(':', "_")
        ));
        write_characteristics_csv(&report, std::fs::File::create(&csv_path)?)?;
        reports.push(report);
    }

    write_report(
        &out_dir.join(format!("{out}.json")),
        &config,
        &reports,
        started.elapsed().as_secs_f64(),
        clock,
    )
}
