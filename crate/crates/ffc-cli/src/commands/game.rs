//! `ffc game`: play the deletion game over attributed maps, writing a
//! report, a CSV curve table, and an optional SVG per method.

use std::path::Path;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use ffc_core::attribution::read_importance_map;
use ffc_core::game::{default_fractions, deletion_curves, write_game_csv, DirectionChoice, GameConfig};

use crate::config::{parse_list, require_readable, Resolver};
use crate::error::{CliError, CliResult};
use crate::report::{write_report, PhaseClock};
use crate::svg::write_line_plot;

use super::{effective_count, load_dataset, load_model, parse_domain, required, Manifest};

#[derive(Args, Debug)]
pub struct GameArgs {
    /// Manifest written by `ffc attribute`.
    #[arg(long)]
    manifest: Option<String>,
    /// Dataset directory; defaults to the manifest's record.
    #[arg(long)]
    data: Option<String>,
    /// Split name; defaults to the manifest's record.
    #[arg(long)]
    split: Option<String>,
    /// Checkpoint file; defaults to the manifest's record.
    #[arg(long)]
    checkpoint: Option<String>,
    /// Subset of manifest methods to evaluate (default: all of them).
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated ascending deletion fractions starting at 0.
    #[arg(long)]
    fractions: Option<String>,
    /// Delete conjugate partners together (Fourier maps only).
    #[arg(long)]
    pair_conjugates: Option<bool>,
    /// Require every evaluated method to live in this domain.
    #[arg(long)]
    domain: Option<String>,
    /// Cap on evaluated samples.
    #[arg(long)]
    limit: Option<usize>,
    /// Emit an SVG line plot per method.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    svg: Option<bool>,
}

#[derive(Serialize)]
struct SummaryRow {
    method: String,
    domain: String,
    samples: usize,
    auc: f64,
}

#[derive(Serialize)]
struct Summary {
    rows: Vec<SummaryRow>,
    artifacts: Vec<String>,
}

pub fn run(args: GameArgs, mut r: Resolver, out_dir: &Path) -> CliResult<()> {
    let started = Instant::now();
    let manifest_path = required(r.optional("manifest", args.manifest.clone())?, "manifest")?;
    let (manifest, base) = Manifest::read(Path::new(&manifest_path))?;
    let data = r.value("data", args.data.clone(), manifest.data.clone())?;
    let split = r.value("split", args.split.clone(), manifest.split.clone())?;
    let checkpoint = r.value(
        "checkpoint",
        args.checkpoint.clone(),
        manifest.checkpoint.clone(),
    )?;
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
    let fractions = match r.optional("fractions", args.fractions.clone())? {
        Some(raw) => parse_list(&raw, "fractions")?,
        None => default_fractions(),
    };
    let pair_conjugates = r.value("pair_conjugates", args.pair_conjugates, true)?;
    let forced_domain = r
        .optional("domain", args.domain.clone())?
        .map(|raw| parse_domain(&raw))
        .transpose()?;
    let limit = r.optional("limit", args.limit)?;
    let svg = r.value("svg", args.svg, false)?;

    // Validate every referenced path before computing anything.
    let selected: Vec<_> = method_names
        .iter()
        .map(|name| manifest.method(name).cloned())
        .collect::<CliResult<_>>()?;
    for entry in &selected {
        if let Some(required_domain) = forced_domain {
            if entry.domain()? != required_domain {
                return Err(CliError::usage(format!(
                    "method `{}` is {}-domain but the run requires {:?} \
                     (manifest/domain mismatch)",
                    entry.method,
                    entry.domain,
                    required_domain
                )));
            }
        }
        for file in &entry.files {
            require_readable(&base.join(file), "importance map")?;
        }
    }
    let config = r.finish();

    let mut clock = PhaseClock::default();
    let dataset = clock.time("load", || load_dataset(Path::new(&data), &split))?;
    let ckpt = load_model(Path::new(&checkpoint))?;
    let n = effective_count(manifest.samples, limit)?;
    if dataset.len() < n {
        return Err(CliError::data(format!(
            "manifest covers {n} samples but split `{split}` has only {}",
            dataset.len()
        )));
    }
    let samples = &dataset.samples()[..n];

    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
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
        let game = GameConfig {
            domain: entry.domain()?,
            fractions: fractions.clone(),
            direction: DirectionChoice::Both,
            pair_conjugates,
        };
        let report = clock.time(&format!("game_{}", entry.method), || {
            deletion_curves(&ckpt, samples, &maps, &game)
        })?;

        let stem = format!("game-{}", entry.method.replace(':', "_"));
        let json_path = out_dir.join(format!("{stem}.json"));
        let method_clock = PhaseClock::default();
        write_report(
            &json_path,
            &config,
            &report,
            started.elapsed().as_secs_f64(),
            method_clock,
        )?;
        let csv_path = out_dir.join(format!("{stem}.csv"));
        write_game_csv(&report, std::fs::File::create(&csv_path)?)?;
        artifacts.push(format!("{stem}.json"));
        artifacts.push(format!("{stem}.csv"));
        if svg {
            let svg_path = out_dir.join(format!("{stem}.svg"));
            write_line_plot(
                &svg_path,
                &format!("deletion game: {}", entry.method),
                "deleted fraction",
                "relative confidence",
                &report.least_first.fractions,
                &[
                    ("least first", &report.least_first.means, "steelblue"),
                    ("most first", &report.most_first.means, "firebrick"),
                ],
            )?;
            artifacts.push(format!("{stem}.svg"));
        }
        rows.push(SummaryRow {
            method: entry.method.clone(),
            domain: entry.domain.clone(),
            samples: n,
            auc: report.auc,
        });
    }

    let payload = Summary { rows, artifacts };
    write_report(
        &out_dir.join("game-summary.json"),
        &config,
        &payload,
        started.elapsed().as_secs_f64(),
        clock,
    )
}
