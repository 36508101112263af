//! Subcommand implementations. Each command resolves its configuration
//! (flags over config file over defaults), validates every referenced path
//! before doing any work, computes, and writes envelope reports.

pub mod analyze;
pub mod attribute;
pub mod correct;
pub mod dataset_gen;
pub mod game;
pub mod sweep;
pub mod train;

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use ffc_core::attribution::{
    AttributionConfig, Domain, ProjectionDenominator, TargetPolicy,
};
use ffc_core::nn::{load_checkpoint, load_split, Checkpoint, LabeledDataset};

use crate::config::{require_readable, Resolver};
use crate::error::{CliError, CliResult};
use crate::methods::MethodParams;

/// A key that has no built-in default: it must come from a flag or the
/// config file.
pub(crate) fn required<T>(value: Option<T>, key: &str) -> CliResult<T> {
    value.ok_or_else(|| {
        CliError::usage(format!(
            "missing required key `{key}` (pass --{} or set it in the config file)",
            key.replace('_', "-")
        ))
    })
}

/// The three files an on-disk split consists of.
pub(crate) fn split_files(dir: &Path, split: &str) -> [PathBuf; 3] {
    [
        dir.join(format!("{split}-images.ffct")),
        dir.join(format!("{split}-labels.idx")),
        dir.join(format!("{split}-meta.json")),
    ]
}

/// Existence checks for a split; call before any computation.
pub(crate) fn require_split(dir: &Path, split: &str) -> CliResult<()> {
    for path in split_files(dir, split) {
        require_readable(&path, "dataset")?;
    }
    Ok(())
}

pub(crate) fn load_dataset(dir: &Path, split: &str) -> CliResult<LabeledDataset> {
    require_split(dir, split)?;
    Ok(load_split(dir, split)?)
}

pub(crate) fn load_model(path: &Path) -> CliResult<Checkpoint> {
    require_readable(path, "checkpoint")?;
    Ok(load_checkpoint(path)?)
}

/// Sample cap: `limit` bounds `available` when present; zero is rejected.
pub(crate) fn effective_count(available: usize, limit: Option<usize>) -> CliResult<usize> {
    match limit {
        Some(0) => Err(CliError::usage("limit must be positive")),
        Some(k) => Ok(available.min(k)),
        None => Ok(available),
    }
}

/// Rectification loss target: the model's own prediction, or each
/// sample's dataset label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TargetKind {
    Predicted,
    PerSampleLabel,
}

impl TargetKind {
    pub fn policy(self, label: usize) -> TargetPolicy {
        match self {
            TargetKind::Predicted => TargetPolicy::Predicted,
            TargetKind::PerSampleLabel => TargetPolicy::Label(label),
        }
    }
}

/// Attribution knobs shared by attribute/sweep/correct.
#[derive(Args, Debug)]
pub struct ScoreFlags {
    /// Rectification step size.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Rectification iteration count.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Loss target during rectification: predicted | label.
    #[arg(long)]
    pub target: Option<String>,
    /// Guard added to near-zero denominators.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Projection denominator: expected | original.
    #[arg(long)]
    pub denominator: Option<String>,
    /// Integration steps for intgrad.
    #[arg(long)]
    pub ig_steps: Option<usize>,
    /// Noise draws for smoothgrad.
    #[arg(long)]
    pub sg_draws: Option<usize>,
    /// Noise standard deviation for smoothgrad.
    #[arg(long)]
    pub sg_sigma: Option<f64>,
    /// Base seed for stochastic methods; per-sample streams add the
    /// sample index.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub(crate) fn parse_target(raw: &str) -> CliResult<TargetKind> {
    match raw {
        "predicted" => Ok(TargetKind::Predicted),
        "label" => Ok(TargetKind::PerSampleLabel),
        other => Err(CliError::usage(format!(
            "target must be `predicted` or `label`, got `{other}`"
        ))),
    }
}

pub(crate) fn parse_denominator(raw: &str) -> CliResult<ProjectionDenominator> {
    match raw {
        "expected" => Ok(ProjectionDenominator::Expected),
        "original" => Ok(ProjectionDenominator::Original),
        other => Err(CliError::usage(format!(
            "denominator must be `expected` or `original`, got `{other}`"
        ))),
    }
}

/// Resolve the shared attribution knobs, recording each under its key.
pub(crate) fn resolve_score_flags(
    r: &mut Resolver,
    f: &ScoreFlags,
) -> CliResult<(MethodParams, TargetKind)> {
    let lr = r.value("lr", f.lr, 1000.0)?;
    let iters = r.value("iters", f.iters, 50usize)?;
    let target_raw = r.value("target", f.target.clone(), "predicted".to_string())?;
    let epsilon = r.value("epsilon", f.epsilon, 1e-12)?;
    let denom_raw = r.value("denominator", f.denominator.clone(), "expected".to_string())?;
    let ig_steps = r.value("ig_steps", f.ig_steps, 64usize)?;
    let sg_draws = r.value("sg_draws", f.sg_draws, 16usize)?;
    let sg_sigma = r.value("sg_sigma", f.sg_sigma, 0.1)?;
    let seed = r.value("seed", f.seed, 7u64)?;
    let target = parse_target(&target_raw)?;
    let attribution = AttributionConfig {
        learning_rate: lr,
        iterations: iters,
        target: TargetPolicy::Predicted,
        epsilon,
        denominator: parse_denominator(&denom_raw)?,
    };
    Ok((
        MethodParams {
            attribution,
            ig_steps,
            sg_draws,
            sg_sigma,
            seed,
        },
        target,
    ))
}

fn domain_name(domain: Domain) -> &'static str {
    match domain {
        Domain::Fourier => "fourier",
        Domain::Spatial => "spatial",
    }
}

pub(crate) fn parse_domain(raw: &str) -> CliResult<Domain> {
    match raw {
        "fourier" => Ok(Domain::Fourier),
        "spatial" => Ok(Domain::Spatial),
        other => Err(CliError::usage(format!(
            "domain must be `fourier` or `spatial`, got `{other}`"
        ))),
    }
}

/// One attributed method inside a manifest: where its per-sample map
/// files live, relative to the manifest's own directory.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub(crate) struct ManifestMethod {
    pub method: String,
    pub domain: String,
    pub dims: (usize, usize, usize),
    pub files: Vec<String>,
}

impl ManifestMethod {
    pub fn domain(&self) -> CliResult<Domain> {
        parse_domain(&self.domain)
    }
}

/// Index of everything `ffc attribute` wrote.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub(crate) struct Manifest {
    pub data: String,
    pub split: String,
    pub checkpoint: String,
    pub samples: usize,
    pub methods: Vec<ManifestMethod>,
}

impl Manifest {
    pub fn from_domain(domain: Domain) -> String {
        domain_name(domain).to_string()
    }

    pub fn read(path: &Path) -> CliResult<(Self, PathBuf)> {
        require_readable(path, "manifest")?;
        let (_, payload) = crate::report::read_payload(path)?;
        let manifest: Manifest = serde_json::from_value(payload)
            .map_err(|e| CliError::data(format!("manifest {}: {e}", path.display())))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((manifest, base))
    }

    pub fn method(&self, name: &str) -> CliResult<&ManifestMethod> {
        self.methods
            .iter()
            .find(|m| m.method == name)
            .ok_or_else(|| {
                CliError::usage(format!(
                    "method `{name}` is not in the manifest (has: {})",
                    self.methods
                        .iter()
                        .map(|m| m.method.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })
    }
}

/// Average ranks with ties shared, 1-based.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (ties by average rank). NaN-free inputs only.
pub(crate) fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..ra.len() {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma).powi(2);
        db += (rb[i] - mb).powi(2);
    }
    if da == 0.0 || db == 0.0 {
        return 0.0;
    }
    num / (da.sqrt() * db.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_matches_hand_ranks() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [10.0, 20.0, 30.0, 40.0];
        assert!((spearman(&a, &b) - 1.0).abs() < 1e-12);
        let c = [40.0, 30.0, 20.0, 10.0];
        assert!((spearman(&a, &c) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_share_average_rank() {
        let ranks = average_ranks(&[5.0, 5.0, 1.0]);
        assert_eq!(ranks, vec![2.5, 2.5, 1.0]);
        // All-constant input correlates with nothing.
        assert_eq!(spearman(&[1.0, 1.0], &[0.0, 5.0]), 0.0);
    }

    #[test]
    fn effective_count_rejects_zero() {
        assert_eq!(effective_count(10, Some(3)).unwrap(), 3);
        assert_eq!(effective_count(10, None).unwrap(), 10);
        assert_eq!(effective_count(2, Some(5)).unwrap(), 2);
        assert_eq!(effective_count(10, Some(0)).unwrap_err().exit_code(), 2);
    }
}
