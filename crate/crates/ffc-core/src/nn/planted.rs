//! Synthetic single-channel datasets with known class-specific frequencies.
//!
//! Each class owns a disjoint set of non-self-conjugate frequencies. A sample
//! of that class is a sum of cosines at those frequencies with per-sample
//! random amplitude and phase, plus white Gaussian pixel noise. The spectrum
//! of a clean sample is therefore exactly the conjugate pairs of the class
//! set, which makes recovery by an attribution method directly checkable.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{conjugate_pair, is_self_conjugate, FeatureIndex};
use crate::nn::dataset::LabeledDataset;
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pub freqs_per_class: usize,
    pub per_class: usize,
    pub sigma: f64,
    pub amp_range: (f64, f64),
    /// Explicit per-class frequency sets; drawn at random when absent.
    pub class_frequencies: Option<Vec<Vec<(usize, usize)>>>,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            height: 32,
            width: 32,
            classes: 4,
            freqs_per_class: 3,
            per_class: 50,
            sigma: 0.1,
            amp_range: (0.5, 1.0),
            class_frequencies: None,
        }
    }
}

/// Ground truth recorded alongside a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedInfo {
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pub freqs_per_class: usize,
    pub sigma: f64,
    pub amp_range: (f64, f64),
    /// Canonical (u, v) per class: the lexicographically smaller member of
    /// each conjugate pair.
    pub class_frequencies: Vec<Vec<(usize, usize)>>,
}

impl PlantedInfo {
    /// Frequencies of one class as spectrum indices on channel 0.
    pub fn class_features(&self, class: usize) -> Vec<FeatureIndex> {
        self.class_frequencies[class]
            .iter()
            .map(|&(u, v)| FeatureIndex { channel: 0, u, v })
            .collect()
    }
}

fn canonical(u: usize, v: usize, h: usize, w: usize) -> (usize, usize) {
    let idx = FeatureIndex { channel: 0, u, v };
    let pair = conjugate_pair(idx, h, w);
    if (pair.u, pair.v) < (u, v) {
        (pair.u, pair.v)
    } else {
        (u, v)
    }
}

fn validate_explicit(
    sets: &[Vec<(usize, usize)>],
    cfg: &PlantedConfig,
) -> Result<Vec<Vec<(usize, usize)>>> {
    if sets.len() != cfg.classes {
        return Err(Error::InvalidConfig(format!(
            "expected {} frequency sets, got {}",
            cfg.classes,
            sets.len()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(sets.len());
    for (c, set) in sets.iter().enumerate() {
        if set.len() != cfg.freqs_per_class {
            return Err(Error::InvalidConfig(format!(
                "class {c} has {} frequencies, expected {}",
                set.len(),
                cfg.freqs_per_class
            )));
        }
        let mut canon_set = Vec::with_capacity(set.len());
        for &(u, v) in set {
            if u >= cfg.height || v >= cfg.width {
                return Err(Error::InvalidConfig(format!(
                    "frequency ({u},{v}) out of range for a {}x{} grid",
                    cfg.height, cfg.width
                )));
            }
            let idx = FeatureIndex { channel: 0, u, v };
            if is_self_conjugate(idx, cfg.height, cfg.width) {
                return Err(Error::InvalidConfig(format!(
                    "frequency ({u},{v}) is self-conjugate and cannot carry a phase"
                )));
            }
            let canon = canonical(u, v, cfg.height, cfg.width);
            if !seen.insert(canon) {
                return Err(Error::InvalidConfig(format!(
                    "frequency ({u},{v}) collides with another class set"
                )));
            }
            canon_set.push(canon);
        }
        out.push(canon_set);
    }
    Ok(out)
}

fn draw_frequency_sets(cfg: &PlantedConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<(usize, usize)>>> {
    let mut pool = Vec::new();
    for u in 0..cfg.height {
        for v in 0..cfg.width {
            let idx = FeatureIndex { channel: 0, u, v };
            if is_self_conjugate(idx, cfg.height, cfg.width) {
                continue;
            }
            if canonical(u, v, cfg.height, cfg.width) == (u, v) {
                pool.push((u, v));
            }
        }
    }
    let needed = cfg.classes * cfg.freqs_per_class;
    if pool.len() < needed {
        return Err(Error::InvalidConfig(format!(
            "grid {}x{} offers {} distinct frequency pairs, need {}",
            cfg.height,
            cfg.width,
            pool.len(),
            needed
        )));
    }
    pool.shuffle(rng);
    Ok(pool[..needed]
        .chunks(cfg.freqs_per_class)
        .map(|c| c.to_vec())
        .collect())
}

/// Generate a deterministic dataset: same seed and config give bit-identical
/// samples. Sample order interleaves classes round-robin.
pub fn generate_planted_dataset(seed: u64, cfg: &PlantedConfig) -> Result<LabeledDataset> {
    if cfg.height == 0 || cfg.width == 0 {
        return Err(Error::InvalidConfig("grid dimensions must be positive".into()));
    }
    if cfg.classes == 0 || cfg.freqs_per_class == 0 || cfg.per_class == 0 {
        return Err(Error::InvalidConfig(
            "classes, freqs_per_class and per_class must be positive".into(),
        ));
    }
    if !(cfg.sigma.is_finite() && cfg.sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise level must be finite and nonnegative, got {}",
            cfg.sigma
        )));
    }
    let (lo, hi) = cfg.amp_range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
        return Err(Error::InvalidConfig(format!(
            "amplitude range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = match &cfg.class_frequencies {
        Some(explicit) => validate_explicit(explicit, cfg)?,
        None => draw_frequency_sets(cfg, &mut rng)?,
    };

    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let (h, w) = (cfg.height, cfg.width);
    let total = cfg.classes * cfg.per_class;
    let mut samples = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let class = i % cfg.classes;
        let mut values = vec![0.0f64; h * w];
        for &(u, v) in &sets[class] {
            let amp = rng.gen_range(lo..=hi);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            for r in 0..h {
                let row_angle = std::f64::consts::TAU * (u * r) as f64 / h as f64;
                for c in 0..w {
                    let col_angle = std::f64::consts::TAU * (v * c) as f64 / w as f64;
                    values[r * w + c] += amp * (row_angle + col_angle + phase).cos();
                }
            }
        }
        if cfg.sigma > 0.0 {
            for value in &mut values {
                *value += cfg.sigma * noise.sample(&mut rng);
            }
        }
        samples.push(Tensor::new(vec![1, h, w], values)?);
        labels.push(class);
    }

    let info = PlantedInfo {
        height: h,
        width: w,
        classes: cfg.classes,
        freqs_per_class: cfg.freqs_per_class,
        sigma: cfg.sigma,
        amp_range: cfg.amp_range,
        class_frequencies: sets,
    };
    Ok(LabeledDataset::new(samples, labels, cfg.classes)?.with_planted(info))
}
