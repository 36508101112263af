//! High-score feature tagging, class-level concentration (kurtosis), and
//! inter-class specificity counts.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::attribution::{Domain, ImportanceMap};
use crate::error::{Error, Result};

/// Tag each feature 1 when its score strictly exceeds the sample's mean
/// score, 0 otherwise. Scaling all scores by a positive constant leaves
/// the result unchanged: comparisons against the mean scale with it.
pub fn binarize_high_score(map: &ImportanceMap) -> Vec<u8> {
    let mean = map.mean();
    map.scores()
        .iter()
        .map(|&s| u8::from(s > mean))
        .collect()
}

/// Per-sample binary tag vectors with the labels needed to group them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagMatrix {
    tags: Vec<Vec<u8>>,
    labels: Vec<usize>,
    classes: usize,
    feature_count: usize,
}

impl TagMatrix {
    pub fn from_maps(
        maps: &[ImportanceMap],
        labels: &[usize],
        classes: usize,
    ) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidConfig("no maps to tag".into()));
        }
        if maps.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} maps but {} labels",
                maps.len(),
                labels.len()
            )));
        }
        if classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        let feature_count = maps[0].len();
        for map in maps {
            if map.len() != feature_count {
                return Err(Error::DimensionMismatch(format!(
                    "maps disagree on feature count: {} vs {feature_count}",
                    map.len()
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidConfig(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        let tags = maps.iter().map(binarize_high_score).collect();
        Ok(Self {
            tags,
            labels: labels.to_vec(),
            classes,
            feature_count,
        })
    }

    pub fn tags(&self) -> &[Vec<u8>] {
        &self.tags
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    fn samples_of_class(&self, class: usize) -> impl Iterator<Item = &Vec<u8>> {
        self.labels
            .iter()
            .zip(&self.tags)
            .filter_map(move |(&l, t)| (l == class).then_some(t))
    }
}

/// Fisher excess kurtosis with population moments: m4/m2^2 - 3. Undefined
/// (None) for constant input.
pub fn excess_kurtosis(values: &[f64]) -> Option<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return None;
    }
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    Some(m4 / (m2 * m2) - 3.0)
}

/// Sum each class's tag vectors feature-wise and report the excess
/// kurtosis of the summed vector, one entry per class. A class whose sum
/// is constant yields None (kurtosis undefined there).
pub fn class_concentration_kurtosis(tags: &TagMatrix) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(tags.classes());
    for class in 0..tags.classes() {
        let members: Vec<&Vec<u8>> = tags.samples_of_class(class).collect();
        if members.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "class {class} has {} samples; need at least 2",
                members.len()
            )));
        }
        let mut summed = vec![0.0f64; tags.feature_count()];
        for row in members {
            for (acc, &t) in summed.iter_mut().zip(row) {
                *acc += f64::from(t);
            }
        }
        out.push(excess_kurtosis(&summed));
    }
    Ok(out)
}

/// Number of features present (tagged in at least one sample) in exactly
/// one class, i.e. whose inter-class presence mean equals 1/K. Counted
/// with integers, so "exactly" is exact.
pub fn interclass_specificity(tags: &TagMatrix) -> usize {
    let mut class_presence = vec![0u32; tags.feature_count()];
    for class in 0..tags.classes() {
        let mut present = vec![false; tags.feature_count()];
        for row in tags.samples_of_class(class) {
            for (p, &t) in present.iter_mut().zip(row) {
                *p |= t == 1;
            }
        }
        for (count, p) in class_presence.iter_mut().zip(present) {
            *count += u32::from(p);
        }
    }
    class_presence.iter().filter(|&&c| c == 1).count()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharacteristicsReport {
    pub method: String,
    pub domain: Domain,
    pub classes: usize,
    pub feature_count: usize,
    /// Excess kurtosis of each class's summed tag vector; None marks a
    /// constant sum, which is excluded from the mean.
    pub per_class_kurtosis: Vec<Option<f64>>,
    pub mean_kurtosis: Option<f64>,
    pub specificity_count: usize,
}

/// Tag, sum, and summarize a batch of per-sample importance maps.
pub fn characteristics(
    maps: &[ImportanceMap],
    labels: &[usize],
    classes: usize,
    method: &str,
) -> Result<CharacteristicsReport> {
    let domain = maps
        .first()
        .map(|m| m.domain())
        .ok_or_else(|| Error::InvalidConfig("no maps to analyze".into()))?;
    let tags = TagMatrix::from_maps(maps, labels, classes)?;
    let per_class = class_concentration_kurtosis(&tags)?;
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    let mean_kurtosis = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    Ok(CharacteristicsReport {
        method: method.to_string(),
        domain,
        classes,
        feature_count: tags.feature_count(),
        per_class_kurtosis: per_class,
        mean_kurtosis,
        specificity_count: interclass_specificity(&tags),
    })
}

/// Long-format CSV: one name,value row per class plus summary rows.
pub fn write_characteristics_csv<W: Write>(
    report: &CharacteristicsReport,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_csv = |e: csv::Error| Error::format("CSV", e.to_string());
    w.write_record(["name", "value"]).map_err(to_csv)?;
    for (class, k) in report.per_class_kurtosis.iter().enumerate() {
        let value = k.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([format!("kurtosis_class_{class}"), value])
            .map_err(to_csv)?;
    }
    let mean = report
        .mean_kurtosis
        .map(|v| v.to_string())
        .unwrap_or_default();
    w.write_record(["mean_kurtosis".to_string(), mean])
        .map_err(to_csv)?;
    w.write_record([
        "specificity_count".to_string(),
        report.specificity_count.to_string(),
    ])
    .map_err(to_csv)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn map_of(scores: Vec<f64>) -> ImportanceMap {
        let n = scores.len();
        ImportanceMap::new(Domain::Fourier, (1, 1, n), scores).unwrap()
    }

    #[test]
    fn equal_scores_tag_nothing() {
        assert_eq!(binarize_high_score(&map_of(vec![4.0; 6])), vec![0; 6]);
    }

    #[test]
    fn strict_threshold_on_small_example() {
        assert_eq!(
            binarize_high_score(&map_of(vec![1.0, 2.0, 3.0])),
            vec![0, 0, 1]
        );
    }

    #[test]
    fn binarize_matches_two_pass_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scores: Vec<f64> = (0..97).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let got = binarize_high_score(&map_of(scores.clone()));
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        for (i, (&tag, &score)) in got.iter().zip(&scores).enumerate() {
            assert_eq!(tag == 1, score > mean, "feature {i}");
        }
    }

    #[test]
    fn kurtosis_of_spike_vector_matches_direct_formula() {
        let v = [0.0, 0.0, 0.0, 10.0];
        let mean = v.iter().sum::<f64>() / 4.0;
        let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / 4.0;
        let direct = m4 / (m2 * m2) - 3.0;
        let got = excess_kurtosis(&v).unwrap();
        assert!((got - direct).abs() < 1e-12);
        assert!((got - (7.0 / 3.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn kurtosis_of_large_normal_draw_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draw: Vec<f64> = (0..100_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let k = excess_kurtosis(&draw).unwrap();
        assert!(k.abs() < 0.1, "excess kurtosis {k} too far from 0");
    }

    #[test]
    fn constant_vector_kurtosis_is_undefined() {
        assert_eq!(excess_kurtosis(&[2.0; 8]), None);
    }

    #[test]
    fn class_sums_and_undefined_marker() {
        // Class 0: all-equal scores -> all-zero tags -> constant sum -> None.
        // Class 1: a spike pattern with defined kurtosis.
        let maps = vec![
            map_of(vec![1.0; 4]),
            map_of(vec![1.0; 4]),
            map_of(vec![0.0, 0.0, 0.0, 9.0]),
            map_of(vec![0.0, 0.0, 0.0, 9.0]),
        ];
        let tags = TagMatrix::from_maps(&maps, &[0, 0, 1, 1], 2).unwrap();
        let per_class = class_concentration_kurtosis(&tags).unwrap();
        assert_eq!(per_class[0], None);
        let expected = excess_kurtosis(&[0.0, 0.0, 0.0, 2.0]).unwrap();
        assert!((per_class[1].unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples_per_class_rejected() {
        let maps = vec![map_of(vec![1.0, 2.0]), map_of(vec![1.0, 2.0])];
        let tags = TagMatrix::from_maps(&maps, &[0, 1], 2).unwrap();
        assert!(class_concentration_kurtosis(&tags).is_err());
    }

    #[test]
    fn specificity_counts_single_class_features() {
        // Feature 0 tagged in both classes, feature 2 only in class 0,
        // feature 3 only in class 1, feature 1 nowhere.
        let maps = vec![
            map_of(vec![9.0, 0.0, 9.0, 0.0]),
            map_of(vec![9.0, 0.0, 9.0, 0.0]),
            map_of(vec![9.0, 0.0, 0.0, 9.0]),
            map_of(vec![9.0, 0.0, 0.0, 9.0]),
        ];
        let tags = TagMatrix::from_maps(&maps, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(interclass_specificity(&tags), 2);
    }

    #[test]
    fn specificity_matches_brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 24;
        let features = 12;
        let classes = 4;
        let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
        let maps: Vec<ImportanceMap> = (0..n)
            .map(|_| {
                map_of(
                    (0..features)
                        .map(|_| if rng.gen_bool(0.3) { 5.0 } else { -5.0 })
                        .collect(),
                )
            })
            .collect();
        let tags = TagMatrix::from_maps(&maps, &labels, classes).unwrap();
        let mut brute = 0;
        for f in 0..features {
            let mut present = vec![false; classes];
            for (row, &label) in tags.tags().iter().zip(&labels) {
                if row[f] == 1 {
                    present[label] = true;
                }
            }
            if present.iter().filter(|&&p| p).count() == 1 {
                brute += 1;
            }
        }
        assert_eq!(interclass_specificity(&tags), brute);
    }

    #[test]
    fn positive_scaling_leaves_tags_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let scores: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scaled: Vec<f64> = scores.iter().map(|s| s * 37.5).collect();
        let maps = vec![map_of(scores), map_of(scaled)];
        let a = binarize_high_score(&maps[0]);
        let b = binarize_high_score(&maps[1]);
        assert_eq!(a, b);
    }

    #[test]
    fn report_aggregates_and_serializes() {
        let maps = vec![
            map_of(vec![0.0, 0.0, 9.0, 0.0]),
            map_of(vec![0.0, 0.0, 9.0, 1.0]),
            map_of(vec![9.0, 0.0, 0.0, 0.0]),
            map_of(vec![9.0, 1.0, 0.0, 0.0]),
        ];
        let report = characteristics(&maps, &[0, 0, 1, 1], 2, "ffc").unwrap();
        assert_eq!(report.classes, 2);
        assert_eq!(report.per_class_kurtosis.len(), 2);
        assert!(report.specificity_count <= report.feature_count);
        let mut buf = Vec::new();
        write_characteristics_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().count() >= 4);
        assert!(text.contains("specificity_count"));
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("mean_kurtosis"));
    }
}
