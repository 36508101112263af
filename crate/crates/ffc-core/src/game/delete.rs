//! Budgeted feature deletion with deterministic ordering.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::attribution::{spectra_tensor, tensor_spectra, Domain, ImportanceMap};
use crate::error::{Error, Result};
use crate::fourier::{conjugate_pair, delete_components, FeatureIndex};
use crate::game::GameConfig;
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Delete from the lowest score upward.
    LeastFirst,
    /// Delete from the highest score downward.
    MostFirst,
}

/// Features in deletion order for a direction. Ties break toward the lower
/// flat index in both directions, so negating all scores maps one
/// direction's order onto the other's exactly.
fn deletion_order(map: &ImportanceMap, direction: Direction) -> Vec<FeatureIndex> {
    match direction {
        Direction::MostFirst => map.ranked_desc(),
        Direction::LeastFirst => {
            let mut order: Vec<usize> = (0..map.len()).collect();
            let scores = map.scores();
            order.sort_by(|&a, &b| {
                scores[a]
                    .partial_cmp(&scores[b])
                    .expect("scores are finite")
                    .then(a.cmp(&b))
            });
            order.into_iter().map(|f| map.feature_of_flat(f)).collect()
        }
    }
}

/// The set of features deleted under a scalar budget, walking the score
/// order and taking each affordable item. With conjugate pairing a
/// non-self-conjugate component costs 2 (its partner joins the set); the
/// walk never skips ahead, so sets are nested across budgets. The count
/// matches the budget exactly unless the walk stalls with one unit left
/// in front of a pair.
pub fn budgeted_set(
    map: &ImportanceMap,
    budget: usize,
    direction: Direction,
    pair_conjugates: bool,
) -> BTreeSet<FeatureIndex> {
    let (_, h, w) = map.dims();
    let order = deletion_order(map, direction);
    let mut deleted = BTreeSet::new();
    let mut spent = 0usize;
    for idx in order {
        if deleted.contains(&idx) {
            continue;
        }
        let pair = conjugate_pair(idx, h, w);
        let cost = if pair_conjugates && pair != idx { 2 } else { 1 };
        if spent + cost > budget {
            break;
        }
        deleted.insert(idx);
        if pair_conjugates && pair != idx {
            deleted.insert(pair);
        }
        spent += cost;
    }
    deleted
}

/// Deletion budget for a fraction of `total` features, rounded to nearest.
pub fn budget_for(fraction: f64, total: usize) -> usize {
    (fraction * total as f64).round() as usize
}

/// Zero the lowest- or highest-scored features of one sample. Fourier maps
/// delete spectrum components (conjugate partners included when the config
/// asks, which keeps the inverse real); spatial maps zero pixels directly.
/// A zero budget returns the input bit-exactly.
pub fn delete_fraction(
    x: &Tensor,
    map: &ImportanceMap,
    fraction: f64,
    direction: Direction,
    config: &GameConfig,
) -> Result<Tensor> {
    if !(fraction.is_finite() && (0.0..=1.0).contains(&fraction)) {
        return Err(Error::InvalidConfig(format!(
            "deletion fraction must be in [0,1], got {fraction}"
        )));
    }
    if map.domain() != config.domain {
        return Err(Error::InvalidConfig(format!(
            "map domain {:?} does not match game domain {:?}",
            map.domain(),
            config.domain
        )));
    }
    let dims = map.dims();
    if x.shape() != [dims.0, dims.1, dims.2] {
        return Err(Error::DimensionMismatch(format!(
            "sample shape {:?} does not match map dims {:?}",
            x.shape(),
            dims
        )));
    }
    let budget = budget_for(fraction, map.len());
    if budget == 0 {
        return Ok(x.clone());
    }
    match config.domain {
        Domain::Spatial => {
            let set = budgeted_set(map, budget, direction, false);
            let mut out = x.clone();
            let (_, h, w) = dims;
            for idx in set {
                out.values_mut()[(idx.channel * h + idx.u) * w + idx.v] = 0.0;
            }
            Ok(out)
        }
        Domain::Fourier => {
            let set = budgeted_set(map, budget, direction, config.pair_conjugates);
            let spectra = tensor_spectra(x)?;
            let deleted = delete_components(&spectra, &set, config.pair_conjugates)?;
            spectra_tensor(&deleted)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::tensor_spectra;
    use crate::game::GameConfig;

    fn spatial_cfg() -> GameConfig {
        GameConfig::spatial()
    }

    fn fourier_cfg() -> GameConfig {
        GameConfig::fourier()
    }

    #[test]
    fn zero_fraction_is_bit_exact_identity() {
        let x = Tensor::new(vec![1, 4, 4], (0..16).map(|i| (i as f64).sin()).collect()).unwrap();
        let map = ImportanceMap::new(
            Domain::Fourier,
            (1, 4, 4),
            (0..16).map(|i| i as f64).collect(),
        )
        .unwrap();
        let out = delete_fraction(&x, &map, 0.0, Direction::LeastFirst, &fourier_cfg()).unwrap();
        let bits = |t: &Tensor| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&out), bits(&x));
    }

    #[test]
    fn full_spatial_deletion_zeroes_everything() {
        let x = Tensor::new(vec![2, 2, 2], vec![1.0; 8]).unwrap();
        let map =
            ImportanceMap::new(Domain::Spatial, (2, 2, 2), (0..8).map(|i| i as f64).collect())
                .unwrap();
        let out = delete_fraction(&x, &map, 1.0, Direction::MostFirst, &spatial_cfg()).unwrap();
        assert_eq!(out.values(), &[0.0; 8]);
    }

    #[test]
    fn hand_built_half_deletion_removes_lowest_four() {
        let x = Tensor::new(vec![1, 2, 4], vec![9.0; 8]).unwrap();
        let map = ImportanceMap::new(
            Domain::Spatial,
            (1, 2, 4),
            vec![3.0, 1.0, 4.0, 2.0, 8.0, 6.0, 5.0, 7.0],
        )
        .unwrap();
        let out = delete_fraction(&x, &map, 0.5, Direction::LeastFirst, &spatial_cfg()).unwrap();
        // Scores 1,2,3,4 sit at flat indices 1,3,0,2.
        assert_eq!(
            out.values(),
            &[0.0, 0.0, 0.0, 0.0, 9.0, 9.0, 9.0, 9.0]
        );
    }

    #[test]
    fn paired_deletion_counts_pairs_as_two() {
        // 4x4 grid: rank (1,2) first; its partner (3,2) must join and the
        // budget of 2 must then be exhausted.
        let mut scores = vec![0.0; 16];
        scores[1 * 4 + 2] = -10.0;
        let map = ImportanceMap::new(Domain::Fourier, (1, 4, 4), scores).unwrap();
        let set = budgeted_set(&map, 2, Direction::LeastFirst, true);
        let want: BTreeSet<FeatureIndex> = [
            FeatureIndex { channel: 0, u: 1, v: 2 },
            FeatureIndex { channel: 0, u: 3, v: 2 },
        ]
        .into_iter()
        .collect();
        assert_eq!(set, want);
    }

    #[test]
    fn stalled_budget_stops_short_of_a_pair() {
        let mut scores = vec![0.0; 16];
        scores[1 * 4 + 2] = -10.0;
        let map = ImportanceMap::new(Domain::Fourier, (1, 4, 4), scores).unwrap();
        let set = budgeted_set(&map, 1, Direction::LeastFirst, true);
        assert!(set.is_empty(), "one unit cannot afford a pair");
    }

    #[test]
    fn self_conjugate_costs_one() {
        // DC strictly lowest; budget 1 deletes exactly it.
        let mut scores = vec![0.0; 16];
        scores[0] = -5.0;
        let map = ImportanceMap::new(Domain::Fourier, (1, 4, 4), scores).unwrap();
        let set = budgeted_set(&map, 1, Direction::LeastFirst, true);
        assert_eq!(set.len(), 1);
        assert!(set.contains(&FeatureIndex { channel: 0, u: 0, v: 0 }));
    }

    #[test]
    fn deletion_sets_are_nested_across_budgets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let map = ImportanceMap::new(Domain::Fourier, (1, 6, 6), scores).unwrap();
        let mut prev = BTreeSet::new();
        for budget in 0..=36 {
            let set = budgeted_set(&map, budget, Direction::LeastFirst, true);
            assert!(
                set.is_superset(&prev),
                "budget {budget} lost features from the previous set"
            );
            assert!(budget.saturating_sub(set.len()) <= 1, "shortfall beyond stall");
            prev = set;
        }
        assert_eq!(prev.len(), 36);
    }

    #[test]
    fn fourier_deletion_keeps_signal_real_and_silences_components() {
        let x = Tensor::new(
            vec![1, 8, 8],
            (0..64)
                .map(|i| {
                    let (r, c) = (i / 8, i % 8);
                    (std::f64::consts::TAU * (2 * r) as f64 / 8.0).cos()
                        + 0.5 * (std::f64::consts::TAU * (3 * c) as f64 / 8.0).cos()
                })
                .collect(),
        )
        .unwrap();
        let spectra = tensor_spectra(&x).unwrap();
        let energy = crate::attribution::baseline_scores(
            crate::attribution::BaselineKind::Energy,
            &spectra,
        )
        .unwrap();
        // Deleting the top half by energy must silence both cosines.
        let out = delete_fraction(&x, &energy, 0.25, Direction::MostFirst, &fourier_cfg()).unwrap();
        let out_spectra = tensor_spectra(&out).unwrap();
        assert!(out_spectra.channels()[0].get(2, 0).norm() < 1e-9);
        assert!(out_spectra.channels()[0].get(0, 3).norm() < 1e-9);
    }

    #[test]
    fn equal_count_between_domains() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let values: Vec<f64> = (0..64).map(|_| rng.gen_range(0.5..1.5)).collect();
        let x = Tensor::new(vec![1, 8, 8], values).unwrap();
        let scores: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spatial_map = ImportanceMap::new(Domain::Spatial, (1, 8, 8), scores.clone()).unwrap();
        let fourier_map = ImportanceMap::new(Domain::Fourier, (1, 8, 8), scores).unwrap();
        for fraction in [0.25, 0.5, 0.75] {
            let budget = budget_for(fraction, 64);
            let spatial_out =
                delete_fraction(&x, &spatial_map, fraction, Direction::LeastFirst, &spatial_cfg())
                    .unwrap();
            let zeroed_pixels = spatial_out.values().iter().filter(|v| **v == 0.0).count();
            assert_eq!(zeroed_pixels, budget);
            let set = budgeted_set(&fourier_map, budget, Direction::LeastFirst, true);
            assert!(budget - set.len() <= 1);
        }
    }

    #[test]
    fn domain_mismatch_rejected() {
        let x = Tensor::new(vec![1, 2, 2], vec![1.0; 4]).unwrap();
        let map = ImportanceMap::new(Domain::Spatial, (1, 2, 2), vec![0.0; 4]).unwrap();
        assert!(delete_fraction(&x, &map, 0.5, Direction::LeastFirst, &fourier_cfg()).is_err());
    }
}
