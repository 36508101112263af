//! Acceptance gate: numerical oracles plus desk-scale statistical runs.
//! Each criterion prints one pass/fail line (visible with --nocapture) and
//! asserts both its tolerance and its runtime budget.

mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ffc_core::analysis::maintain_rate_curve;
use ffc_core::attribution::{
    baseline_scores, ffc, ffc_importance, ffc_with_trace, integrated_gradients, tensor_spectra,
    AttributionConfig, BaselineKind, ImportanceMap, ProjectionDenominator, TargetPolicy,
};
use ffc_core::fourier::{
    conjugate_pair, delete_components, dft2, idft2, idft2_complex, FeatureIndex, MultiSpectrum,
    RealGrid, Spectrum,
};
use ffc_core::game::{deletion_curves, GameConfig};
use ffc_core::nn::{
    evaluate, generate_planted_dataset, train, with_label_noise, Checkpoint, LabeledDataset,
    ModelSpec, PlantedConfig, Tensor, TrainConfig,
};

fn verdict(criterion: usize, name: &str, pass: bool, details: &str) {
    println!(
        "[criterion {criterion}] {name}: {} ({details})",
        if pass { "PASS" } else { "FAIL" }
    );
}

// ---------------------------------------------------------------------------
// Shared planted fixture: 32x32, K=4, F=3, sigma=0.1, 200 train + 200 eval,
// MLP trained well past the 0.9 accuracy bar.
// ---------------------------------------------------------------------------

struct Fixture {
    eval: LabeledDataset,
    train_set: LabeledDataset,
    ckpt: Checkpoint,
    eval_accuracy: f64,
}

static FIXTURE: OnceLock<Fixture> = OnceLock::new();

fn fixture() -> &'static Fixture {
    FIXTURE.get_or_init(|| {
        let cfg = PlantedConfig::default();
        let train_set = generate_planted_dataset(1301, &cfg).unwrap();
        let mut eval_cfg = cfg.clone();
        eval_cfg.class_frequencies = Some(
            train_set
                .planted()
                .unwrap()
                .class_frequencies
                .clone(),
        );
        let eval = generate_planted_dataset(1302, &eval_cfg).unwrap();
        let spec = ModelSpec::mlp((1, 32, 32), vec![256], 4);
        let tc = TrainConfig {
            seed: 7,
            epochs: 150,
            step_size: 0.1,
            batch_size: 32,
        };
        let ckpt = train(&spec, &train_set, &tc).unwrap();
        let (_, eval_accuracy) = evaluate(&ckpt, &eval).unwrap();
        Fixture {
            eval,
            train_set,
            ckpt,
            eval_accuracy,
        }
    })
}

static FFC_MAPS: OnceLock<Vec<ImportanceMap>> = OnceLock::new();

/// FFC configuration for the statistical criteria: moderate step size keeps
/// the rectification trajectory near the data, and the original-magnitude
/// denominator makes the score sensitive to component enhancement, which is
/// what the planted oracle measures.
fn statistical_ffc_config() -> AttributionConfig {
    AttributionConfig {
        learning_rate: 1.0,
        iterations: 50,
        denominator: ProjectionDenominator::Original,
        ..AttributionConfig::default()
    }
}

/// FFC maps for every eval sample, computed once.
fn ffc_eval_maps() -> &'static [ImportanceMap] {
    FFC_MAPS.get_or_init(|| {
        let f = fixture();
        f.eval
            .samples()
            .par_iter()
            .map(|x| ffc(&f.ckpt, x, &statistical_ffc_config()).unwrap())
            .collect()
    })
}

fn random_eval_maps(base_seed: u64) -> Vec<ImportanceMap> {
    let f = fixture();
    f.eval
        .samples()
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let spectra = tensor_spectra(x).unwrap();
            baseline_scores(
                BaselineKind::Random {
                    seed: base_seed + i as u64,
                },
                &spectra,
            )
            .unwrap()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Criterion 1
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_fft_correctness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_round = 0.0f64;
    let mut worst_naive = 0.0f64;
    let mut worst_parseval = 0.0f64;
    for _ in 0..200 {
        let h = rng.gen_range(4..=32);
        let w = rng.gen_range(4..=32);
        let grid = RealGrid::new(
            h,
            w,
            (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let spectrum = dft2(&grid);
        let back = idft2(&spectrum).unwrap();
        for (a, b) in back.values().iter().zip(grid.values()) {
            worst_round = worst_round.max((a - b).abs());
        }
        let naive = common::naive_dft2(&grid);
        for (a, b) in spectrum.values().iter().zip(&naive) {
            worst_naive = worst_naive.max((a - b).norm());
        }
        let spatial: f64 = grid.values().iter().map(|v| v * v).sum();
        let freq: f64 =
            spectrum.values().iter().map(|c| c.norm_sqr()).sum::<f64>() / (h * w) as f64;
        worst_parseval = worst_parseval.max((spatial - freq).abs() / spatial.abs().max(1e-12));
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass =
        worst_round < 1e-9 && worst_naive < 1e-9 && worst_parseval < 1e-9 && elapsed < 10.0;
    verdict(
        1,
        "FFT correctness",
        pass,
        &format!(
            "round_trip_max={worst_round:.3e}, dft_vs_naive_max={worst_naive:.3e}, \
             parseval_rel_max={worst_parseval:.3e}, runtime={elapsed:.2}s"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 2
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_deletion_well_posedness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_imag = 0.0f64;
    let mut all_idempotent = true;
    for _ in 0..1000 {
        let h = rng.gen_range(4..=16);
        let w = rng.gen_range(4..=16);
        let channels = rng.gen_range(1..=2);
        let spectra = MultiSpectrum::new(
            (0..channels)
                .map(|_| {
                    dft2(
                        &RealGrid::new(
                            h,
                            w,
                            (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                        )
                        .unwrap(),
                    )
                })
                .collect(),
        )
        .unwrap();
        let set: BTreeSet<FeatureIndex> = (0..rng.gen_range(1..=20))
            .map(|_| {
                FeatureIndex::new(
                    rng.gen_range(0..channels),
                    rng.gen_range(0..h),
                    rng.gen_range(0..w),
                )
            })
            .collect();
        let once = delete_components(&spectra, &set, true).unwrap();
        let twice = delete_components(&once, &set, true).unwrap();
        let bits = |s: &MultiSpectrum| -> Vec<u64> {
            s.channels()
                .iter()
                .flat_map(|c| c.values().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]))
                .collect()
        };
        all_idempotent &= bits(&once) == bits(&twice);
        for channel in once.channels() {
            let inverse = idft2_complex(channel);
            for z in inverse.values() {
                worst_imag = worst_imag.max(z.im.abs());
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = worst_imag < 1e-9 && all_idempotent && elapsed < 10.0;
    verdict(
        2,
        "deletion well-posedness",
        pass,
        &format!(
            "imag_residual_max={worst_imag:.3e}, idempotent={all_idempotent}, \
             runtime={elapsed:.2}s"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 3
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_gradient_correctness() {
    let started = Instant::now();
    let mut worst_rel = 0.0f64;
    for instance in 0..20u64 {
        for arch in 0..2 {
            let spec = if arch == 0 {
                ModelSpec::mlp((1, 8, 8), vec![10], 3)
            } else {
                ModelSpec::convnet((1, 6, 6), vec![4], 3, 3)
            };
            let params = spec.init_params(300 + instance).unwrap();
            let ckpt = Checkpoint::new(
                spec.clone(),
                params,
                ffc_core::nn::TrainMeta::untrained(300 + instance),
            )
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(400 + instance * 2 + arch);
            let input_len = spec.input_len();
            let (c, h, w) = if arch == 0 { (1, 8, 8) } else { (1, 6, 6) };
            let batch = Tensor::new(
                vec![2, c, h, w],
                (0..2 * input_len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let targets = vec![rng.gen_range(0..3), rng.gen_range(0..3)];
            let grad = ckpt.input_gradient(&batch, &targets).unwrap();
            for flat in 0..batch.len() {
                let fd = common::fd_loss_gradient(&ckpt, &batch, &targets, flat, 1e-5);
                worst_rel = worst_rel.max(common::relative_error(
                    grad.values()[flat],
                    fd,
                    1e-7,
                ));
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = worst_rel < 1e-4 && elapsed < 60.0;
    verdict(
        3,
        "gradient correctness",
        pass,
        &format!("max_relative_error={worst_rel:.3e}, runtime={elapsed:.2}s"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 4
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_ffc_analytic_invariants() {
    let started = Instant::now();
    let config = AttributionConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let spectra_of = |rng: &mut ChaCha8Rng, h: usize, w: usize| {
        MultiSpectrum::new(vec![dft2(
            &RealGrid::new(h, w, (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap(),
        )])
        .unwrap()
    };

    // X' = X: identically zero at working precision.
    let mut worst_self = 0.0f64;
    for _ in 0..50 {
        let h = rng.gen_range(4..=12);
        let w = rng.gen_range(4..=12);
        let fx = spectra_of(&mut rng, h, w);
        let map = ffc_importance(&fx, &fx, &config).unwrap();
        for &s in map.scores() {
            worst_self = worst_self.max(s.abs());
        }
    }

    // Nonpositivity over 500 random pairs under the default denominator.
    let mut worst_positive = f64::NEG_INFINITY;
    for _ in 0..500 {
        let h = rng.gen_range(4..=12);
        let w = rng.gen_range(4..=12);
        let fx = spectra_of(&mut rng, h, w);
        let fxp = spectra_of(&mut rng, h, w);
        let map = ffc_importance(&fx, &fxp, &config).unwrap();
        for &s in map.scores() {
            worst_positive = worst_positive.max(s);
        }
    }

    // Phase flip of one conjugate pair scores -2|F_X| there.
    let mut worst_flip = 0.0f64;
    for _ in 0..50 {
        let h = rng.gen_range(4..=12);
        let w = rng.gen_range(4..=12);
        let fx = spectra_of(&mut rng, h, w);
        let idx = FeatureIndex::new(0, rng.gen_range(0..h), rng.gen_range(0..w));
        let pair = conjugate_pair(idx, h, w);
        let mut values: Vec<Complex64> = fx.channels()[0].values().to_vec();
        values[idx.u * w + idx.v] = -values[idx.u * w + idx.v];
        if pair != idx {
            values[pair.u * w + pair.v] = -values[pair.u * w + pair.v];
        }
        let fxp =
            MultiSpectrum::new(vec![Spectrum::new(h, w, values, true).unwrap()]).unwrap();
        let map = ffc_importance(&fx, &fxp, &config).unwrap();
        let mag = fx.get(idx).norm();
        if mag > 1e-9 {
            let got = map.score(idx).unwrap();
            worst_flip = worst_flip.max((got + 2.0 * mag).abs());
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass =
        worst_self <= 1e-12 && worst_positive <= 1e-12 && worst_flip < 1e-10 && elapsed < 10.0;
    verdict(
        4,
        "FFC analytic invariants",
        pass,
        &format!(
            "self_max_abs={worst_self:.3e}, positive_excess_max={worst_positive:.3e}, \
             phase_flip_err_max={worst_flip:.3e}, runtime={elapsed:.2}s"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 5
// ---------------------------------------------------------------------------

/// Distinct conjugate pairs (canonical representative per pair) from the
/// top of the ranking.
fn top_pairs(map: &ImportanceMap, count: usize) -> BTreeSet<(usize, usize)> {
    let (_, h, w) = map.dims();
    let mut pairs = BTreeSet::new();
    for idx in map.ranked_desc() {
        let pair = conjugate_pair(idx, h, w);
        let canonical = std::cmp::min((idx.u, idx.v), (pair.u, pair.v));
        pairs.insert(canonical);
        if pairs.len() == count {
            break;
        }
    }
    pairs
}

#[test]
fn criterion_5_planted_frequency_oracle() {
    let started = Instant::now();
    let f = fixture();
    let truth = f.eval.planted().unwrap();
    let maps = ffc_eval_maps();

    // Frequency recovery on correctly classified eval samples.
    let mut recovery_sum = 0.0;
    let mut recovered_samples = 0usize;
    for i in 0..f.eval.len() {
        let x = f.eval.sample(i);
        let label = f.eval.label(i);
        if f.ckpt.predict_single(x).unwrap() != label {
            continue;
        }
        let wanted: BTreeSet<(usize, usize)> =
            truth.class_frequencies[label].iter().copied().collect();
        let found = top_pairs(&maps[i], 2 * wanted.len());
        recovery_sum += found.intersection(&wanted).count() as f64 / wanted.len() as f64;
        recovered_samples += 1;
    }
    let recovery = recovery_sum / recovered_samples as f64;

    // Paired Fourier-game AUC margin over the random baseline.
    let game = GameConfig::fourier();
    let ffc_report = deletion_curves(&f.ckpt, f.eval.samples(), maps, &game).unwrap();
    let random_maps = random_eval_maps(9000);
    let random_report =
        deletion_curves(&f.ckpt, f.eval.samples(), &random_maps, &game).unwrap();
    let diffs: Vec<f64> = ffc_report
        .per_sample_auc()
        .iter()
        .zip(random_report.per_sample_auc())
        .map(|(a, b)| a - b)
        .collect();
    let n = diffs.len() as f64;
    let mean_diff = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let margin_se = mean_diff / se;

    let elapsed = started.elapsed().as_secs_f64();
    let pass = f.eval_accuracy > 0.9
        && recovery >= 0.8
        && margin_se > 3.0
        && elapsed < 300.0;
    verdict(
        5,
        "planted-frequency oracle",
        pass,
        &format!(
            "eval_acc={:.3}, recovery={recovery:.3} over {recovered_samples} samples, \
             auc_ffc={:.2}, auc_random={:.2}, margin={margin_se:.1} SE, runtime={elapsed:.1}s",
            f.eval_accuracy, ffc_report.auc, random_report.auc
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 6
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_sweep_trend() {
    let started = Instant::now();
    let f = fixture();
    let game = GameConfig::fourier();
    let mut neg_losses = Vec::new();
    let mut aucs = Vec::new();
    for &lr in &[0.1, 1.0, 10.0, 100.0, 1000.0] {
        for &iterations in &[1usize, 5, 10, 25, 50] {
            let config = AttributionConfig {
                learning_rate: lr,
                iterations,
                ..statistical_ffc_config()
            };
            let results: Vec<(ImportanceMap, f64)> = f
                .eval
                .samples()
                .par_iter()
                .map(|x| {
                    let (map, trace) = ffc_with_trace(&f.ckpt, x, &config).unwrap();
                    (map, trace.final_loss())
                })
                .collect();
            let mean_loss =
                results.iter().map(|(_, l)| l).sum::<f64>() / results.len() as f64;
            let maps: Vec<ImportanceMap> = results.into_iter().map(|(m, _)| m).collect();
            let report = deletion_curves(&f.ckpt, f.eval.samples(), &maps, &game).unwrap();
            neg_losses.push(-mean_loss);
            aucs.push(report.auc);
        }
    }
    let rho = common::spearman(&neg_losses, &aucs);
    let elapsed = started.elapsed().as_secs_f64();
    let pass = rho > 0.0 && elapsed < 900.0;
    verdict(
        6,
        "sweep trend",
        pass,
        &format!("spearman(-loss, auc)={rho:.3} over 25 cells, runtime={elapsed:.1}s"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 7
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_maintain_rate() {
    let started = Instant::now();
    let f = fixture();
    let maps = ffc_eval_maps();
    let keep = [0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0];
    let rates = maintain_rate_curve(&f.ckpt, f.eval.samples(), maps, &keep).unwrap();
    let at_10 = rates[2];
    let n = f.eval.len() as f64;
    let mut monotone = true;
    for pair in rates.windows(2) {
        let pooled = (pair[0] + pair[1]) / 2.0;
        let se = (pooled * (1.0 - pooled) / n).sqrt();
        if pair[1] < pair[0] - 2.0 * se {
            monotone = false;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = at_10 >= 0.8 && monotone && rates[6] == 1.0 && elapsed < 300.0;
    verdict(
        7,
        "maintain rate",
        pass,
        &format!(
            "rate@10%={at_10:.3}, curve={rates:.3?}, monotone_within_2se={monotone}, \
             runtime={elapsed:.1}s"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 8
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_correction() {
    let started = Instant::now();
    let f = fixture();
    // Degrade training with label noise until the model misclassifies
    // enough eval samples to make a paired comparison meaningful.
    let noisy_train = with_label_noise(&f.train_set, 0.35, 2024).unwrap();
    let spec = ModelSpec::mlp((1, 32, 32), vec![64], 4);
    let tc = TrainConfig {
        seed: 7,
        epochs: 30,
        step_size: 0.1,
        batch_size: 32,
    };
    let noisy_ckpt = train(&spec, &noisy_train, &tc).unwrap();
    let schedule = ffc_core::analysis::default_correction_schedule();
    let ffc_report = ffc_core::analysis::correct_misclassified(
        &noisy_ckpt,
        &f.eval,
        |_, x| ffc(&noisy_ckpt, x, &statistical_ffc_config()),
        &schedule,
        "ffc",
    )
    .unwrap();
    let random_report = ffc_core::analysis::correct_misclassified(
        &noisy_ckpt,
        &f.eval,
        |i, x| {
            let spectra = tensor_spectra(x)?;
            baseline_scores(
                BaselineKind::Random {
                    seed: 7000 + i as u64,
                },
                &spectra,
            )
        },
        &schedule,
        "random",
    )
    .unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let misclassified = ffc_report.misclassified;
    let rate_ffc = ffc_report.rate.unwrap_or(0.0);
    let rate_random = random_report.rate.unwrap_or(0.0);
    let pass = misclassified >= 50
        && random_report.misclassified == misclassified
        && rate_ffc > rate_random
        && elapsed < 300.0;
    verdict(
        8,
        "misclassification correction",
        pass,
        &format!(
            "misclassified={misclassified}, rate_ffc={rate_ffc:.3}, \
             rate_random={rate_random:.3}, runtime={elapsed:.1}s"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 9
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_integrated_gradients_completeness() {
    let started = Instant::now();
    // A trained toy convnet keeps the predicted-class logit well away from
    // its zero-input value, so the per-sample relative gap is well posed.
    let cfg = PlantedConfig {
        height: 6,
        width: 6,
        classes: 2,
        freqs_per_class: 1,
        per_class: 40,
        ..PlantedConfig::default()
    };
    let data = generate_planted_dataset(55, &cfg).unwrap();
    let spec = ModelSpec::convnet((1, 6, 6), vec![3], 3, 2);
    let tc = TrainConfig {
        seed: 11,
        epochs: 40,
        step_size: 0.05,
        batch_size: 16,
    };
    let ckpt = train(&spec, &data, &tc).unwrap();
    let zero = Tensor::zeros(vec![1, 6, 6]);
    let f0s = ckpt.forward_single(&zero).unwrap();
    let mut worst_rel = 0.0f64;
    for i in 0..20 {
        let x = data.sample(i);
        let target = ckpt.predict_single(x).unwrap();
        let map = integrated_gradients(&ckpt, x, TargetPolicy::Label(target), 256).unwrap();
        let total: f64 = map.scores().iter().sum();
        let fx = ckpt.forward_single(x).unwrap()[target];
        let want = fx - f0s[target];
        worst_rel = worst_rel.max((total - want).abs() / want.abs().max(1e-12));
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = worst_rel < 0.01 && elapsed < 60.0;
    verdict(
        9,
        "integrated-gradients completeness",
        pass,
        &format!("max_relative_gap={worst_rel:.4}, runtime={elapsed:.2}s"),
    );
    assert!(pass);
}
