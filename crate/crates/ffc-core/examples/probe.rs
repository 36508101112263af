//! Scratch probe: 5x5 sweep on the planted fixture, scoring each
//! rectification trace under both projection denominators.

use ffc_core::attribution::{
    ffc_importance, rectify, tensor_spectra, AttributionConfig, ImportanceMap,
    ProjectionDenominator,
};
use ffc_core::game::{deletion_curves, GameConfig};
use ffc_core::nn::{evaluate, generate_planted_dataset, train, ModelSpec, PlantedConfig, TrainConfig};
use rayon::prelude::*;

fn average_ranks(values: &[f64]) -> Vec<f64> {
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

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..a.len() {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma).powi(2);
        db += (rb[i] - mb).powi(2);
    }
    if da == 0.0 || db == 0.0 {
        0.0
    } else {
        num / (da * db).sqrt()
    }
}

fn main() {
    let cfg = PlantedConfig::default();
    let train_set = generate_planted_dataset(1301, &cfg).unwrap();
    let mut eval_cfg = cfg.clone();
    eval_cfg.class_frequencies = Some(train_set.planted().unwrap().class_frequencies.clone());
    let eval = generate_planted_dataset(1302, &eval_cfg).unwrap();
    let spec = ModelSpec::mlp((1, 32, 32), vec![256], 4);
    let tc = TrainConfig {
        seed: 7,
        epochs: 150,
        step_size: 0.1,
        batch_size: 32,
    };
    let ckpt = train(&spec, &train_set, &tc).unwrap();
    let (_, acc) = evaluate(&ckpt, &eval).unwrap();
    println!("eval accuracy {acc:.3}");

    let game = GameConfig::fourier();
    let mut neg_losses = Vec::new();
    let mut auc_expected = Vec::new();
    let mut auc_original = Vec::new();
    for &lr in &[0.1, 1.0, 10.0, 100.0, 1000.0] {
        for &iterations in &[1usize, 5, 10, 25, 50] {
            let base = AttributionConfig {
                learning_rate: lr,
                iterations,
                ..AttributionConfig::default()
            };
            let orig_cfg = AttributionConfig {
                denominator: ProjectionDenominator::Original,
                ..base.clone()
            };
            let results: Vec<(ImportanceMap, ImportanceMap, f64)> = eval
                .samples()
                .par_iter()
                .map(|x| {
                    let trace = rectify(&ckpt, x, &base).unwrap();
                    let fx = tensor_spectra(&trace.original).unwrap();
                    let fxp = tensor_spectra(&trace.rectified).unwrap();
                    let exp_map = ffc_importance(&fx, &fxp, &base).unwrap();
                    let orig_map = ffc_importance(&fx, &fxp, &orig_cfg).unwrap();
                    (exp_map, orig_map, trace.final_loss())
                })
                .collect();
            let mean_loss = results.iter().map(|(_, _, l)| l).sum::<f64>() / results.len() as f64;
            let exp_maps: Vec<ImportanceMap> = results.iter().map(|(m, _, _)| m.clone()).collect();
            let orig_maps: Vec<ImportanceMap> = results.iter().map(|(_, m, _)| m.clone()).collect();
            let rep_e = deletion_curves(&ckpt, eval.samples(), &exp_maps, &game).unwrap();
            let rep_o = deletion_curves(&ckpt, eval.samples(), &orig_maps, &game).unwrap();
            println!(
                "lr={lr:<7} iters={iterations:<3} loss={mean_loss:<12.6} auc_exp={:<9.4} auc_orig={:<9.4}",
                rep_e.auc, rep_o.auc
            );
            neg_losses.push(-mean_loss);
            auc_expected.push(rep_e.auc);
            auc_original.push(rep_o.auc);
        }
    }
    println!("spearman(-loss, auc) expected denominator: {:.4}", spearman(&neg_losses, &auc_expected));
    println!("spearman(-loss, auc) original denominator: {:.4}", spearman(&neg_losses, &auc_original));
}
