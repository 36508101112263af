//! Independent oracles shared by the integration and acceptance suites.
//! These deliberately avoid the library's own fast paths: the transform
//! oracle is the O(N^2) definition sum, the gradient oracle is a central
//! finite difference.

#![allow(dead_code)]

use num_complex::Complex64;

use ffc_core::fourier::RealGrid;
use ffc_core::nn::{Checkpoint, Tensor};

/// Definition-sum 2D DFT: F(u,v) = sum_x sum_y g(x,y) e^{-j2pi(ux/m + vy/n)}.
pub fn naive_dft2(grid: &RealGrid) -> Vec<Complex64> {
    let (m, n) = (grid.height(), grid.width());
    let mut out = Vec::with_capacity(m * n);
    for u in 0..m {
        for v in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in 0..m {
                for y in 0..n {
                    let angle = -std::f64::consts::TAU
                        * (u as f64 * x as f64 / m as f64 + v as f64 * y as f64 / n as f64);
                    acc += grid.get(x, y) * Complex64::new(angle.cos(), angle.sin());
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Central finite difference of the mean cross-entropy loss with respect
/// to one input coordinate.
pub fn fd_loss_gradient(
    ckpt: &Checkpoint,
    batch: &Tensor,
    targets: &[usize],
    flat: usize,
    step: f64,
) -> f64 {
    let mut plus = batch.clone();
    plus.values_mut()[flat] += step;
    let mut minus = batch.clone();
    minus.values_mut()[flat] -= step;
    let loss = |b: &Tensor| {
        let logits = ckpt.forward(b).unwrap();
        ffc_core::nn::cross_entropy(&logits, targets).unwrap()
    };
    (loss(&plus) - loss(&minus)) / (2.0 * step)
}

/// Relative error with an absolute floor for near-zero references.
pub fn relative_error(got: f64, want: f64, floor: f64) -> f64 {
    let denom = want.abs().max(floor);
    (got - want).abs() / denom
}

/// Ranks 1..n with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&average_ranks(xs), &average_ranks(ys))
}
