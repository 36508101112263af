//! Spatial-domain gradient baselines. All of them score against the
//! target-class logit, not the loss.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::attribution::{resolve_target, Domain, ImportanceMap, TargetPolicy};
use crate::error::{Error, Result};
use crate::nn::{Checkpoint, Tensor};

fn map_dims(x: &Tensor) -> (usize, usize, usize) {
    let s = x.shape();
    (s[0], s[1], s[2])
}

/// Elementwise product of the input with the target-logit gradient.
pub fn input_x_gradient(
    ckpt: &Checkpoint,
    x: &Tensor,
    policy: TargetPolicy,
) -> Result<ImportanceMap> {
    let target = resolve_target(ckpt, x, policy)?;
    let grad = ckpt.logit_input_gradient(x, target)?;
    let scores = x
        .values()
        .iter()
        .zip(grad.values())
        .map(|(v, g)| v * g)
        .collect();
    ImportanceMap::new(Domain::Spatial, map_dims(x), scores)
}

/// Midpoint-rule path integral of the target-logit gradient from the zero
/// baseline to the input, times the input.
pub fn integrated_gradients(
    ckpt: &Checkpoint,
    x: &Tensor,
    policy: TargetPolicy,
    steps: usize,
) -> Result<ImportanceMap> {
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()));
    }
    let target = resolve_target(ckpt, x, policy)?;
    let mut acc = vec![0.0f64; x.len()];
    for k in 0..steps {
        let alpha = (k as f64 + 0.5) / steps as f64;
        let mut point = x.clone();
        for v in point.values_mut() {
            *v *= alpha;
        }
        let grad = ckpt.logit_input_gradient(&point, target)?;
        for (a, g) in acc.iter_mut().zip(grad.values()) {
            *a += g;
        }
    }
    let scores = acc
        .into_iter()
        .zip(x.values())
        .map(|(a, v)| a / steps as f64 * v)
        .collect();
    ImportanceMap::new(Domain::Spatial, map_dims(x), scores)
}

/// Mean target-logit gradient under Gaussian input noise. `sigma = 0`
/// short-circuits to the plain gradient so the two agree exactly.
pub fn smoothgrad(
    ckpt: &Checkpoint,
    x: &Tensor,
    policy: TargetPolicy,
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<ImportanceMap> {
    if n == 0 {
        return Err(Error::InvalidConfig("draw count must be at least 1".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise level must be nonnegative, got {sigma}"
        )));
    }
    let target = resolve_target(ckpt, x, policy)?;
    if sigma == 0.0 {
        let grad = ckpt.logit_input_gradient(x, target)?;
        return ImportanceMap::new(Domain::Spatial, map_dims(x), grad.into_values());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut acc = vec![0.0f64; x.len()];
    for _ in 0..n {
        let mut noisy = x.clone();
        for v in noisy.values_mut() {
            *v += sigma * normal.sample(&mut rng);
        }
        let grad = ckpt.logit_input_gradient(&noisy, target)?;
        for (a, g) in acc.iter_mut().zip(grad.values()) {
            *a += g;
        }
    }
    for a in acc.iter_mut() {
        *a /= n as f64;
    }
    ImportanceMap::new(Domain::Spatial, map_dims(x), acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Checkpoint, ModelSpec, TrainMeta};

    /// logits = Wx + b with dyadic weights so small sums stay exact.
    fn linear_model() -> (Checkpoint, Vec<f64>) {
        let spec = ModelSpec::mlp((1, 1, 3), vec![], 2);
        let params = vec![0.5, -0.25, 1.5, 2.0, 0.75, -1.0, 0.125, -0.5];
        let ckpt = Checkpoint::new(spec, params.clone(), TrainMeta::untrained(0)).unwrap();
        (ckpt, params)
    }

    fn toy_convnet() -> Checkpoint {
        use rand::{Rng, SeedableRng};
        let spec = ModelSpec::convnet((1, 6, 6), vec![3], 3, 2);
        let mut params = spec.init_params(18).unwrap();
        // Zero biases make a ReLU net homogeneous (exactly linear along the
        // ray from the origin); jitter everything so the integration path
        // actually crosses activation boundaries.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for p in params.iter_mut() {
            *p += rng.gen_range(-0.1..0.1);
        }
        Checkpoint::new(spec, params, TrainMeta::untrained(18)).unwrap()
    }

    #[test]
    fn zero_input_scores_zero() {
        let (ckpt, _) = linear_model();
        let x = Tensor::new(vec![1, 1, 3], vec![0.0; 3]).unwrap();
        let ixg = input_x_gradient(&ckpt, &x, TargetPolicy::Label(0)).unwrap();
        assert_eq!(ixg.scores(), &[0.0, 0.0, 0.0]);
        let ig = integrated_gradients(&ckpt, &x, TargetPolicy::Label(0), 8).unwrap();
        assert_eq!(ig.scores(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_model_input_x_gradient_is_wx() {
        let (ckpt, params) = linear_model();
        let x = Tensor::new(vec![1, 1, 3], vec![2.0, -4.0, 0.5]).unwrap();
        let map = input_x_gradient(&ckpt, &x, TargetPolicy::Label(1)).unwrap();
        let w1 = &params[3..6];
        let want: Vec<f64> = w1.iter().zip(x.values()).map(|(w, v)| w * v).collect();
        assert_eq!(map.scores(), want.as_slice());
    }

    #[test]
    fn linear_model_integrated_gradients_exact_for_any_steps() {
        let (ckpt, params) = linear_model();
        let x = Tensor::new(vec![1, 1, 3], vec![2.0, -4.0, 0.5]).unwrap();
        let w0 = &params[0..3];
        let want: Vec<f64> = w0.iter().zip(x.values()).map(|(w, v)| w * v).collect();
        for steps in [1, 4, 8] {
            let map = integrated_gradients(&ckpt, &x, TargetPolicy::Label(0), steps).unwrap();
            assert_eq!(map.scores(), want.as_slice(), "steps={steps}");
        }
    }

    #[test]
    fn completeness_on_toy_convnet() {
        let ckpt = toy_convnet();
        let x = Tensor::new(
            vec![1, 6, 6],
            (0..36).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect(),
        )
        .unwrap();
        let target = 1usize;
        let map = integrated_gradients(&ckpt, &x, TargetPolicy::Label(target), 256).unwrap();
        let total: f64 = map.scores().iter().sum();
        let fx = ckpt.forward_single(&x).unwrap()[target];
        let zero = Tensor::new(vec![1, 6, 6], vec![0.0; 36]).unwrap();
        let f0 = ckpt.forward_single(&zero).unwrap()[target];
        let want = fx - f0;
        assert!(
            (total - want).abs() <= 0.01 * want.abs().max(1e-12),
            "sum {total} vs f(x)-f(0) {want}"
        );
    }

    #[test]
    fn doubling_steps_converges_monotonically() {
        use rand::{Rng, SeedableRng};
        let ckpt = toy_convnet();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let values: Vec<f64> = (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = Tensor::new(vec![1, 6, 6], values).unwrap();
        let ig = |steps| {
            integrated_gradients(&ckpt, &x, TargetPolicy::Label(0), steps)
                .unwrap()
                .scores()
                .to_vec()
        };
        let mut distances = Vec::new();
        for k in [8usize, 16, 32, 64] {
            let a = ig(k);
            let b = ig(2 * k);
            let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            distances.push(l1);
        }
        for pair in distances.windows(2) {
            assert!(pair[1] <= pair[0], "distances not decreasing: {distances:?}");
        }
    }

    #[test]
    fn smoothgrad_sigma_zero_equals_plain_gradient() {
        let ckpt = toy_convnet();
        let x = Tensor::new(vec![1, 6, 6], (0..36).map(|i| (i as f64 * 0.2).cos()).collect())
            .unwrap();
        let sg = smoothgrad(&ckpt, &x, TargetPolicy::Label(1), 25, 0.0, 9).unwrap();
        let plain = ckpt.logit_input_gradient(&x, 1).unwrap();
        assert_eq!(sg.scores(), plain.values());
    }

    #[test]
    fn smoothgrad_linear_model_is_constant_in_sigma() {
        let (ckpt, params) = linear_model();
        let x = Tensor::new(vec![1, 1, 3], vec![0.3, 0.6, -0.9]).unwrap();
        let w0 = &params[0..3];
        for sigma in [0.0, 0.5, 2.0] {
            let map = smoothgrad(&ckpt, &x, TargetPolicy::Label(0), 16, sigma, 4).unwrap();
            for (got, want) in map.scores().iter().zip(w0) {
                assert!((got - want).abs() < 1e-12, "sigma={sigma}");
            }
        }
    }

    #[test]
    fn smoothgrad_seeded_reproducibility() {
        let ckpt = toy_convnet();
        let x = Tensor::new(vec![1, 6, 6], (0..36).map(|i| (i as f64 * 0.11).sin()).collect())
            .unwrap();
        let a = smoothgrad(&ckpt, &x, TargetPolicy::Predicted, 10, 0.3, 42).unwrap();
        let b = smoothgrad(&ckpt, &x, TargetPolicy::Predicted, 10, 0.3, 42).unwrap();
        let bits = |m: &ImportanceMap| m.scores().iter().map(|s| s.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = smoothgrad(&ckpt, &x, TargetPolicy::Predicted, 10, 0.3, 43).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn finite_difference_cross_check_input_x_gradient() {
        let ckpt = toy_convnet();
        let x = Tensor::new(
            vec![1, 6, 6],
            (0..36).map(|i| ((i as f64) * 0.47).cos() * 0.8).collect(),
        )
        .unwrap();
        let target = 0usize;
        let map = input_x_gradient(&ckpt, &x, TargetPolicy::Label(target)).unwrap();
        let h = 1e-5;
        for i in 0..x.len() {
            let mut plus = x.clone();
            plus.values_mut()[i] += h;
            let mut minus = x.clone();
            minus.values_mut()[i] -= h;
            let fp = ckpt.forward_single(&plus).unwrap()[target];
            let fm = ckpt.forward_single(&minus).unwrap()[target];
            let fd = (fp - fm) / (2.0 * h) * x.values()[i];
            let got = map.scores()[i];
            let tol = (1e-4 * fd.abs().max(got.abs())).max(1e-7);
            assert!((got - fd).abs() <= tol, "pixel {i}: {got} vs fd {fd}");
        }
    }
}
