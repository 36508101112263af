//! Minimal differentiable networks: reference backbones, exact input
//! gradients, deterministic SGD training, synthetic datasets with known
//! frequency content, and the on-disk formats tying them together.

pub mod dataset;
pub mod formats;
pub mod model;
pub mod planted;
pub mod tensor;
pub mod train;

pub use dataset::LabeledDataset;
pub use formats::{
    load_checkpoint, load_idx, load_split, load_tensor_file, read_idx_images, read_idx_labels,
    save_checkpoint, save_split, split_batch, write_idx_images, write_idx_labels,
    write_tensor_file, CHECKPOINT_MAGIC, TENSOR_MAGIC,
};
pub use model::{
    argmax, cross_entropy, softmax_confidence, ArchSpec, Checkpoint, ModelSpec, TrainMeta,
};
pub use planted::{generate_planted_dataset, PlantedConfig, PlantedInfo};
pub use tensor::Tensor;
pub use train::{evaluate, train, train_with_history, with_label_noise, TrainConfig, TrainHistory};

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_zero_logits() {
        let spec = ModelSpec::mlp((1, 2, 2), vec![3], 2);
        let zeros = vec![0.0; spec.param_count().unwrap()];
        let ckpt = Checkpoint::new(spec, zeros, TrainMeta::untrained(0)).unwrap();
        let x = Tensor::new(vec![1, 2, 2], vec![1.0, -2.0, 3.0, 4.0]).unwrap();
        assert_eq!(ckpt.forward_single(&x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_dense_layer_matches_hand_computation() {
        // No hidden layers: flatten then one dense map, so logits = Wx + b.
        let spec = ModelSpec::mlp((1, 1, 2), vec![], 2);
        let params = vec![1.0, 2.0, 3.0, 4.0, 0.5, -0.5];
        let ckpt = Checkpoint::new(spec, params, TrainMeta::untrained(0)).unwrap();
        let x = Tensor::new(vec![1, 1, 2], vec![10.0, 20.0]).unwrap();
        assert_eq!(ckpt.forward_single(&x).unwrap(), vec![50.5, 109.5]);
        let g = ckpt.logit_input_gradient(&x, 0).unwrap();
        assert_eq!(g.values(), &[1.0, 2.0]);
        let g1 = ckpt.logit_input_gradient(&x, 1).unwrap();
        assert_eq!(g1.values(), &[3.0, 4.0]);
    }

    #[test]
    fn softmax_rows_are_stable_and_normalized() {
        let logits = Tensor::new(vec![1, 2], vec![1000.0, 0.0]).unwrap();
        let p = softmax_confidence(&logits).unwrap();
        assert_eq!(p.values()[0], 1.0);
        assert_eq!(p.values()[1], 0.0);

        let logits = Tensor::new(vec![2, 3], vec![0.1, -0.4, 2.0, -7.0, -7.0, -7.0]).unwrap();
        let p = softmax_confidence(&logits).unwrap();
        for row in p.rows() {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_of_even_logits_is_ln_two() {
        let logits = Tensor::new(vec![1, 2], vec![0.3, 0.3]).unwrap();
        let ce = cross_entropy(&logits, &[1]).unwrap();
        assert!((ce - std::f64::consts::LN_2).abs() < 1e-12);
    }

    fn fd_input_gradient(ckpt: &Checkpoint, batch: &Tensor, targets: &[usize]) -> Vec<f64> {
        let h = 1e-5;
        let mut grad = vec![0.0; batch.len()];
        for i in 0..batch.len() {
            let mut plus = batch.clone();
            plus.values_mut()[i] += h;
            let mut minus = batch.clone();
            minus.values_mut()[i] -= h;
            let lp = cross_entropy(&ckpt.forward(&plus).unwrap(), targets).unwrap();
            let lm = cross_entropy(&ckpt.forward(&minus).unwrap(), targets).unwrap();
            grad[i] = (lp - lm) / (2.0 * h);
        }
        grad
    }

    fn assert_close_rel(got: &[f64], want: &[f64]) {
        for (i, (&g, &w)) in got.iter().zip(want).enumerate() {
            let tol = (1e-4 * g.abs().max(w.abs())).max(1e-7);
            assert!(
                (g - w).abs() <= tol,
                "component {i}: got {g}, finite differences say {w}"
            );
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for spec in [
            ModelSpec::mlp((1, 3, 3), vec![5], 3),
            ModelSpec::convnet((1, 6, 6), vec![2], 3, 2),
        ] {
            let params = spec.init_params(3).unwrap();
            let classes = spec.classes;
            let ckpt = Checkpoint::new(spec, params, TrainMeta::untrained(3)).unwrap();
            let input_len = ckpt.spec().input_len();
            let values: Vec<f64> = (0..2 * input_len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (c, h, w) = ckpt.spec().input;
            let batch = Tensor::new(vec![2, c, h, w], values).unwrap();
            let targets = vec![0, classes - 1];
            let exact = ckpt.input_gradient(&batch, &targets).unwrap();
            let fd = fd_input_gradient(&ckpt, &batch, &targets);
            assert_close_rel(exact.values(), &fd);
        }
    }

    #[test]
    fn evaluation_never_mutates_the_checkpoint() {
        let spec = ModelSpec::mlp((1, 4, 4), vec![6], 3);
        let params = spec.init_params(7).unwrap();
        let before: Vec<u64> = params.iter().map(|p| p.to_bits()).collect();
        let ckpt = Checkpoint::new(spec, params, TrainMeta::untrained(7)).unwrap();
        let batch = Tensor::new(vec![1, 1, 4, 4], (0..16).map(|i| i as f64 / 16.0).collect())
            .unwrap();
        ckpt.forward(&batch).unwrap();
        ckpt.input_gradient(&batch, &[1]).unwrap();
        let after: Vec<u64> = ckpt.params().iter().map(|p| p.to_bits()).collect();
        assert_eq!(before, after);
    }

    fn toy_separable() -> LabeledDataset {
        // Class means at -1 and +1 with jitter well inside the margin.
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for i in 0..24 {
            let class = i % 2;
            let center = if class == 0 { -1.0 } else { 1.0 };
            let values: Vec<f64> = (0..9).map(|_| center + rng.gen_range(-0.2..0.2)).collect();
            samples.push(Tensor::new(vec![1, 3, 3], values).unwrap());
            labels.push(class);
        }
        LabeledDataset::new(samples, labels, 2).unwrap()
    }

    #[test]
    fn separable_set_reaches_full_training_accuracy() {
        let ds = toy_separable();
        let spec = ModelSpec::mlp((1, 3, 3), vec![4], 2);
        let ckpt = train(
            &spec,
            &ds,
            &TrainConfig {
                seed: 2,
                epochs: 50,
                step_size: 0.1,
                batch_size: 8,
            },
        )
        .unwrap();
        assert_eq!(ckpt.meta().final_accuracy, 1.0);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let ds = toy_separable();
        let spec = ModelSpec::mlp((1, 3, 3), vec![4], 2);
        let cfg = TrainConfig {
            seed: 5,
            epochs: 3,
            step_size: 0.05,
            batch_size: 4,
        };
        let a = train(&spec, &ds, &cfg).unwrap();
        let b = train(&spec, &ds, &cfg).unwrap();
        let bits = |c: &Checkpoint| c.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.meta(), b.meta());
    }

    #[test]
    fn history_tracks_epochs_without_perturbing_training() {
        let ds = toy_separable();
        let spec = ModelSpec::mlp((1, 3, 3), vec![4], 2);
        let cfg = TrainConfig {
            seed: 5,
            epochs: 4,
            step_size: 0.05,
            batch_size: 4,
        };
        let plain = train(&spec, &ds, &cfg).unwrap();
        let (ckpt, history) = train_with_history(&spec, &ds, &cfg).unwrap();
        let bits = |c: &Checkpoint| c.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&plain), bits(&ckpt));
        assert_eq!(history.epoch_loss.len(), 4);
        assert_eq!(history.epoch_accuracy.len(), 4);
        assert_eq!(*history.epoch_loss.last().unwrap(), ckpt.meta().final_loss);
        assert_eq!(
            *history.epoch_accuracy.last().unwrap(),
            ckpt.meta().final_accuracy
        );
    }

    #[test]
    fn zero_epochs_equals_seeded_initialization() {
        let ds = toy_separable();
        let spec = ModelSpec::mlp((1, 3, 3), vec![4], 2);
        let ckpt = train(
            &spec,
            &ds,
            &TrainConfig {
                seed: 9,
                epochs: 0,
                step_size: 0.05,
                batch_size: 4,
            },
        )
        .unwrap();
        assert_eq!(ckpt.params(), spec.init_params(9).unwrap().as_slice());
    }

    #[test]
    fn label_noise_flips_requested_fraction() {
        let ds = toy_separable();
        let noisy = with_label_noise(&ds, 0.5, 1).unwrap();
        let flipped = ds
            .labels()
            .iter()
            .zip(noisy.labels())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(flipped, 12);
        assert!(with_label_noise(&ds, 1.5, 1).is_err());
    }
}
