//! Reference backbones and exact reverse-mode differentiation.
//!
//! Two architectures are bundled: a flatten-dense-relu-dense MLP and a small
//! convnet (stacked 3x3 valid convolutions, one 2x2 average pool, dense
//! head). Everything is f64 and deterministic; the attribution layer only
//! relies on the forward / input-gradient contract, so other backbones can
//! plug in behind `Checkpoint`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ArchSpec {
    /// Flatten, then dense layers of the given widths with ReLU between
    /// them, then a dense projection to the class count.
    Mlp { hidden: Vec<usize> },
    /// `channels.len()` valid 3x3-style convolutions (ReLU after each),
    /// one 2x2 average pool, then a dense projection to the class count.
    ConvNet { channels: Vec<usize>, kernel: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: ArchSpec,
    /// Input shape as (channels, height, width).
    pub input: (usize, usize, usize),
    pub classes: usize,
}

impl ModelSpec {
    pub fn mlp(input: (usize, usize, usize), hidden: Vec<usize>, classes: usize) -> Self {
        Self {
            arch: ArchSpec::Mlp { hidden },
            input,
            classes,
        }
    }

    pub fn convnet(
        input: (usize, usize, usize),
        channels: Vec<usize>,
        kernel: usize,
        classes: usize,
    ) -> Self {
        Self {
            arch: ArchSpec::ConvNet { channels, kernel },
            input,
            classes,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input.0 * self.input.1 * self.input.2
    }

    /// Lower the spec to a concrete layer plan, validating that dimensions
    /// chain all the way to the class count.
    pub(crate) fn plan(&self) -> Result<Plan> {
        let (c, h, w) = self.input;
        if c == 0 || h == 0 || w == 0 || self.classes == 0 {
            return Err(Error::InvalidConfig(format!(
                "degenerate model spec: input {:?}, classes {}",
                self.input, self.classes
            )));
        }
        let mut layers = Vec::new();
        let mut offset = 0usize;
        match &self.arch {
            ArchSpec::Mlp { hidden } => {
                let mut in_dim = self.input_len();
                for &width in hidden {
                    if width == 0 {
                        return Err(Error::InvalidConfig("zero-width hidden layer".into()));
                    }
                    layers.push(Layer::dense(in_dim, width, &mut offset));
                    layers.push(Layer::Relu { dim: width });
                    in_dim = width;
                }
                layers.push(Layer::dense(in_dim, self.classes, &mut offset));
            }
            ArchSpec::ConvNet { channels, kernel } => {
                let k = *kernel;
                if k == 0 {
                    return Err(Error::InvalidConfig("zero conv kernel".into()));
                }
                let (mut ic, mut ih, mut iw) = (c, h, w);
                for &oc in channels {
                    if oc == 0 {
                        return Err(Error::InvalidConfig("zero conv channel count".into()));
                    }
                    if ih < k || iw < k {
                        return Err(Error::InvalidConfig(format!(
                            "conv input {ih}x{iw} smaller than kernel {k}"
                        )));
                    }
                    let (oh, ow) = (ih - k + 1, iw - k + 1);
                    layers.push(Layer::conv(ic, oc, k, ih, iw, &mut offset));
                    layers.push(Layer::Relu { dim: oc * oh * ow });
                    ic = oc;
                    ih = oh;
                    iw = ow;
                }
                if ih < 2 || iw < 2 {
                    return Err(Error::InvalidConfig(format!(
                        "pool input {ih}x{iw} smaller than 2x2"
                    )));
                }
                layers.push(Layer::AvgPool {
                    channels: ic,
                    in_h: ih,
                    in_w: iw,
                });
                let flat = ic * (ih / 2) * (iw / 2);
                layers.push(Layer::dense(flat, self.classes, &mut offset));
            }
        }
        Ok(Plan {
            layers,
            param_count: offset,
        })
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.plan()?.param_count)
    }

    /// He-uniform weights, zero biases, from a dedicated seeded stream.
    pub fn init_params(&self, seed: u64) -> Result<Vec<f64>> {
        let plan = self.plan()?;
        let mut params = vec![0.0; plan.param_count];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &plan.layers {
            match *layer {
                Layer::Dense {
                    in_dim,
                    out_dim,
                    w_off,
                    ..
                } => {
                    let bound = (6.0 / in_dim as f64).sqrt();
                    for p in params[w_off..w_off + in_dim * out_dim].iter_mut() {
                        *p = rng.gen_range(-bound..bound);
                    }
                }
                Layer::Conv {
                    in_c,
                    out_c,
                    k,
                    w_off,
                    ..
                } => {
                    let fan_in = (in_c * k * k) as f64;
                    let bound = (6.0 / fan_in).sqrt();
                    for p in params[w_off..w_off + out_c * in_c * k * k].iter_mut() {
                        *p = rng.gen_range(-bound..bound);
                    }
                }
                _ => {}
            }
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub step_size: f64,
    pub batch_size: usize,
    pub final_loss: f64,
    pub final_accuracy: f64,
}

impl TrainMeta {
    pub fn untrained(seed: u64) -> Self {
        Self {
            seed,
            epochs: 0,
            step_size: 0.0,
            batch_size: 0,
            final_loss: f64::NAN,
            final_accuracy: f64::NAN,
        }
    }
}

/// A frozen-weight network: spec, flat parameter array, training metadata.
/// Immutable after creation; forward and gradient evaluation never touch
/// the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    spec: ModelSpec,
    params: Vec<f64>,
    meta: TrainMeta,
}

impl Checkpoint {
    pub fn new(spec: ModelSpec, params: Vec<f64>, meta: TrainMeta) -> Result<Self> {
        let plan = spec.plan()?;
        if params.len() != plan.param_count {
            return Err(Error::DimensionMismatch(format!(
                "spec expects {} parameters, got {}",
                plan.param_count,
                params.len()
            )));
        }
        if let Some(pos) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("parameter at index {pos}")));
        }
        Ok(Self { spec, params, meta })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn meta(&self) -> &TrainMeta {
        &self.meta
    }

    fn batch_dims(&self, batch: &Tensor) -> Result<usize> {
        let (c, h, w) = self.spec.input;
        match batch.shape() {
            [b, bc, bh, bw] if *bc == c && *bh == h && *bw == w => Ok(*b),
            other => Err(Error::DimensionMismatch(format!(
                "batch shape {other:?} does not match model input ({c}, {h}, {w})"
            ))),
        }
    }

    /// Logits `[B, K]` for a `[B, C, H, W]` batch.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let b = self.batch_dims(batch)?;
        let plan = self.spec.plan()?;
        let mut cur = batch.values().to_vec();
        for layer in &plan.layers {
            cur = layer.forward(&self.params, &cur, b);
        }
        Tensor::new(vec![b, self.spec.classes], cur)
    }

    /// Logits for one `[C, H, W]` sample.
    pub fn forward_single(&self, x: &Tensor) -> Result<Vec<f64>> {
        let batch = single_batch(x)?;
        Ok(self.forward(&batch)?.into_values())
    }

    /// Predicted class (argmax logit, first index on ties) for one sample.
    pub fn predict_single(&self, x: &Tensor) -> Result<usize> {
        Ok(argmax(&self.forward_single(x)?))
    }

    fn forward_cached(&self, batch: &Tensor) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let b = self.batch_dims(batch)?;
        let plan = self.spec.plan()?;
        Ok(forward_cached_flat(&plan, &self.params, batch.values(), b))
    }

    fn backward(
        &self,
        inputs: &[Vec<f64>],
        dlogits: Vec<f64>,
        b: usize,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let plan = self.spec.plan()?;
        Ok(backward_flat(&plan, &self.params, inputs, dlogits, b))
    }

    /// Exact gradient of the batch-mean cross-entropy with respect to the
    /// input batch. Parameters are untouched.
    pub fn input_gradient(&self, batch: &Tensor, targets: &[usize]) -> Result<Tensor> {
        let (dinput, _) = self.loss_gradients(batch, targets)?;
        Tensor::new(batch.shape().to_vec(), dinput)
    }

    /// Gradient of the batch-mean cross-entropy with respect to both the
    /// input and the parameters, plus the loss value itself.
    pub fn loss_and_gradients(
        &self,
        batch: &Tensor,
        targets: &[usize],
    ) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let b = self.batch_dims(batch)?;
        check_targets(targets, b, self.spec.classes)?;
        let (logits, inputs) = self.forward_cached(batch)?;
        let loss = cross_entropy_flat(&logits, targets, self.spec.classes);
        let dlogits = cross_entropy_logit_gradient(&logits, targets, self.spec.classes);
        let (dinput, dparams) = self.backward(&inputs, dlogits, b)?;
        Ok((loss, dinput, dparams))
    }

    fn loss_gradients(&self, batch: &Tensor, targets: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (_, dinput, dparams) = self.loss_and_gradients(batch, targets)?;
        Ok((dinput, dparams))
    }

    /// Gradient of one class logit (not the loss) with respect to one
    /// `[C, H, W]` input.
    pub fn logit_input_gradient(&self, x: &Tensor, class: usize) -> Result<Tensor> {
        if class >= self.spec.classes {
            return Err(Error::InvalidConfig(format!(
                "class {class} out of range for {} classes",
                self.spec.classes
            )));
        }
        let batch = single_batch(x)?;
        let (_, inputs) = self.forward_cached(&batch)?;
        let mut dlogits = vec![0.0; self.spec.classes];
        dlogits[class] = 1.0;
        let (dinput, _) = self.backward(&inputs, dlogits, 1)?;
        Tensor::new(x.shape().to_vec(), dinput)
    }
}

pub(crate) fn single_batch(x: &Tensor) -> Result<Tensor> {
    match x.shape() {
        [c, h, w] => Tensor::new(vec![1, *c, *h, *w], x.values().to_vec()),
        other => Err(Error::DimensionMismatch(format!(
            "expected a [C, H, W] sample, got {other:?}"
        ))),
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_targets(targets: &[usize], batch: usize, classes: usize) -> Result<()> {
    if targets.len() != batch {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for a batch of {batch}",
            targets.len()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::InvalidConfig(format!(
            "target {t} out of range for {classes} classes"
        )));
    }
    Ok(())
}

/// Row-wise softmax with max subtraction; rows sum to 1 within 1e-12.
pub fn softmax_confidence(logits: &Tensor) -> Result<Tensor> {
    let shape = logits.shape();
    if shape.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "softmax expects [B, K] logits, got {shape:?}"
        )));
    }
    let k = shape[1];
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.values().chunks_exact(k) {
        out.extend(softmax_row(row));
    }
    Tensor::new(shape.to_vec(), out)
}

/// Numerically stable softmax of one logit row.
pub fn softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean over the batch of `-log softmax[target]`.
pub fn cross_entropy(logits: &Tensor, targets: &[usize]) -> Result<f64> {
    let shape = logits.shape();
    if shape.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "cross entropy expects [B, K] logits, got {shape:?}"
        )));
    }
    check_targets(targets, shape[0], shape[1])?;
    Ok(cross_entropy_flat(logits.values(), targets, shape[1]))
}

fn cross_entropy_flat(logits: &[f64], targets: &[usize], k: usize) -> f64 {
    let b = targets.len();
    let mut total = 0.0;
    for (row, &t) in logits.chunks_exact(k).zip(targets) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
        total += log_sum - row[t];
    }
    total / b as f64
}

/// d(mean cross-entropy)/d(logits) = (softmax - onehot) / B.
fn cross_entropy_logit_gradient(logits: &[f64], targets: &[usize], k: usize) -> Vec<f64> {
    let b = targets.len();
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &t) in logits.chunks_exact(k).zip(targets) {
        let probs = softmax_row(row);
        for (j, p) in probs.into_iter().enumerate() {
            let delta = if j == t { 1.0 } else { 0.0 };
            grad.push((p - delta) / b as f64);
        }
    }
    grad
}

pub(crate) struct Plan {
    pub layers: Vec<Layer>,
    pub param_count: usize,
}

pub(crate) fn forward_cached_flat(
    plan: &Plan,
    params: &[f64],
    input: &[f64],
    b: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut inputs = Vec::with_capacity(plan.layers.len());
    let mut cur = input.to_vec();
    for layer in &plan.layers {
        let next = layer.forward(params, &cur, b);
        inputs.push(cur);
        cur = next;
    }
    (cur, inputs)
}

pub(crate) fn backward_flat(
    plan: &Plan,
    params: &[f64],
    inputs: &[Vec<f64>],
    dlogits: Vec<f64>,
    b: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut dparams = vec![0.0; plan.param_count];
    let mut grad = dlogits;
    for (layer, input) in plan.layers.iter().zip(inputs).rev() {
        grad = layer.backward(params, input, &grad, b, &mut dparams);
    }
    (grad, dparams)
}

/// Batch-mean cross-entropy and its parameter gradient for in-progress
/// training parameters.
pub(crate) fn training_step(
    plan: &Plan,
    params: &[f64],
    classes: usize,
    batch: &Tensor,
    targets: &[usize],
) -> (f64, Vec<f64>) {
    let b = batch.shape()[0];
    let (logits, inputs) = forward_cached_flat(plan, params, batch.values(), b);
    let loss = cross_entropy_flat(&logits, targets, classes);
    let dlogits = cross_entropy_logit_gradient(&logits, targets, classes);
    let (_, dparams) = backward_flat(plan, params, inputs.as_slice(), dlogits, b);
    (loss, dparams)
}

pub(crate) enum Layer {
    Dense {
        in_dim: usize,
        out_dim: usize,
        w_off: usize,
        b_off: usize,
    },
    Relu {
        dim: usize,
    },
    Conv {
        in_c: usize,
        out_c: usize,
        k: usize,
        in_h: usize,
        in_w: usize,
        w_off: usize,
        b_off: usize,
    },
    AvgPool {
        channels: usize,
        in_h: usize,
        in_w: usize,
    },
}

impl Layer {
    fn dense(in_dim: usize, out_dim: usize, offset: &mut usize) -> Layer {
        let w_off = *offset;
        let b_off = w_off + in_dim * out_dim;
        *offset = b_off + out_dim;
        Layer::Dense {
            in_dim,
            out_dim,
            w_off,
            b_off,
        }
    }

    fn conv(in_c: usize, out_c: usize, k: usize, in_h: usize, in_w: usize, offset: &mut usize) -> Layer {
        let w_off = *offset;
        let b_off = w_off + out_c * in_c * k * k;
        *offset = b_off + out_c;
        Layer::Conv {
            in_c,
            out_c,
            k,
            in_h,
            in_w,
            w_off,
            b_off,
        }
    }

    fn forward(&self, params: &[f64], input: &[f64], b: usize) -> Vec<f64> {
        match *self {
            Layer::Dense {
                in_dim,
                out_dim,
                w_off,
                b_off,
            } => {
                let w = &params[w_off..w_off + in_dim * out_dim];
                let bias = &params[b_off..b_off + out_dim];
                let mut out = vec![0.0; b * out_dim];
                for bi in 0..b {
                    let x = &input[bi * in_dim..(bi + 1) * in_dim];
                    let y = &mut out[bi * out_dim..(bi + 1) * out_dim];
                    for o in 0..out_dim {
                        let row = &w[o * in_dim..(o + 1) * in_dim];
                        let mut acc = bias[o];
                        for i in 0..in_dim {
                            acc += row[i] * x[i];
                        }
                        y[o] = acc;
                    }
                }
                out
            }
            Layer::Relu { dim } => {
                let mut out = input[..b * dim].to_vec();
                for v in out.iter_mut() {
                    if *v <= 0.0 {
                        *v = 0.0;
                    }
                }
                out
            }
            Layer::Conv {
                in_c,
                out_c,
                k,
                in_h,
                in_w,
                w_off,
                b_off,
            } => {
                let (oh, ow) = (in_h - k + 1, in_w - k + 1);
                let mut out = vec![0.0; b * out_c * oh * ow];
                conv_forward(
                    params, input, &mut out, b, in_c, out_c, k, in_h, in_w, oh, ow, w_off, b_off,
                );
                out
            }
            Layer::AvgPool {
                channels,
                in_h,
                in_w,
            } => {
                let (oh, ow) = (in_h / 2, in_w / 2);
                let mut out = vec![0.0; b * channels * oh * ow];
                for bi in 0..b {
                    for c in 0..channels {
                        let xin = (bi * channels + c) * in_h * in_w;
                        let xout = (bi * channels + c) * oh * ow;
                        for i in 0..oh {
                            for j in 0..ow {
                                let base = xin + 2 * i * in_w + 2 * j;
                                out[xout + i * ow + j] = 0.25
                                    * (input[base]
                                        + input[base + 1]
                                        + input[base + in_w]
                                        + input[base + in_w + 1]);
                            }
                        }
                    }
                }
                out
            }
        }
    }

    fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        dout: &[f64],
        b: usize,
        dparams: &mut [f64],
    ) -> Vec<f64> {
        match *self {
            Layer::Dense {
                in_dim,
                out_dim,
                w_off,
                b_off,
            } => {
                let w = &params[w_off..w_off + in_dim * out_dim];
                let mut dinput = vec![0.0; b * in_dim];
                for bi in 0..b {
                    let x = &input[bi * in_dim..(bi + 1) * in_dim];
                    let dy = &dout[bi * out_dim..(bi + 1) * out_dim];
                    let dx = &mut dinput[bi * in_dim..(bi + 1) * in_dim];
                    for o in 0..out_dim {
                        let g = dy[o];
                        if g == 0.0 {
                            continue;
                        }
                        let row = &w[o * in_dim..(o + 1) * in_dim];
                        let drow = &mut dparams[w_off + o * in_dim..w_off + (o + 1) * in_dim];
                        for i in 0..in_dim {
                            dx[i] += g * row[i];
                            drow[i] += g * x[i];
                        }
                        dparams[b_off + o] += g;
                    }
                }
                dinput
            }
            Layer::Relu { dim } => {
                let mut dinput = dout[..b * dim].to_vec();
                for (d, &x) in dinput.iter_mut().zip(input) {
                    if x <= 0.0 {
                        *d = 0.0;
                    }
                }
                dinput
            }
            Layer::Conv {
                in_c,
                out_c,
                k,
                in_h,
                in_w,
                w_off,
                b_off,
            } => {
                let (oh, ow) = (in_h - k + 1, in_w - k + 1);
                let mut dinput = vec![0.0; b * in_c * in_h * in_w];
                for bi in 0..b {
                    for oc in 0..out_c {
                        for i in 0..oh {
                            for j in 0..ow {
                                let g = dout[((bi * out_c + oc) * oh + i) * ow + j];
                                if g == 0.0 {
                                    continue;
                                }
                                dparams[b_off + oc] += g;
                                for ic in 0..in_c {
                                    let wbase = w_off + ((oc * in_c + ic) * k) * k;
                                    let xbase = (bi * in_c + ic) * in_h * in_w;
                                    for p in 0..k {
                                        for q in 0..k {
                                            let xi = xbase + (i + p) * in_w + (j + q);
                                            dparams[wbase + p * k + q] += g * input[xi];
                                            dinput[xi] += g * params[wbase + p * k + q];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                dinput
            }
            Layer::AvgPool {
                channels,
                in_h,
                in_w,
            } => {
                let (oh, ow) = (in_h / 2, in_w / 2);
                let mut dinput = vec![0.0; b * channels * in_h * in_w];
                for bi in 0..b {
                    for c in 0..channels {
                        let xin = (bi * channels + c) * in_h * in_w;
                        let xout = (bi * channels + c) * oh * ow;
                        for i in 0..oh {
                            for j in 0..ow {
                                let g = 0.25 * dout[xout + i * ow + j];
                                let base = xin + 2 * i * in_w + 2 * j;
                                dinput[base] += g;
                                dinput[base + 1] += g;
                                dinput[base + in_w] += g;
                                dinput[base + in_w + 1] += g;
                            }
                        }
                    }
                }
                dinput
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    params: &[f64],
    input: &[f64],
    out: &mut [f64],
    b: usize,
    in_c: usize,
    out_c: usize,
    k: usize,
    in_h: usize,
    in_w: usize,
    oh: usize,
    ow: usize,
    w_off: usize,
    b_off: usize,
) {
    for bi in 0..b {
        for oc in 0..out_c {
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = params[b_off + oc];
                    for ic in 0..in_c {
                        let wbase = w_off + ((oc * in_c + ic) * k) * k;
                        let xbase = (bi * in_c + ic) * in_h * in_w;
                        for p in 0..k {
                            for q in 0..k {
                                acc += params[wbase + p * k + q]
                                    * input[xbase + (i + p) * in_w + (j + q)];
                            }
                        }
                    }
                    out[((bi * out_c + oc) * oh + i) * ow + j] = acc;
                }
            }
        }
    }
}
