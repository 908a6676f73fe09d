//! Deep autoencoder built by unrolling a stack of pretrained RBMs, then
//! refined by backpropagation on the squared reconstruction error.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::rbm::{logistic, RbmParams};
use crate::error::{Error, Result};

/// Affine map followed by the logistic function. `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn forward_one(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut y = self.weights.dot(&x);
        y += &self.bias;
        y.mapv_inplace(logistic);
        y
    }

    fn forward_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.weights.t());
        y += &self.bias;
        y.mapv_inplace(logistic);
        y
    }
}

/// Symmetric encoder/decoder. The first half of `layers` is the encoder,
/// ending in the code layer; the second half mirrors it back.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    layers: Vec<Dense>,
}

/// Gradients for every layer of an [`Autoencoder`], same shapes.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl Autoencoder {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() || !layers.len().is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "autoencoder needs an even, non-zero layer count, got {}",
                layers.len()
            )));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::Shape(format!(
                    "layer output {} feeds input {}",
                    pair[0].outputs(),
                    pair[1].inputs()
                )));
            }
        }
        for l in &layers {
            if l.bias.len() != l.outputs() {
                return Err(Error::Shape("bias length differs from layer outputs".into()));
            }
        }
        let sizes: Vec<usize> = std::iter::once(layers[0].inputs())
            .chain(layers.iter().map(Dense::outputs))
            .collect();
        let mirrored: Vec<usize> = sizes.iter().rev().copied().collect();
        if sizes != mirrored {
            return Err(Error::Shape(format!("layer sizes {sizes:?} are not symmetric")));
        }
        Ok(Autoencoder { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// `[input, F1, ..., code, ..., F1, input]`.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs())
            .chain(self.layers.iter().map(Dense::outputs))
            .collect()
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn code_len(&self) -> usize {
        self.layers[self.layers.len() / 2 - 1].outputs()
    }

    fn encoder(&self) -> &[Dense] {
        &self.layers[..self.layers.len() / 2]
    }

    fn decoder(&self) -> &[Dense] {
        &self.layers[self.layers.len() / 2..]
    }

    pub fn encode_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_len() {
            return Err(Error::Shape(format!(
                "patch of {} values for input {}",
                x.len(),
                self.input_len()
            )));
        }
        let mut a = Array1::from(x.to_vec());
        for l in self.encoder() {
            a = l.forward_one(a.view());
        }
        Ok(a.to_vec())
    }

    pub fn decode_one(&self, code: &[f64]) -> Result<Vec<f64>> {
        if code.len() != self.code_len() {
            return Err(Error::Shape(format!(
                "code of {} values for code layer {}",
                code.len(),
                self.code_len()
            )));
        }
        let mut a = Array1::from(code.to_vec());
        for l in self.decoder() {
            a = l.forward_one(a.view());
        }
        Ok(a.to_vec())
    }

    /// Latent codes for every patch; each patch is processed independently.
    pub fn encode_patches(&self, patches: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        patches.par_iter().map(|p| self.encode_one(p)).collect()
    }

    pub fn decode_patches(&self, codes: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        codes.par_iter().map(|c| self.decode_one(c)).collect()
    }

    pub fn reconstruct_batch(&self, data: ArrayView2<f64>) -> Array2<f64> {
        let mut a = data.to_owned();
        for l in &self.layers {
            a = l.forward_batch(a.view());
        }
        a
    }

    /// Mean over samples and units of `(y - x)^2`.
    pub fn mse(&self, data: ArrayView2<f64>) -> f64 {
        let recon = self.reconstruct_batch(data);
        let total: f64 = recon.iter().zip(data.iter()).map(|(y, x)| (y - x).powi(2)).sum();
        total / data.len().max(1) as f64
    }

    /// Mean squared reconstruction error over `data` and its gradient.
    pub fn loss_and_gradients(&self, data: ArrayView2<f64>) -> (f64, Gradients) {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(data.to_owned());
        for l in &self.layers {
            let next = l.forward_batch(acts.last().expect("non-empty").view());
            acts.push(next);
        }
        let scale = data.len().max(1) as f64;
        let out = acts.last().expect("non-empty");
        let diff = out - &data;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / scale;
        // dL/dz at the output: 2 (y - x) / count * y (1 - y)
        let mut delta = &diff * (2.0 / scale) * &out.mapv(|y| y * (1.0 - y));
        let mut weights = vec![Array2::zeros((0, 0)); self.layers.len()];
        let mut bias = vec![Array1::zeros(0); self.layers.len()];
        for li in (0..self.layers.len()).rev() {
            let input = &acts[li];
            weights[li] = delta.t().dot(input);
            bias[li] = delta.sum_axis(Axis(0));
            if li > 0 {
                let back = delta.dot(&self.layers[li].weights);
                delta = back * &input.mapv(|a| a * (1.0 - a));
            }
        }
        (loss, Gradients { weights, bias })
    }

    /// `||decode(code) - target||^2` and its gradient with respect to `code`.
    pub fn code_loss_and_gradient(&self, code: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
        if code.len() != self.code_len() || target.len() != self.input_len() {
            return Err(Error::Shape("code or target length does not match the network".into()));
        }
        let mut acts = vec![Array1::from(code.to_vec())];
        for l in self.decoder() {
            let next = l.forward_one(acts.last().expect("non-empty").view());
            acts.push(next);
        }
        let out = acts.last().expect("non-empty");
        let diff = out - &ArrayView1::from(target);
        let loss = diff.dot(&diff);
        let mut delta = &diff * 2.0 * &out.mapv(|y| y * (1.0 - y));
        let layers = self.decoder();
        for li in (0..layers.len()).rev() {
            let back = layers[li].weights.t().dot(&delta);
            delta = if li > 0 { back * &acts[li].mapv(|a| a * (1.0 - a)) } else { back };
        }
        Ok((loss, delta.to_vec()))
    }

    /// Projected gradient descent on the code, inside `[0, 1]`, so that the
    /// decoder output moves closer to `target`. Steps that do not lower the
    /// error are halved; the result is never worse than `code`.
    pub fn refine_code(&self, code: &[f64], target: &[f64], iterations: usize) -> Result<Vec<f64>> {
        let mut z = code.to_vec();
        let (mut loss, mut grad) = self.code_loss_and_gradient(&z, target)?;
        let mut step = 1.0;
        for _ in 0..iterations {
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = z.iter().zip(&grad).map(|(a, g)| (a - step * g).clamp(0.0, 1.0)).collect();
                let (trial_loss, trial_grad) = self.code_loss_and_gradient(&trial, target)?;
                if trial_loss < loss {
                    z = trial;
                    loss = trial_loss;
                    grad = trial_grad;
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok(z)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }
}

/// Converts pretrained RBMs into an autoencoder: encoder layer `i` uses
/// RBM `i`'s recognition weights and hidden biases, and the decoder uses
/// the transposed weights with visible biases in reverse order. The decoder
/// holds its own copies, so fine-tuning updates the two halves separately.
pub fn unroll(stack: &[RbmParams]) -> Result<Autoencoder> {
    if stack.is_empty() {
        return Err(Error::Shape("cannot unroll an empty RBM stack".into()));
    }
    for pair in stack.windows(2) {
        if pair[0].hidden() != pair[1].visible() {
            return Err(Error::Shape(format!(
                "rbm with {} hidden units feeds one with {} visible",
                pair[0].hidden(),
                pair[1].visible()
            )));
        }
    }
    let encoder = stack.iter().map(|r| Dense {
        weights: r.w.clone(),
        bias: r.c.clone(),
    });
    let decoder = stack.iter().rev().map(|r| Dense {
        weights: r.w.t().to_owned(),
        bias: r.b.clone(),
    });
    Autoencoder::new(encoder.chain(decoder).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

/// Mini-batch gradient descent with momentum on the reconstruction MSE.
///
/// The full-data MSE is measured after every epoch and the best network
/// seen (including the starting one) is returned, so the result never
/// reconstructs worse than the input network. The returned history starts
/// with the initial MSE.
pub fn finetune(ae: &Autoencoder, data: ArrayView2<f64>, cfg: &FinetuneConfig) -> Result<(Autoencoder, Vec<f64>)> {
    if data.nrows() == 0 {
        return Err(Error::InvalidValue("empty fine-tuning data".into()));
    }
    if data.ncols() != ae.input_len() {
        return Err(Error::Shape(format!(
            "data width {} for input {}",
            data.ncols(),
            ae.input_len()
        )));
    }
    let mut net = ae.clone();
    let mut vel_w: Vec<Array2<f64>> = net.layers.iter().map(|l| Array2::zeros(l.weights.dim())).collect();
    let mut vel_b: Vec<Array1<f64>> = net.layers.iter().map(|l| Array1::zeros(l.bias.len())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    let mut best = net.clone();
    let mut best_mse = net.mse(data);
    let mut history = vec![best_mse];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch = data.select(Axis(0), chunk);
            let (_, grads) = net.loss_and_gradients(batch.view());
            for (i, layer) in net.layers.iter_mut().enumerate() {
                vel_w[i] = &vel_w[i] * cfg.momentum - &grads.weights[i] * cfg.learning_rate;
                vel_b[i] = &vel_b[i] * cfg.momentum - &grads.bias[i] * cfg.learning_rate;
                layer.weights += &vel_w[i];
                layer.bias += &vel_b[i];
            }
        }
        let mse = net.mse(data);
        history.push(mse);
        if mse < best_mse {
            best_mse = mse;
            best = net.clone();
        }
    }
    Ok((best, history))
}

const MODEL_MAGIC: &[u8; 4] = b"DBN1";

/// Serialized model: `"DBN1"`, patch size and layer-size list as
/// little-endian `u32`, then each layer's row-major weights and bias as
/// little-endian `f64`, encoder layers first.
pub fn model_to_bytes(ae: &Autoencoder, patch: usize) -> Vec<u8> {
    let sizes = ae.sizes();
    let mut out = Vec::with_capacity(16 + 8 * ae.parameter_count());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&(patch as u32).to_le_bytes());
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for s in &sizes {
        out.extend_from_slice(&(*s as u32).to_le_bytes());
    }
    for l in &ae.layers {
        for w in l.weights.iter() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for b in l.bias.iter() {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

/// 64-bit FNV-1a hash of the serialized model, used to pair containers
/// with the network that produced them.
pub fn fingerprint(ae: &Autoencoder, patch: usize) -> u64 {
    model_to_bytes(ae, patch)
        .iter()
        .fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Parses [`model_to_bytes`] output; returns the network and its patch size.
pub fn model_from_bytes(bytes: &[u8]) -> Result<(Autoencoder, usize)> {
    let mut cur = crate::binio::ByteReader::new(bytes);
    if cur.take(4)? != MODEL_MAGIC {
        return Err(Error::BadMagic);
    }
    let patch = cur.u32()? as usize;
    let count = cur.u32()? as usize;
    if !(3..=64).contains(&count) {
        return Err(Error::Corrupt(format!("{count} layer sizes")));
    }
    let sizes: Vec<usize> = (0..count).map(|_| cur.u32().map(|s| s as usize)).collect::<Result<_>>()?;
    if sizes[0] != patch * patch {
        return Err(Error::Corrupt(format!(
            "input size {} for patch size {patch}",
            sizes[0]
        )));
    }
    let mut layers = Vec::with_capacity(count - 1);
    for pair in sizes.windows(2) {
        let (inp, out) = (pair[0], pair[1]);
        let weights: Vec<f64> = (0..inp * out).map(|_| cur.f64()).collect::<Result<_>>()?;
        let bias: Vec<f64> = (0..out).map(|_| cur.f64()).collect::<Result<_>>()?;
        layers.push(Dense {
            weights: Array2::from_shape_vec((out, inp), weights).expect("sized"),
            bias: Array1::from(bias),
        });
    }
    if !cur.is_empty() {
        return Err(Error::Corrupt("trailing bytes after model".into()));
    }
    Ok((Autoencoder::new(layers)?, patch))
}

pub fn save_model(path: &Path, ae: &Autoencoder, patch: usize) -> Result<()> {
    fs::write(path, model_to_bytes(ae, patch)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<(Autoencoder, usize)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack(sizes: &[usize], seed: u64) -> Vec<RbmParams> {
        sizes
            .windows(2)
            .enumerate()
            .map(|(i, p)| {
                let mut r = RbmParams::random(p[0], p[1], seed + i as u64);
                r.b.iter_mut().enumerate().for_each(|(j, b)| *b = 0.01 * j as f64);
                r.c.iter_mut().enumerate().for_each(|(j, c)| *c = -0.02 * j as f64);
                r
            })
            .collect()
    }

    #[test]
    fn unrolled_sizes_and_weights() {
        let rbms = stack(&[16, 12, 20, 8, 4], 1);
        let ae = unroll(&rbms).unwrap();
        assert_eq!(ae.sizes(), vec![16, 12, 20, 8, 4, 8, 20, 12, 16]);
        for (i, r) in rbms.iter().enumerate() {
            assert_eq!(ae.layers()[i].weights, r.w);
            assert_eq!(ae.layers()[i].bias, r.c);
        }
        assert_eq!(ae.code_len(), 4);
    }

    #[test]
    fn unroll_rejects_broken_chain() {
        let mut rbms = stack(&[6, 4, 2], 3);
        rbms[1] = RbmParams::random(5, 2, 0);
        assert!(unroll(&rbms).is_err());
    }

    #[test]
    fn forward_equals_mean_field_composition() {
        let rbms = stack(&[9, 7, 5, 3], 4);
        let ae = unroll(&rbms).unwrap();
        let x: Vec<f64> = (0..9).map(|i| (i as f64 * 0.3).sin().abs()).collect();
        let mut a = x.clone();
        for r in &rbms {
            a = r.conditional(super::super::rbm::Side::Hidden, &a).unwrap();
        }
        let code = ae.encode_one(&x).unwrap();
        assert_eq!(code, a);
        for r in rbms.iter().rev() {
            a = r.conditional(super::super::rbm::Side::Visible, &a).unwrap();
        }
        let y = ae.decode_one(&code).unwrap();
        for (p, q) in y.iter().zip(&a) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn codes_are_in_open_unit_interval_and_deterministic() {
        let ae = unroll(&stack(&[4, 8, 2], 9)).unwrap();
        let patches = vec![vec![0.0, 1.0, 0.5, 0.2], vec![1.0; 4]];
        let a = ae.encode_patches(&patches).unwrap();
        let b = ae.encode_patches(&patches).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|c| *c > 0.0 && *c < 1.0));
        assert!(ae.encode_one(&[0.0; 3]).is_err());
        assert!(ae.decode_one(&[0.0; 3]).is_err());
    }

    #[test]
    fn zero_rate_finetune_changes_nothing() {
        let ae = unroll(&stack(&[4, 8, 2], 2)).unwrap();
        let data = Array2::from_shape_fn((6, 4), |(i, j)| ((i + j) % 3) as f64 / 2.0);
        let cfg = FinetuneConfig {
            epochs: 3,
            batch_size: 2,
            learning_rate: 0.0,
            momentum: 0.9,
            seed: 1,
        };
        let (tuned, hist) = finetune(&ae, data.view(), &cfg).unwrap();
        assert_eq!(tuned, ae);
        assert!(hist.iter().all(|h| *h == hist[0]));
    }

    #[test]
    fn model_bytes_roundtrip() {
        let ae = unroll(&stack(&[9, 6, 3], 5)).unwrap();
        let bytes = model_to_bytes(&ae, 3);
        let (back, patch) = model_from_bytes(&bytes).unwrap();
        assert_eq!(back, ae);
        assert_eq!(patch, 3);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(model_from_bytes(&bad), Err(Error::BadMagic)));
        assert!(model_from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}
