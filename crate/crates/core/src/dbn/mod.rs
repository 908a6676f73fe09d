//! Stacked RBMs, greedy pretraining and the unrolled autoencoder used to
//! compress basis-image patches into short latent codes.

pub mod autoencoder;
pub mod patches;
pub mod rbm;

use ndarray::ArrayView2;

pub use autoencoder::{fingerprint, finetune, load_model, save_model, unroll, Autoencoder, Dense, FinetuneConfig};
pub use patches::{depatchify, patchify_coding, patchify_training, NormRecord, PatchDataset, PatchLayout};
pub use rbm::{partition_function_bruteforce, CdTrainer, RbmParams, RbmTraining, Side};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DbnConfig {
    /// Encoder feature counts `[F1, F2, F3, F4]`.
    pub sizes: Vec<usize>,
    pub patch: usize,
    pub stride: usize,
    pub min_variance: f64,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub learning_rate: f64,
    pub finetune_learning_rate: f64,
    pub momentum: f64,
    pub finetune_momentum: f64,
    pub batch_size: usize,
    pub cd_steps: usize,
    pub seed: u64,
    /// Skip the `F2 > F3 > F4`, `F2 > F1` ordering check.
    pub allow_any_sizes: bool,
}

impl Default for DbnConfig {
    fn default() -> Self {
        DbnConfig {
            sizes: vec![128, 256, 64, 32],
            patch: 16,
            stride: 8,
            min_variance: 1e-4,
            pretrain_epochs: 100,
            finetune_epochs: 400,
            learning_rate: 0.05,
            finetune_learning_rate: 10.0,
            momentum: 0.5,
            finetune_momentum: 0.9,
            batch_size: 16,
            cd_steps: 1,
            seed: 0xdb41,
            allow_any_sizes: false,
        }
    }
}

impl DbnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Config(format!("layer sizes {:?} must be non-empty and >= 1", self.sizes)));
        }
        if !self.allow_any_sizes {
            let s = &self.sizes;
            if s.len() != 4 || !(s[1] > s[2] && s[2] > s[3] && s[1] > s[0]) {
                return Err(Error::Config(format!(
                    "layer sizes {s:?} must satisfy F2 > F3 > F4 and F2 > F1 (set allow_any_sizes to override)"
                )));
            }
        }
        if self.patch < 2 {
            return Err(Error::Config(format!("patch size {} is below 2", self.patch)));
        }
        if self.stride == 0 || self.batch_size == 0 || self.cd_steps == 0 {
            return Err(Error::Config("stride, batch size and cd steps must be >= 1".into()));
        }
        for (name, v) in [
            ("learning rate", self.learning_rate),
            ("fine-tune learning rate", self.finetune_learning_rate),
            ("min variance", self.min_variance),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} {v} must be finite and >= 0")));
            }
        }
        for m in [self.momentum, self.finetune_momentum] {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::Config(format!("momentum {m} must be in [0, 1)")));
            }
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.patch * self.patch
    }

    fn rbm_training(&self, layer: usize) -> RbmTraining {
        RbmTraining {
            epochs: self.pretrain_epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            cd_steps: self.cd_steps,
            seed: self.seed.wrapping_add(1000 + layer as u64),
        }
    }

    pub fn finetune_config(&self) -> FinetuneConfig {
        FinetuneConfig {
            epochs: self.finetune_epochs,
            batch_size: self.batch_size,
            learning_rate: self.finetune_learning_rate,
            momentum: self.finetune_momentum,
            seed: self.seed.wrapping_add(2000),
        }
    }
}

/// Greedy layer-wise training: each RBM sees the hidden probabilities of
/// the one below as its data. `data` is `samples x p^2`.
pub fn pretrain_stack(data: ArrayView2<f64>, config: &DbnConfig) -> Result<Vec<RbmParams>> {
    config.validate()?;
    if data.nrows() == 0 {
        return Err(Error::InvalidValue("no training patches".into()));
    }
    if data.ncols() != config.input_len() {
        return Err(Error::Shape(format!(
            "patches of {} values for patch size {}",
            data.ncols(),
            config.patch
        )));
    }
    let mut stack = Vec::with_capacity(config.sizes.len());
    let mut input = data.to_owned();
    let mut visible = config.input_len();
    for (i, &hidden) in config.sizes.iter().enumerate() {
        let mut rbm = RbmParams::random(visible, hidden, config.seed.wrapping_add(i as u64));
        if config.pretrain_epochs > 0 {
            rbm::train_rbm(&mut rbm, input.view(), &config.rbm_training(i))?;
        }
        input = rbm.hidden_probs(input.view());
        visible = hidden;
        stack.push(rbm);
    }
    Ok(stack)
}

/// Reconstruction error before and after fine-tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub patches: usize,
    pub pretrained_mse: f64,
    pub finetuned_mse: f64,
    pub finetune_history: Vec<f64>,
}

/// Pretrain, unroll and fine-tune on `data`.
pub fn train_dbn(data: ArrayView2<f64>, config: &DbnConfig) -> Result<(Autoencoder, TrainingReport)> {
    let stack = pretrain_stack(data, config)?;
    let ae = unroll(&stack)?;
    let (tuned, history) = finetune(&ae, data, &config.finetune_config())?;
    let report = TrainingReport {
        patches: data.nrows(),
        pretrained_mse: history[0],
        finetuned_mse: history.iter().copied().fold(f64::INFINITY, f64::min),
        finetune_history: history,
    };
    Ok((tuned, report))
}
