//! Binary restricted Boltzmann machines.
//!
//! Energy of a joint state `(v, h)`:
//!
//! ```text
//! E(v, h) = -sum_ij w_ij h_i v_j - sum_j b_j v_j - sum_i c_i h_i
//! ```
//!
//! with `w` stored `m x n` (hidden by visible), visible biases `b` and
//! hidden biases `c`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Largest `n + m` accepted by the brute-force enumerations.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    /// `m x n`.
    pub w: Array2<f64>,
    /// Visible biases, length `n`.
    pub b: Array1<f64>,
    /// Hidden biases, length `m`.
    pub c: Array1<f64>,
}

/// Which layer a conditional is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `p(h_i = 1 | v)`
    Hidden,
    /// `p(v_j = 1 | h)`
    Visible,
}

impl RbmParams {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        RbmParams {
            w: Array2::zeros((hidden, visible)),
            b: Array1::zeros(visible),
            c: Array1::zeros(hidden),
        }
    }

    pub fn new(w: Array2<f64>, b: Array1<f64>, c: Array1<f64>) -> Result<Self> {
        let (m, n) = w.dim();
        if b.len() != n || c.len() != m {
            return Err(Error::Shape(format!(
                "rbm weights {m}x{n} with {} visible and {} hidden biases",
                b.len(),
                c.len()
            )));
        }
        if w.iter().chain(b.iter()).chain(c.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidValue("non-finite rbm parameter".into()));
        }
        Ok(RbmParams { w, b, c })
    }

    /// Small uniform weights scaled by fan-in plus fan-out; zero biases.
    pub fn random(visible: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (6.0 / (visible + hidden) as f64).sqrt();
        let w = Array2::from_shape_fn((hidden, visible), |_| rng.random_range(-a..a));
        RbmParams {
            w,
            b: Array1::zeros(visible),
            c: Array1::zeros(hidden),
        }
    }

    pub fn visible(&self) -> usize {
        self.w.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.w.nrows()
    }

    fn check_visible(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.visible() {
            return Err(Error::Shape(format!(
                "visible vector of {} for {} units",
                v.len(),
                self.visible()
            )));
        }
        Ok(())
    }

    fn check_hidden(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.hidden() {
            return Err(Error::Shape(format!(
                "hidden vector of {} for {} units",
                h.len(),
                self.hidden()
            )));
        }
        Ok(())
    }

    pub fn energy(&self, v: &[f64], h: &[f64]) -> Result<f64> {
        self.check_visible(v)?;
        self.check_hidden(h)?;
        let mut e = 0.0;
        for (i, row) in self.w.outer_iter().enumerate() {
            let mut s = 0.0;
            for (j, w) in row.iter().enumerate() {
                s += w * v[j];
            }
            e -= h[i] * s;
        }
        for (j, b) in self.b.iter().enumerate() {
            e -= b * v[j];
        }
        for (i, c) in self.c.iter().enumerate() {
            e -= c * h[i];
        }
        Ok(e)
    }

    /// `F(v) = -b.v - sum_i softplus(c_i + w_i.v)`, so that
    /// `p(v) = exp(-F(v)) / Z`.
    pub fn free_energy(&self, v: &[f64]) -> Result<f64> {
        self.check_visible(v)?;
        let vv = ArrayView1::from(v);
        let pre = self.w.dot(&vv) + &self.c;
        Ok(-self.b.dot(&vv) - pre.iter().map(|x| softplus(*x)).sum::<f64>())
    }

    /// Factorized conditional probabilities for one side given the other.
    pub fn conditional(&self, side: Side, clamped: &[f64]) -> Result<Vec<f64>> {
        match side {
            Side::Hidden => {
                self.check_visible(clamped)?;
                let pre = self.w.dot(&ArrayView1::from(clamped)) + &self.c;
                Ok(pre.iter().map(|x| logistic(*x)).collect())
            }
            Side::Visible => {
                self.check_hidden(clamped)?;
                let pre = self.w.t().dot(&ArrayView1::from(clamped)) + &self.b;
                Ok(pre.iter().map(|x| logistic(*x)).collect())
            }
        }
    }

    /// Mean-field hidden activations for a batch (`rows x n` -> `rows x m`).
    pub fn hidden_probs(&self, batch: ArrayView2<f64>) -> Array2<f64> {
        let mut pre = batch.dot(&self.w.t());
        pre += &self.c;
        pre.mapv_inplace(logistic);
        pre
    }

    /// Mean-field visible activations for a batch (`rows x m` -> `rows x n`).
    pub fn visible_probs(&self, hidden: ArrayView2<f64>) -> Array2<f64> {
        let mut pre = hidden.dot(&self.w);
        pre += &self.b;
        pre.mapv_inplace(logistic);
        pre
    }

    /// Mean binary cross-entropy of the one-step mean-field reconstruction.
    pub fn reconstruction_cross_entropy(&self, data: ArrayView2<f64>) -> f64 {
        let recon = self.visible_probs(self.hidden_probs(data).view());
        let eps = 1e-12;
        let total: f64 = data
            .iter()
            .zip(recon.iter())
            .map(|(v, r)| {
                let r = r.clamp(eps, 1.0 - eps);
                -(v * r.ln() + (1.0 - v) * (1.0 - r).ln())
            })
            .sum();
        total / data.len().max(1) as f64
    }

    /// Mean squared error of the one-step mean-field reconstruction.
    pub fn reconstruction_mse(&self, data: ArrayView2<f64>) -> f64 {
        let recon = self.visible_probs(self.hidden_probs(data).view());
        let total: f64 = data.iter().zip(recon.iter()).map(|(v, r)| (v - r).powi(2)).sum();
        total / data.len().max(1) as f64
    }
}

fn bits_of(state: usize, offset: usize, len: usize) -> Vec<f64> {
    (0..len).map(|i| ((state >> (offset + i)) & 1) as f64).collect()
}

/// `Z = sum_{v, h} exp(-E(v, h))` by enumerating every joint state.
pub fn partition_function_bruteforce(params: &RbmParams) -> Result<f64> {
    let (n, m) = (params.visible(), params.hidden());
    if n + m > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(n + m, ENUMERATION_LIMIT));
    }
    let mut z = 0.0;
    for state in 0..1usize << (n + m) {
        let v = bits_of(state, 0, n);
        let h = bits_of(state, n, m);
        z += (-params.energy(&v, &h)?).exp();
    }
    Ok(z)
}

/// Momentum state for contrastive-divergence training of one RBM.
#[derive(Debug, Clone)]
pub struct CdTrainer {
    velocity_w: Array2<f64>,
    velocity_b: Array1<f64>,
    velocity_c: Array1<f64>,
    rng: ChaCha8Rng,
}

impl CdTrainer {
    pub fn new(params: &RbmParams, seed: u64) -> Self {
        CdTrainer {
            velocity_w: Array2::zeros(params.w.dim()),
            velocity_b: Array1::zeros(params.b.len()),
            velocity_c: Array1::zeros(params.c.len()),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn sample(&mut self, probs: &Array2<f64>) -> Array2<f64> {
        probs.mapv(|p| if self.rng.random::<f64>() < p { 1.0 } else { 0.0 })
    }

    /// One CD-k step on `batch` (`rows x n`, values in `[0, 1]`).
    ///
    /// Hidden states are sampled as binary; intermediate visible states are
    /// sampled, and the final visible state uses probabilities.
    pub fn cd_update(
        &mut self,
        params: &mut RbmParams,
        batch: ArrayView2<f64>,
        k: usize,
        learning_rate: f64,
        momentum: f64,
    ) -> Result<()> {
        if k == 0 {
            return Err(Error::Config("cd steps must be >= 1".into()));
        }
        if batch.nrows() == 0 {
            return Err(Error::InvalidValue("empty training batch".into()));
        }
        if batch.ncols() != params.visible() {
            return Err(Error::Shape(format!(
                "batch of width {} for {} visible units",
                batch.ncols(),
                params.visible()
            )));
        }
        let rows = batch.nrows() as f64;
        let h0 = params.hidden_probs(batch);
        let mut h_state = self.sample(&h0);
        let mut v_k = Array2::zeros(batch.dim());
        let mut h_k = Array2::zeros(h0.dim());
        for step in 0..k {
            let v_probs = params.visible_probs(h_state.view());
            v_k = if step + 1 == k { v_probs } else { self.sample(&v_probs) };
            h_k = params.hidden_probs(v_k.view());
            if step + 1 < k {
                h_state = self.sample(&h_k);
            }
        }
        let grad_w = (h0.t().dot(&batch) - h_k.t().dot(&v_k)) / rows;
        let grad_b = (batch.sum_axis(Axis(0)) - v_k.sum_axis(Axis(0))) / rows;
        let grad_c = (h0.sum_axis(Axis(0)) - h_k.sum_axis(Axis(0))) / rows;

        self.velocity_w = &self.velocity_w * momentum + grad_w * learning_rate;
        self.velocity_b = &self.velocity_b * momentum + grad_b * learning_rate;
        self.velocity_c = &self.velocity_c * momentum + grad_c * learning_rate;
        params.w += &self.velocity_w;
        params.b += &self.velocity_b;
        params.c += &self.velocity_c;
        Ok(())
    }
}

/// Hyperparameters for training a single RBM.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmTraining {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub cd_steps: usize,
    pub seed: u64,
}

/// Trains `params` for whole epochs over `data`, shuffling with the
/// trainer seed. Returns the reconstruction cross-entropy after each epoch.
pub fn train_rbm(params: &mut RbmParams, data: ArrayView2<f64>, cfg: &RbmTraining) -> Result<Vec<f64>> {
    if data.nrows() == 0 {
        return Err(Error::InvalidValue("empty training data".into()));
    }
    let mut trainer = CdTrainer::new(params, cfg.seed);
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    let batch = cfg.batch_size.max(1);
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        for chunk in order.chunks(batch) {
            let rows = data.select(Axis(0), chunk);
            trainer.cd_update(params, rows.view(), cfg.cd_steps, cfg.learning_rate, cfg.momentum)?;
        }
        history.push(params.reconstruction_cross_entropy(data));
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn example() -> RbmParams {
        RbmParams::new(array![[0.5, -0.25]], array![0.1, 0.2], array![-0.3]).unwrap()
    }

    #[test]
    fn zero_parameters() {
        let p = RbmParams::zeros(2, 1);
        assert_eq!(p.energy(&[1.0, 1.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(partition_function_bruteforce(&p).unwrap(), 8.0);
        assert_eq!(p.conditional(Side::Hidden, &[1.0, 0.0]).unwrap(), vec![0.5]);
        assert_eq!(p.conditional(Side::Visible, &[1.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn hand_evaluated_energy() {
        let e = example().energy(&[1.0, 0.0], &[1.0]).unwrap();
        assert!((e - (-0.3)).abs() < 1e-15);
    }

    #[test]
    fn energy_is_linear_in_parameters() {
        let p = example();
        let doubled = RbmParams::new(&p.w * 2.0, &p.b * 2.0, &p.c * 2.0).unwrap();
        for (v, h) in [([1.0, 0.0], [1.0]), ([1.0, 1.0], [0.0]), ([0.0, 1.0], [1.0])] {
            assert_eq!(doubled.energy(&v, &h).unwrap(), 2.0 * p.energy(&v, &h).unwrap());
        }
    }

    #[test]
    fn hand_evaluated_conditional() {
        let p = example().conditional(Side::Hidden, &[1.0, 0.0]).unwrap();
        assert!((p[0] - 0.549_834).abs() < 1e-6);
        assert!((p[0] - logistic(0.2)).abs() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let p = example();
        assert!(p.energy(&[1.0], &[1.0]).is_err());
        assert!(p.energy(&[1.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(p.conditional(Side::Visible, &[1.0, 0.0]).is_err());
        assert!(partition_function_bruteforce(&RbmParams::zeros(15, 6)).is_err());
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut p = RbmParams::random(4, 3, 11);
        let before = p.clone();
        let mut t = CdTrainer::new(&p, 5);
        let data = array![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.5, 1.0]];
        t.cd_update(&mut p, data.view(), 2, 0.0, 0.5).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn cd_rejects_bad_input() {
        let mut p = RbmParams::random(4, 3, 11);
        let mut t = CdTrainer::new(&p, 5);
        let data = array![[1.0, 0.0, 1.0, 0.0]];
        assert!(t.cd_update(&mut p, data.view(), 0, 0.1, 0.5).is_err());
        let narrow = array![[1.0, 0.0]];
        assert!(t.cd_update(&mut p, narrow.view(), 1, 0.1, 0.5).is_err());
    }

    #[test]
    fn free_energy_matches_hidden_marginal() {
        let p = example();
        for v in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            let marginal: f64 = [0.0, 1.0]
                .iter()
                .map(|h| (-p.energy(&v, &[*h]).unwrap()).exp())
                .sum();
            let f = p.free_energy(&v).unwrap();
            assert!(((-f).exp() - marginal).abs() < 1e-12);
        }
    }
}
