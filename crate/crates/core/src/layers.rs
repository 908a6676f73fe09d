//! Additive layered-display model and layer-pattern optimization.
//!
//! A stack of `K` layers at integer depths `d_k` emits, along the ray with
//! angular offsets `(a_s, a_t)` through spatial position `(u, v)`,
//!
//! ```text
//! L_add(u, v, s, t) = sum_k P_k(u + d_k * a_s, v + d_k * a_t)
//! ```
//!
//! The map `P -> L_add` is linear. Layer patterns for a target light field
//! are found by projected gradient descent on the masked squared error, with
//! every layer sample kept in `[0, 1/K]` so the additive sum stays
//! displayable.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lightfield::{angular_offset, LightField, ViewImage};
use crate::pnm;

/// Per-ray validity, laid out `(t, s, v, u)`.
///
/// A ray is valid when every layer lookup along it lands inside the layer
/// extent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityMask {
    angular: (usize, usize),
    spatial: (usize, usize),
    valid: Vec<bool>,
}

impl ValidityMask {
    /// A mask with every ray valid.
    pub fn full(angular: (usize, usize), spatial: (usize, usize)) -> Self {
        ValidityMask {
            angular,
            spatial,
            valid: vec![true; angular.0 * angular.1 * spatial.0 * spatial.1],
        }
    }

    pub fn angular_dims(&self) -> (usize, usize) {
        self.angular
    }

    pub fn spatial_dims(&self) -> (usize, usize) {
        self.spatial
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn is_valid(&self, t: usize, s: usize, v: usize, u: usize) -> bool {
        let (s_dim, _) = self.angular;
        let (w, h) = self.spatial;
        self.valid[((t * s_dim + s) * h + v) * w + u]
    }
}

/// Geometry shared by the forward and adjoint operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerGeometry {
    pub depths: Vec<i64>,
    pub angular: (usize, usize),
    pub spatial: (usize, usize),
    pub channels: usize,
}

impl LayerGeometry {
    pub fn layer_len(&self) -> usize {
        self.depths.len() * self.channels * self.spatial.0 * self.spatial.1
    }

    pub fn field_len(&self) -> usize {
        self.channels * self.angular.0 * self.angular.1 * self.spatial.0 * self.spatial.1
    }

    fn view_offsets(&self, view: usize) -> (i64, i64) {
        let (s_dim, t_dim) = self.angular;
        let (t, s) = (view / s_dim, view % s_dim);
        (angular_offset(s, s_dim), angular_offset(t, t_dim))
    }

    pub fn validity_mask(&self) -> ValidityMask {
        let (w, h) = self.spatial;
        let plane = w * h;
        let views = self.angular.0 * self.angular.1;
        let mut valid = vec![false; views * plane];
        valid
            .par_chunks_mut(plane)
            .enumerate()
            .for_each(|(view, out)| {
                let (a_s, a_t) = self.view_offsets(view);
                for v in 0..h {
                    for u in 0..w {
                        out[v * w + u] = self.depths.iter().all(|&d| {
                            let x = u as i64 + d * a_s;
                            let y = v as i64 + d * a_t;
                            x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h
                        });
                    }
                }
            });
        ValidityMask {
            angular: self.angular,
            spatial: self.spatial,
            valid,
        }
    }

    /// Forward operator. `layers` is `(k, c, v, u)`; the result is `(c, t, s, v, u)`.
    /// Out-of-extent lookups contribute zero.
    pub fn forward(&self, layers: &[f64]) -> Vec<f64> {
        assert_eq!(layers.len(), self.layer_len(), "layer buffer length");
        let (w, h) = self.spatial;
        let plane = w * h;
        let views = self.angular.0 * self.angular.1;
        let k_count = self.depths.len();
        let mut out = vec![0.0; self.field_len()];
        out.par_chunks_mut(plane).enumerate().for_each(|(idx, dst)| {
            let (c, view) = (idx / views, idx % views);
            let (a_s, a_t) = self.view_offsets(view);
            for (k, &d) in self.depths.iter().enumerate() {
                let src = &layers[(k * self.channels + c) * plane..][..plane];
                let (dx, dy) = (d * a_s, d * a_t);
                for v in 0..h {
                    let y = v as i64 + dy;
                    if y < 0 || y >= h as i64 {
                        continue;
                    }
                    let row = &src[y as usize * w..][..w];
                    let (u_lo, u_hi) = shifted_range(w, dx);
                    let drow = &mut dst[v * w..][..w];
                    for u in u_lo..u_hi {
                        drow[u] += row[(u as i64 + dx) as usize];
                    }
                }
            }
            debug_assert!(k_count > 0);
        });
        out
    }

    /// Exact adjoint of [`forward`](Self::forward) restricted to valid rays.
    pub fn adjoint(&self, field: &[f64], mask: &ValidityMask) -> Vec<f64> {
        assert_eq!(field.len(), self.field_len(), "field buffer length");
        let (w, h) = self.spatial;
        let plane = w * h;
        let views = self.angular.0 * self.angular.1;
        let mut out = vec![0.0; self.layer_len()];
        out.par_chunks_mut(plane).enumerate().for_each(|(idx, dst)| {
            let (k, c) = (idx / self.channels, idx % self.channels);
            let d = self.depths[k];
            for view in 0..views {
                let (a_s, a_t) = self.view_offsets(view);
                let (dx, dy) = (d * a_s, d * a_t);
                let src = &field[(c * views + view) * plane..][..plane];
                let valid = &mask.valid[view * plane..][..plane];
                for v in 0..h {
                    let y = v as i64 + dy;
                    if y < 0 || y >= h as i64 {
                        continue;
                    }
                    let (u_lo, u_hi) = shifted_range(w, dx);
                    let drow = &mut dst[y as usize * w..][..w];
                    for u in u_lo..u_hi {
                        let i = v * w + u;
                        if valid[i] {
                            drow[(u as i64 + dx) as usize] += src[i];
                        }
                    }
                }
            }
        });
        out
    }
}

/// Range of `u` in `[0, w)` for which `u + shift` is also in `[0, w)`.
fn shifted_range(w: usize, shift: i64) -> (usize, usize) {
    let w = w as i64;
    let lo = (-shift).clamp(0, w);
    let hi = (w - shift).clamp(0, w);
    (lo as usize, hi.max(lo) as usize)
}

/// `K` layer patterns at distinct integer depths, each sample in `[0, 1/K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    depths: Vec<i64>,
    spatial: (usize, usize),
    channels: usize,
    data: Vec<f64>,
}

impl LayerStack {
    /// `data` is laid out `(k, c, v, u)`.
    pub fn new(depths: Vec<i64>, spatial: (usize, usize), channels: usize, data: Vec<f64>) -> Result<Self> {
        validate_depths(&depths)?;
        let (w, h) = spatial;
        if w == 0 || h == 0 || channels == 0 {
            return Err(Error::Shape("layer dimensions must be positive".into()));
        }
        let expected = depths.len() * channels * w * h;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "layer buffer has {} samples, expected {expected}",
                data.len()
            )));
        }
        let bound = 1.0 / depths.len() as f64;
        if let Some(x) = data
            .iter()
            .find(|x| !(x.is_finite() && (0.0..=bound).contains(*x)))
        {
            return Err(Error::InvalidValue(format!(
                "layer sample {x} outside [0, {bound}]"
            )));
        }
        Ok(LayerStack {
            depths,
            spatial,
            channels,
            data,
        })
    }

    /// Builds a stack after clamping every sample into `[0, 1/K]`.
    pub fn from_clamped(depths: Vec<i64>, spatial: (usize, usize), channels: usize, mut data: Vec<f64>) -> Result<Self> {
        let bound = 1.0 / depths.len().max(1) as f64;
        for x in &mut data {
            *x = if x.is_nan() { 0.0 } else { x.clamp(0.0, bound) };
        }
        Self::new(depths, spatial, channels, data)
    }

    pub fn layer_count(&self) -> usize {
        self.depths.len()
    }

    pub fn depths(&self) -> &[i64] {
        &self.depths
    }

    pub fn spatial_dims(&self) -> (usize, usize) {
        self.spatial
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Upper bound `1/K` on every layer sample.
    pub fn bound(&self) -> f64 {
        1.0 / self.depths.len() as f64
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        let n = self.channels * self.spatial.0 * self.spatial.1;
        &self.data[k * n..(k + 1) * n]
    }

    pub fn geometry(&self, angular: (usize, usize)) -> LayerGeometry {
        LayerGeometry {
            depths: self.depths.clone(),
            angular,
            spatial: self.spatial,
            channels: self.channels,
        }
    }
}

fn validate_depths(depths: &[i64]) -> Result<()> {
    if depths.is_empty() {
        return Err(Error::InvalidValue("at least one layer is required".into()));
    }
    if depths.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidValue(format!(
            "layer depths {depths:?} must be strictly increasing"
        )));
    }
    Ok(())
}

/// Depths centered on zero: `k - floor(K/2)` for `k = 0..K`.
pub fn default_depths(k: usize) -> Vec<i64> {
    (0..k).map(|i| angular_offset(i, k)).collect()
}

/// Renders the light field seen through `stack` over an `(S, T)` view grid.
pub fn render_additive(stack: &LayerStack, angular: (usize, usize)) -> Result<(LightField, ValidityMask)> {
    if angular.0 == 0 || angular.1 == 0 {
        return Err(Error::Shape("angular dimensions must be positive".into()));
    }
    let geom = stack.geometry(angular);
    let mask = geom.validity_mask();
    let mut field = geom.forward(&stack.data);
    // each sample is a sum of K values in [0, 1/K]; clamp away rounding above 1
    for x in &mut field {
        *x = x.min(1.0);
    }
    let lf = LightField::new(angular, stack.spatial, stack.channels, field)?;
    Ok((lf, mask))
}

/// Transposed render over valid rays: accumulates `residual` back onto each
/// layer pixel. `residual` is `(c, t, s, v, u)`; the result is `(k, c, v, u)`.
pub fn adjoint_scatter(
    residual: &[f64],
    mask: &ValidityMask,
    depths: &[i64],
    spatial: (usize, usize),
    channels: usize,
) -> Result<Vec<f64>> {
    if mask.spatial != spatial {
        return Err(Error::Shape(format!(
            "mask spatial {:?} vs {spatial:?}",
            mask.spatial
        )));
    }
    let geom = LayerGeometry {
        depths: depths.to_vec(),
        angular: mask.angular,
        spatial,
        channels,
    };
    if residual.len() != geom.field_len() {
        return Err(Error::Shape(format!(
            "residual has {} samples, expected {}",
            residual.len(),
            geom.field_len()
        )));
    }
    Ok(geom.adjoint(residual, mask))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub step_size: f64,
    /// Maximum number of step halvings tried per iteration.
    pub max_halvings: usize,
    /// Stop when the relative loss decrease of an accepted step falls below this.
    pub tolerance: f64,
    /// `None` starts every layer at `mean(target) / K`; `Some(seed)` adds
    /// seeded uniform noise inside the feasible box.
    pub seed: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 500,
            step_size: 1.0,
            max_halvings: 30,
            tolerance: 1e-12,
            seed: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("solver.max_iterations must be >= 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config("solver.step_size must be > 0".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config("solver.tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LayerSolution {
    pub stack: LayerStack,
    pub mask: ValidityMask,
    /// Masked loss `0.5 * sum (L - L_add)^2` after initialization and after
    /// every accepted iteration.
    pub loss_history: Vec<f64>,
}

fn masked_loss(target: &[f64], rendered: &[f64], mask: &[bool], residual: &mut [f64]) -> f64 {
    let rays = mask.len();
    let mut loss = 0.0;
    for (i, (t, r)) in target.iter().zip(rendered).enumerate() {
        let d = if mask[i % rays] { t - r } else { 0.0 };
        residual[i] = d;
        loss += d * d;
    }
    0.5 * loss
}

/// Finds layer patterns minimizing the masked squared error against `target`.
pub fn optimize_layers(target: &LightField, depths: &[i64], config: &SolverConfig) -> Result<LayerSolution> {
    config.validate()?;
    validate_depths(depths)?;
    let k = depths.len();
    let bound = 1.0 / k as f64;
    let geom = LayerGeometry {
        depths: depths.to_vec(),
        angular: target.angular_dims(),
        spatial: target.spatial_dims(),
        channels: target.channels(),
    };
    let mask = geom.validity_mask();
    if mask.valid_count() == 0 {
        return Err(Error::EmptyMask);
    }
    let goal = target.samples();

    let mean = goal.iter().sum::<f64>() / goal.len() as f64;
    let mut layers = vec![(mean / k as f64).clamp(0.0, bound); geom.layer_len()];
    if let Some(seed) = config.seed {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for x in &mut layers {
            *x = (*x + bound * 0.1 * (rng.random::<f64>() - 0.5)).clamp(0.0, bound);
        }
    }

    let mut residual = vec![0.0; geom.field_len()];
    let mut loss = masked_loss(goal, &geom.forward(&layers), &mask.valid, &mut residual);
    let mut history = vec![loss];
    let mut step = config.step_size;
    let mut candidate = vec![0.0; layers.len()];
    let mut cand_residual = vec![0.0; residual.len()];

    for _ in 0..config.max_iterations {
        if loss == 0.0 {
            break;
        }
        // gradient of the loss is -A^T r
        let grad = geom.adjoint(&residual, &mask);
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            for ((c, &x), &g) in candidate.iter_mut().zip(&layers).zip(&grad) {
                *c = (x + step * g).clamp(0.0, bound);
            }
            let cand_loss = masked_loss(goal, &geom.forward(&candidate), &mask.valid, &mut cand_residual);
            if cand_loss <= loss {
                accepted = Some(cand_loss);
                break;
            }
            step *= 0.5;
        }
        let Some(new_loss) = accepted else { break };
        let decrease = loss - new_loss;
        std::mem::swap(&mut layers, &mut candidate);
        std::mem::swap(&mut residual, &mut cand_residual);
        loss = new_loss;
        history.push(loss);
        if decrease <= config.tolerance * history[history.len() - 2] {
            break;
        }
        step = (step * 2.0).min(config.step_size);
    }

    let stack = LayerStack::new(depths.to_vec(), geom.spatial, geom.channels, layers)?;
    Ok(LayerSolution {
        stack,
        mask,
        loss_history: history,
    })
}

/// Writes one PGM/PPM per layer (scaled by `K` to use the full range) and a
/// `layers.txt` sidecar with `K`, the depths and the bound.
pub fn save_layers(stack: &LayerStack, dir: &Path, bit_depth: u32) -> Result<PathBuf> {
    let maxval = match bit_depth {
        8 => 255,
        16 => 65535,
        b => return Err(Error::InvalidValue(format!("bit depth {b}"))),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let k = stack.layer_count();
    let (w, h) = stack.spatial;
    let ext = if stack.channels == 1 { "pgm" } else { "ppm" };
    let depths: Vec<String> = stack.depths.iter().map(i64::to_string).collect();
    let mut sidecar = format!(
        "K {k}\ndepths {}\nbeta {}\nchannels {}\nbitdepth {bit_depth}\n",
        depths.join(" "),
        stack.bound(),
        stack.channels
    );
    for i in 0..k {
        let scaled: Vec<f64> = stack.layer(i).iter().map(|x| (x * k as f64).min(1.0)).collect();
        let img = ViewImage::new(w, h, stack.channels, scaled)?.to_pnm(maxval)?;
        let name = format!("layer_{i}.{ext}");
        pnm::write(&dir.join(&name), &img)?;
        sidecar.push_str(&name);
        sidecar.push('\n');
    }
    let path = dir.join("layers.txt");
    fs::write(&path, sidecar).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads a stack written by [`save_layers`].
pub fn load_layers(sidecar: &Path) -> Result<LayerStack> {
    let text = fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
    let base = sidecar.parent().unwrap_or_else(|| Path::new("."));
    let mut k = None;
    let mut depths = None;
    let mut files = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let bad = || Error::Manifest(format!("layer sidecar line {line:?}"));
        match key {
            "K" => k = Some(parts.next().and_then(|v| v.parse::<usize>().ok()).ok_or_else(bad)?),
            "depths" => {
                depths = Some(
                    parts
                        .map(|v| v.parse::<i64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad())?,
                )
            }
            "beta" | "channels" | "bitdepth" => {}
            _ => files.push(base.join(line)),
        }
    }
    let k = k.ok_or_else(|| Error::Manifest("layer sidecar lacks K".into()))?;
    let depths = depths.ok_or_else(|| Error::Manifest("layer sidecar lacks depths".into()))?;
    if depths.len() != k || files.len() != k {
        return Err(Error::Manifest(format!(
            "layer sidecar declares K={k} with {} depths and {} files",
            depths.len(),
            files.len()
        )));
    }
    let mut data = Vec::new();
    let mut dims = None;
    for f in &files {
        let view = ViewImage::from_pnm(&pnm::read(f)?);
        let d = (view.width(), view.height(), view.channels());
        if *dims.get_or_insert(d) != d {
            return Err(Error::Shape(format!("{}: layer size differs", f.display())));
        }
        data.extend(view.samples().iter().map(|x| x / k as f64));
    }
    let (w, h, c) = dims.expect("k >= 1");
    LayerStack::from_clamped(depths, (w, h), c, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_stack(layers: &[&[f64]], depths: Vec<i64>) -> LayerStack {
        let w = layers[0].len();
        let data = layers.iter().flat_map(|l| l.iter().copied()).collect();
        LayerStack::new(depths, (w, 1), 1, data).unwrap()
    }

    #[test]
    fn hand_evaluated_two_layer_row() {
        let stack = LayerStack {
            depths: vec![0, 1],
            spatial: (3, 1),
            channels: 1,
            data: vec![0.1, 0.2, 0.3, 0.0, 0.1, 0.2],
        };
        // S = 3 gives offsets -1, 0, 1; T = 1 gives 0
        let geom = stack.geometry((3, 1));
        let out = geom.forward(&stack.data);
        let mask = geom.validity_mask();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(&out[3..6], &[0.1, 0.3, 0.5]));
        assert!(close(&out[6..8], &[0.2, 0.4]));
        assert!(close(&out[1..3], &[0.2, 0.4]));
        assert_eq!(&mask.as_slice()[0..3], &[false, true, true]);
        assert_eq!(&mask.as_slice()[3..6], &[true, true, true]);
        assert_eq!(&mask.as_slice()[6..9], &[true, true, false]);
    }

    #[test]
    fn single_layer_at_depth_zero_is_identity() {
        let stack = row_stack(&[&[0.1, 0.7, 0.3]], vec![0]);
        let (lf, mask) = render_additive(&stack, (3, 3)).unwrap();
        assert!(mask.as_slice().iter().all(|v| *v));
        for view in lf.views() {
            assert_eq!(view.samples(), stack.data());
        }
    }

    #[test]
    fn zero_layers_render_zero() {
        let stack = LayerStack::new(vec![-1, 0, 1], (4, 4), 3, vec![0.0; 144]).unwrap();
        let (lf, mask) = render_additive(&stack, (3, 3)).unwrap();
        assert!(lf.samples().iter().all(|x| *x == 0.0));
        // the central view never shifts
        assert!((0..16).all(|i| mask.as_slice()[4 * 16 + i]));
    }

    #[test]
    fn adjoint_single_layer_sums_views() {
        let geom = LayerGeometry {
            depths: vec![0],
            angular: (2, 2),
            spatial: (3, 2),
            channels: 1,
        };
        let field: Vec<f64> = (0..24).map(|i| i as f64).collect();
        let mask = geom.validity_mask();
        let g = adjoint_scatter(&field, &mask, &[0], (3, 2), 1).unwrap();
        for p in 0..6 {
            let expected: f64 = (0..4).map(|view| field[view * 6 + p]).sum();
            assert_eq!(g[p], expected);
        }
        let zero = adjoint_scatter(&[0.0; 24], &mask, &[0], (3, 2), 1).unwrap();
        assert!(zero.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn adjoint_rejects_bad_shapes() {
        let mask = ValidityMask::full((2, 2), (3, 2));
        assert!(adjoint_scatter(&[0.0; 10], &mask, &[0], (3, 2), 1).is_err());
        assert!(adjoint_scatter(&[0.0; 24], &mask, &[0], (2, 3), 1).is_err());
    }

    #[test]
    fn depths_must_increase() {
        assert!(LayerStack::new(vec![0, 0], (1, 1), 1, vec![0.0, 0.0]).is_err());
        assert!(LayerStack::new(vec![1, 0], (1, 1), 1, vec![0.0, 0.0]).is_err());
        assert!(LayerStack::new(vec![0, 1], (1, 1), 1, vec![0.6, 0.0]).is_err());
    }

    #[test]
    fn default_depths_are_centered() {
        assert_eq!(default_depths(3), vec![-1, 0, 1]);
        assert_eq!(default_depths(1), vec![0]);
        assert_eq!(default_depths(4), vec![-2, -1, 0, 1]);
    }

    #[test]
    fn zero_target_gives_zero_layers() {
        let target = LightField::zeros((3, 3), (8, 8), 1).unwrap();
        let sol = optimize_layers(&target, &[-1, 0, 1], &SolverConfig::default()).unwrap();
        assert!(sol.stack.data().iter().all(|x| *x == 0.0));
        assert_eq!(sol.loss_history, vec![0.0]);
    }

    #[test]
    fn single_layer_converges_to_view_mean() {
        let (s, t, w, h) = (3, 2, 5, 4);
        let samples: Vec<f64> = (0..s * t * w * h)
            .map(|i| ((i * 37) % 101) as f64 / 100.0)
            .collect();
        let target = LightField::new((s, t), (w, h), 1, samples).unwrap();
        let cfg = SolverConfig {
            tolerance: 0.0,
            ..SolverConfig::default()
        };
        let sol = optimize_layers(&target, &[0], &cfg).unwrap();
        for v in 0..h {
            for u in 0..w {
                let mut mean = 0.0;
                for tt in 0..t {
                    for ss in 0..s {
                        mean += target.get(0, tt, ss, v, u);
                    }
                }
                mean /= (s * t) as f64;
                let got = sol.stack.data()[v * w + u];
                assert!((got - mean).abs() < 1e-6, "{got} vs {mean} after {}", sol.loss_history.len());
            }
        }
    }

    #[test]
    fn sidecar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<f64> = (0..2 * 3 * 4 * 3).map(|i| (i % 128) as f64 / 255.0).collect();
        let stack = LayerStack::new(vec![0, 2], (4, 3), 3, data).unwrap();
        let path = save_layers(&stack, dir.path(), 16).unwrap();
        let back = load_layers(&path).unwrap();
        assert_eq!(back.depths(), stack.depths());
        for (a, b) in back.data().iter().zip(stack.data()) {
            assert!((a - b).abs() < 1.0 / 65535.0);
        }
    }
}
