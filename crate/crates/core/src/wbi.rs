//! Scalable weighted-binary-image factorization.
//!
//! A stack of `J` images `y_j(u, v, c)` is approximated as
//!
//! ```text
//! y_j ~= sum_n B[n, j] * r_n(u, v, c),   B[n, j] in {0, 1}
//! ```
//!
//! with binary codes over the stack index and real basis images over
//! pixels. Codes and basis images are optimized alternately: the basis step
//! is a ridge least-squares problem sharing one small Gram matrix across all
//! pixels, and the code step is an exhaustive search over `2^n` bit vectors
//! per stack index using precomputed inner products.
//!
//! The `N` components are split into `M` groups. Group `m` is fitted to the
//! residual left by groups `1..m`, so decoding any prefix of the groups
//! gives a progressively better approximation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layers::LayerStack;
use crate::linalg::SemidefiniteCholesky;
use crate::lightfield::LightField;

/// `J` real images of shared size, laid out `(j, c, v, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    count: usize,
    channels: usize,
    spatial: (usize, usize),
    data: Vec<f64>,
}

impl ImageStack {
    pub fn new(count: usize, channels: usize, spatial: (usize, usize), data: Vec<f64>) -> Result<Self> {
        if count == 0 || channels == 0 || spatial.0 == 0 || spatial.1 == 0 {
            return Err(Error::Shape("image stack dimensions must be positive".into()));
        }
        let expected = count * channels * spatial.0 * spatial.1;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "image stack has {} samples, expected {expected}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidValue("image stack holds non-finite values".into()));
        }
        Ok(ImageStack {
            count,
            channels,
            spatial,
            data,
        })
    }

    pub fn zeros(count: usize, channels: usize, spatial: (usize, usize)) -> Self {
        ImageStack {
            count,
            channels,
            spatial,
            data: vec![0.0; count * channels * spatial.0 * spatial.1],
        }
    }

    /// The `K` layer patterns as a `J = K` stack.
    pub fn from_layers(stack: &LayerStack) -> Self {
        ImageStack {
            count: stack.layer_count(),
            channels: stack.channels(),
            spatial: stack.spatial_dims(),
            data: stack.data().to_vec(),
        }
    }

    /// The `S * T` views as a stack, `j = t * S + s`.
    pub fn from_views(lf: &LightField) -> Self {
        let views = lf.view_count();
        let channels = lf.channels();
        let (w, h) = lf.spatial_dims();
        let plane = w * h;
        let mut data = vec![0.0; views * channels * plane];
        for c in 0..channels {
            for view in 0..views {
                let src = (c * views + view) * plane;
                let dst = (view * channels + c) * plane;
                data[dst..dst + plane].copy_from_slice(&lf.samples()[src..src + plane]);
            }
        }
        ImageStack {
            count: views,
            channels,
            spatial: (w, h),
            data,
        }
    }

    /// Inverse of [`from_views`](Self::from_views); samples are clamped into `[0, 1]`.
    pub fn to_light_field(&self, angular: (usize, usize)) -> Result<LightField> {
        if angular.0 * angular.1 != self.count {
            return Err(Error::Shape(format!(
                "{} images for a {}x{} grid",
                self.count, angular.0, angular.1
            )));
        }
        let plane = self.spatial.0 * self.spatial.1;
        let views = self.count;
        let mut samples = vec![0.0; self.data.len()];
        for view in 0..views {
            for c in 0..self.channels {
                let src = (view * self.channels + c) * plane;
                let dst = (c * views + view) * plane;
                for i in 0..plane {
                    samples[dst + i] = self.data[src + i].clamp(0.0, 1.0);
                }
            }
        }
        LightField::new(angular, self.spatial, self.channels, samples)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn spatial_dims(&self) -> (usize, usize) {
        self.spatial
    }

    /// Samples per image, `C * W * H`.
    pub fn image_len(&self) -> usize {
        self.channels * self.spatial.0 * self.spatial.1
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn image(&self, j: usize) -> &[f64] {
        let n = self.image_len();
        &self.data[j * n..(j + 1) * n]
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    fn same_shape(&self, other: &ImageStack) -> bool {
        self.count == other.count && self.channels == other.channels && self.spatial == other.spatial
    }
}

/// Binary matrix `B` with `rows` components and `cols` stack indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl CodeMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CodeMatrix {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn from_bits(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} code bits for a {rows}x{cols} matrix",
                bits.len()
            )));
        }
        Ok(CodeMatrix { rows, cols, bits })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, n: usize, j: usize) -> bool {
        self.bits[n * self.cols + j]
    }

    pub fn set(&mut self, n: usize, j: usize, bit: bool) {
        self.bits[n * self.cols + j] = bit;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    fn row_is_zero(&self, n: usize) -> bool {
        !self.bits[n * self.cols..(n + 1) * self.cols].iter().any(|b| *b)
    }

    /// Bit vector for column `j` as an integer, component 0 most significant.
    pub fn column_code(&self, j: usize) -> u32 {
        (0..self.rows).fold(0, |acc, n| (acc << 1) | u32::from(self.get(n, j)))
    }

    fn set_column_code(&mut self, j: usize, code: u32) {
        for n in 0..self.rows {
            let bit = (code >> (self.rows - 1 - n)) & 1 == 1;
            self.set(n, j, bit);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WbiConfig {
    /// Total number of binary components `N`.
    pub components: usize,
    /// Group sizes `|N_1|, ..., |N_M|`, summing to `N`.
    pub partition: Vec<usize>,
    pub max_alternations: usize,
    /// Stop once an alternation lowers the squared residual by less than
    /// this fraction.
    pub tolerance: f64,
    pub ridge: f64,
    pub seed: u64,
    /// Largest group size allowed, bounding the `2^n` code search.
    pub search_cap: usize,
}

impl Default for WbiConfig {
    fn default() -> Self {
        WbiConfig {
            components: 4,
            partition: vec![2, 2],
            max_alternations: 30,
            tolerance: 1e-9,
            ridge: 1e-8,
            seed: 0x5eed,
            search_cap: 8,
        }
    }
}

impl WbiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.partition.is_empty() {
            return Err(Error::Config("wbi.partition must list at least one level".into()));
        }
        if self.partition.contains(&0) {
            return Err(Error::Config("wbi.partition entries must be >= 1".into()));
        }
        if self.partition.iter().sum::<usize>() != self.components {
            return Err(Error::Config(format!(
                "wbi.partition {:?} does not sum to wbi.components = {}",
                self.partition, self.components
            )));
        }
        if self.search_cap == 0 || self.search_cap > 16 {
            return Err(Error::Config("wbi.search_cap must be in 1..=16".into()));
        }
        if let Some(p) = self.partition.iter().find(|&&p| p > self.search_cap) {
            return Err(Error::Config(format!(
                "wbi.partition group of {p} exceeds search_cap {}",
                self.search_cap
            )));
        }
        if !(self.ridge >= 0.0) || !(self.tolerance >= 0.0) {
            return Err(Error::Config("wbi.ridge and wbi.tolerance must be >= 0".into()));
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.partition.len()
    }
}

/// Basis images for `n` components, laid out `(n, c, v, u)`.
pub type BasisImages = Vec<f64>;

/// Ridge least-squares basis images for fixed codes.
///
/// Per pixel solves `(B B^T + ridge I) r = B y`; the Gram matrix is factored
/// once and shared by every pixel.
pub fn solve_basis(target: &ImageStack, codes: &CodeMatrix, ridge: f64) -> Result<BasisImages> {
    if codes.cols != target.count {
        return Err(Error::Shape(format!(
            "{} code columns for {} images",
            codes.cols, target.count
        )));
    }
    let n = codes.rows;
    let len = target.image_len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut gram = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let shared = (0..codes.cols)
                .filter(|&j| codes.get(a, j) && codes.get(b, j))
                .count();
            gram[a * n + b] = shared as f64;
        }
        gram[a * n + a] += ridge;
    }
    let factor = SemidefiniteCholesky::factor(&gram, n);
    let active: Vec<Vec<usize>> = (0..n)
        .map(|a| (0..codes.cols).filter(|&j| codes.get(a, j)).collect())
        .collect();

    // pixel-major scratch, transposed afterwards
    let mut pixel_major = vec![0.0; len * n];
    pixel_major
        .par_chunks_mut(n)
        .enumerate()
        .for_each_init(
            || vec![0.0; n],
            |rhs, (p, out)| {
                for (a, js) in active.iter().enumerate() {
                    rhs[a] = js.iter().map(|&j| target.data[j * len + p]).sum();
                }
                factor.solve_into(rhs, out);
            },
        );
    let mut basis = vec![0.0; n * len];
    for p in 0..len {
        for a in 0..n {
            basis[a * len + p] = pixel_major[p * n + a];
        }
    }
    Ok(basis)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exhaustive binary code search for fixed basis images.
///
/// For every stack index the `2^n` bit vectors are ranked by the squared
/// error they leave, evaluated as `b^T G b - 2 b^T q_j` from the basis Gram
/// matrix `G` and the inner products `q_j = <r_n, y_j>`. Ties go to the
/// smallest integer code with component 0 as the most significant bit.
pub fn solve_codes(target: &ImageStack, basis: &[f64], n_active: usize) -> Result<CodeMatrix> {
    let len = target.image_len();
    if basis.len() != n_active * len {
        return Err(Error::Shape(format!(
            "{} basis samples for {n_active} components of {len}",
            basis.len()
        )));
    }
    if n_active > 16 {
        return Err(Error::Config(format!("{n_active} components exceed the search limit")));
    }
    let n = n_active;
    let image = |a: usize| &basis[a * len..(a + 1) * len];
    let mut gram = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let g = dot(image(a), image(b));
            gram[a * n + b] = g;
            gram[b * n + a] = g;
        }
    }
    let best: Vec<u32> = (0..target.count)
        .into_par_iter()
        .map(|j| {
            let y = target.image(j);
            let q: Vec<f64> = (0..n).map(|a| dot(image(a), y)).collect();
            let mut best_code = 0u32;
            let mut best_cost = 0.0; // the all-zero code
            for code in 1u32..(1u32 << n) {
                let mut cost = 0.0;
                for a in 0..n {
                    if (code >> (n - 1 - a)) & 1 == 0 {
                        continue;
                    }
                    cost += gram[a * n + a] - 2.0 * q[a];
                    for b in a + 1..n {
                        if (code >> (n - 1 - b)) & 1 == 1 {
                            cost += 2.0 * gram[a * n + b];
                        }
                    }
                }
                if cost < best_cost {
                    best_cost = cost;
                    best_code = code;
                }
            }
            best_code
        })
        .collect();
    let mut codes = CodeMatrix::zeros(n, target.count);
    for (j, code) in best.into_iter().enumerate() {
        codes.set_column_code(j, code);
    }
    Ok(codes)
}

/// `sum_n B[n, j] r_n` for every `j`.
pub fn reconstruct(codes: &CodeMatrix, basis: &[f64], template: &ImageStack) -> ImageStack {
    let len = template.image_len();
    let mut out = ImageStack::zeros(template.count, template.channels, template.spatial);
    for j in 0..codes.cols {
        let dst = &mut out.data[j * len..(j + 1) * len];
        for n in 0..codes.rows {
            if codes.get(n, j) {
                for (d, r) in dst.iter_mut().zip(&basis[n * len..(n + 1) * len]) {
                    *d += r;
                }
            }
        }
    }
    out
}

fn residual_per_image(target: &ImageStack, codes: &CodeMatrix, basis: &[f64]) -> Vec<f64> {
    let approx = reconstruct(codes, basis, target);
    (0..target.count)
        .map(|j| {
            target
                .image(j)
                .iter()
                .zip(approx.image(j))
                .map(|(y, a)| (y - a) * (y - a))
                .sum()
        })
        .collect()
}

/// Gives every all-zero code row a single active index, picking the stack
/// indices with the largest residual energy. A component with no active
/// index contributes nothing, so this never raises the attainable error.
fn revive_dead_rows(codes: &mut CodeMatrix, residual: &[f64]) {
    let dead: Vec<usize> = (0..codes.rows).filter(|&n| codes.row_is_zero(n)).collect();
    if dead.is_empty() {
        return;
    }
    let mut order: Vec<usize> = (0..codes.cols).filter(|&j| residual[j] > 0.0).collect();
    order.sort_by(|&a, &b| residual[b].total_cmp(&residual[a]).then(a.cmp(&b)));
    for (n, &j) in dead.iter().zip(order.iter().cycle()) {
        codes.set(*n, j, true);
    }
}

#[derive(Debug, Clone)]
pub struct Factorization {
    pub codes: CodeMatrix,
    pub basis: BasisImages,
    /// Squared residual `||y - B^T r||^2` after the first basis solve and
    /// after every accepted alternation.
    pub residual_history: Vec<f64>,
}

/// Alternates basis and code updates for `n_active` components.
pub fn alternate_minimize(target: &ImageStack, n_active: usize, config: &WbiConfig) -> Result<Factorization> {
    if n_active == 0 {
        return Err(Error::Config("at least one component is required".into()));
    }
    if n_active > config.search_cap {
        return Err(Error::Config(format!(
            "{n_active} components exceed search_cap {}",
            config.search_cap
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut codes = CodeMatrix::zeros(n_active, target.count);
    for bit in codes.bits.iter_mut() {
        *bit = rng.random_bool(0.5);
    }
    let initial: Vec<f64> = (0..target.count)
        .map(|j| target.image(j).iter().map(|x| x * x).sum())
        .collect();
    revive_dead_rows(&mut codes, &initial);

    let input_norm_sq = target.norm_squared();
    let mut basis = solve_basis(target, &codes, config.ridge)?;
    let mut residual = residual_per_image(target, &codes, &basis);
    let mut error: f64 = residual.iter().sum();
    if error > input_norm_sq {
        // rounding can push a degenerate fit above the zero-basis error
        basis.iter_mut().for_each(|x| *x = 0.0);
        residual = initial;
        error = input_norm_sq;
    }
    let mut history = vec![error];

    for _ in 0..config.max_alternations {
        if error == 0.0 {
            break;
        }
        let mut next_codes = solve_codes(target, &basis, n_active)?;
        let after_codes = residual_per_image(target, &next_codes, &basis);
        revive_dead_rows(&mut next_codes, &after_codes);
        if next_codes == codes {
            break;
        }
        let next_basis = solve_basis(target, &next_codes, config.ridge)?;
        let next_residual = residual_per_image(target, &next_codes, &next_basis);
        let next_error: f64 = next_residual.iter().sum();
        if next_error > error {
            break;
        }
        let gain = error - next_error;
        codes = next_codes;
        basis = next_basis;
        residual = next_residual;
        error = next_error;
        history.push(error);
        if gain <= config.tolerance * history[history.len() - 2] {
            break;
        }
    }
    debug_assert_eq!(residual.len(), target.count);
    Ok(Factorization {
        codes,
        basis,
        residual_history: history,
    })
}

/// One group of the scalable code.
#[derive(Debug, Clone, PartialEq)]
pub struct WbiLevel {
    /// Global component indices in this group.
    pub components: std::ops::Range<usize>,
    pub codes: CodeMatrix,
    pub basis: BasisImages,
    /// `||target||` entering this level.
    pub input_norm: f64,
    /// `||target - contribution||` leaving this level.
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WbiCode {
    pub count: usize,
    pub channels: usize,
    pub spatial: (usize, usize),
    pub levels: Vec<WbiLevel>,
}

impl WbiCode {
    pub fn components(&self) -> usize {
        self.levels.iter().map(|l| l.codes.rows).sum()
    }

    pub fn partition(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.codes.rows).collect()
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    fn template(&self) -> ImageStack {
        ImageStack::zeros(self.count, self.channels, self.spatial)
    }
}

/// Scalable encoding with the plain (lossless) residual update.
pub fn encode_scalable(target: &ImageStack, config: &WbiConfig) -> Result<WbiCode> {
    encode_scalable_with(target, config, |_, codes, basis| Ok((codes, basis)))
}

/// Scalable encoding where `finish_level` maps each level's fitted codes and
/// basis to what the decoder will actually see. The next level is fitted to
/// the residual left by that decoded contribution.
pub fn encode_scalable_with<F>(target: &ImageStack, config: &WbiConfig, mut finish_level: F) -> Result<WbiCode>
where
    F: FnMut(usize, CodeMatrix, BasisImages) -> Result<(CodeMatrix, BasisImages)>,
{
    config.validate()?;
    let mut current = target.clone();
    let mut levels = Vec::with_capacity(config.levels());
    let mut offset = 0;
    for (m, &size) in config.partition.iter().enumerate() {
        let level_config = WbiConfig {
            seed: config.seed.wrapping_add(m as u64),
            ..config.clone()
        };
        let fit = alternate_minimize(&current, size, &level_config)?;
        let (codes, basis) = finish_level(m, fit.codes, fit.basis)?;
        if codes.rows != size || codes.cols != target.count || basis.len() != size * target.image_len() {
            return Err(Error::Shape(format!("level {m} finished with the wrong shape")));
        }
        let input_norm = current.norm();
        let contribution = reconstruct(&codes, &basis, target);
        for (c, a) in current.data.iter_mut().zip(&contribution.data) {
            *c -= a;
        }
        levels.push(WbiLevel {
            components: offset..offset + size,
            codes,
            basis,
            input_norm,
            residual_norm: current.norm(),
        });
        offset += size;
    }
    Ok(WbiCode {
        count: target.count,
        channels: target.channels,
        spatial: target.spatial,
        levels,
    })
}

/// Sum of the contributions of the first `levels_used` levels.
pub fn decode_levels(code: &WbiCode, levels_used: usize) -> Result<ImageStack> {
    if levels_used == 0 || levels_used > code.levels.len() {
        return Err(Error::OutOfRange(format!(
            "level {levels_used} of {}",
            code.levels.len()
        )));
    }
    let mut out = code.template();
    for level in &code.levels[..levels_used] {
        let part = reconstruct(&level.codes, &level.basis, &out);
        for (o, p) in out.data.iter_mut().zip(&part.data) {
            *o += p;
        }
    }
    Ok(out)
}

/// `||a - b||`.
pub fn distance(a: &ImageStack, b: &ImageStack) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Shape("image stacks differ in shape".into()));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack(count: usize, w: usize, h: usize, f: impl Fn(usize) -> f64) -> ImageStack {
        let data = (0..count * w * h).map(f).collect();
        ImageStack::new(count, 1, (w, h), data).unwrap()
    }

    #[test]
    fn single_all_ones_code_gives_mean() {
        let t = ImageStack::new(2, 1, (2, 1), vec![0.2, 0.4, 0.6, 1.0]).unwrap();
        let codes = CodeMatrix::from_bits(1, 2, vec![true, true]).unwrap();
        let r = solve_basis(&t, &codes, 0.0).unwrap();
        assert!((r[0] - 0.4).abs() < 1e-15 && (r[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn identity_codes_recover_images() {
        let t = stack(3, 4, 2, |i| (i as f64 * 0.37).sin());
        let mut codes = CodeMatrix::zeros(3, 3);
        for n in 0..3 {
            codes.set(n, n, true);
        }
        let r = solve_basis(&t, &codes, 0.0).unwrap();
        assert_eq!(r, t.data);
    }

    #[test]
    fn scalar_decision_rule() {
        let t = ImageStack::new(2, 1, (2, 1), vec![0.9, 0.8, 0.2, 0.1]).unwrap();
        let codes = solve_codes(&t, &[1.0, 1.0], 1).unwrap();
        assert!(codes.get(0, 0));
        assert!(!codes.get(0, 1));
    }

    #[test]
    fn zero_basis_ties_to_zero_code() {
        let t = stack(3, 2, 2, |i| i as f64);
        let codes = solve_codes(&t, &[0.0; 12], 3).unwrap();
        assert!(codes.is_zero());
    }

    #[test]
    fn exact_code_is_recovered() {
        let basis: Vec<f64> = (0..3 * 6).map(|i| ((i * 7 % 11) as f64) / 11.0 - 0.3).collect();
        let truth = CodeMatrix::from_bits(3, 4, vec![
            true, false, true, false, //
            false, true, true, false, //
            true, true, false, false,
        ])
        .unwrap();
        let template = ImageStack::zeros(4, 1, (3, 2));
        let target = reconstruct(&truth, &basis, &template);
        let codes = solve_codes(&target, &basis, 3).unwrap();
        assert_eq!(codes, truth);
    }

    #[test]
    fn zero_target_stays_zero() {
        let t = ImageStack::zeros(3, 3, (4, 4));
        let fit = alternate_minimize(&t, 2, &WbiConfig::default()).unwrap();
        assert!(fit.basis.iter().all(|x| *x == 0.0));
        assert_eq!(fit.residual_history, vec![0.0]);
        let code = encode_scalable(&t, &WbiConfig::default()).unwrap();
        assert!(code.levels.iter().all(|l| l.residual_norm == 0.0));
    }

    #[test]
    fn rank_one_binary_target_is_exact_for_any_seed() {
        let r: Vec<f64> = (0..16).map(|i| 0.1 + (i as f64 * 0.61).cos().abs()).collect();
        for seed in 0..20 {
            for pattern in [[true, false, true], [false, true, false], [true, true, true]] {
                let truth = CodeMatrix::from_bits(1, 3, pattern.to_vec()).unwrap();
                let target = reconstruct(&truth, &r, &ImageStack::zeros(3, 1, (4, 4)));
                let cfg = WbiConfig {
                    seed,
                    ridge: 0.0,
                    ..WbiConfig::default()
                };
                let fit = alternate_minimize(&target, 1, &cfg).unwrap();
                assert!(fit.residual_history.len() <= 3, "seed {seed}");
                assert!(*fit.residual_history.last().unwrap() < 1e-24, "seed {seed}");
            }
        }
    }

    #[test]
    fn decode_level_range() {
        let t = stack(3, 4, 4, |i| (i as f64).sqrt());
        let code = encode_scalable(&t, &WbiConfig::default()).unwrap();
        assert!(decode_levels(&code, 0).is_err());
        assert!(decode_levels(&code, 3).is_err());
        let first = decode_levels(&code, 1).unwrap();
        let alone = reconstruct(&code.levels[0].codes, &code.levels[0].basis, &t);
        assert_eq!(first, alone);
    }

    #[test]
    fn config_validation() {
        let mut cfg = WbiConfig::default();
        cfg.partition = vec![2, 1];
        assert!(cfg.validate().is_err());
        cfg.partition = vec![4];
        cfg.search_cap = 3;
        assert!(cfg.validate().is_err());
        cfg.search_cap = 8;
        cfg.ridge = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn view_stack_roundtrip() {
        let samples: Vec<f64> = (0..3 * 2 * 3 * 4 * 5).map(|i| (i % 97) as f64 / 96.0).collect();
        let lf = LightField::new((2, 3), (4, 5), 3, samples).unwrap();
        let stack = ImageStack::from_views(&lf);
        assert_eq!(stack.count(), 6);
        assert_eq!(stack.image(4)[..20], lf.extract_view(0, 2).unwrap().samples()[..20]);
        assert_eq!(stack.to_light_field((2, 3)).unwrap(), lf);
    }
}
