//! Cutting single-channel images into square patch vectors and back.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Affine map between an image's value range and `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRecord {
    pub min: f64,
    pub max: f64,
}

impl NormRecord {
    pub fn of(values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if values.is_empty() {
            NormRecord { min: 0.0, max: 0.0 }
        } else {
            NormRecord { min, max }
        }
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    /// Constant images map to 0.
    pub fn normalize(&self, x: f64) -> f64 {
        let span = self.span();
        if span > 0.0 {
            ((x - self.min) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        self.min + y * self.span()
    }
}

/// Where coding-mode tiles sit in the source image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchLayout {
    pub width: usize,
    pub height: usize,
    pub patch: usize,
}

impl PatchLayout {
    pub fn new(width: usize, height: usize, patch: usize) -> Result<Self> {
        if patch < 2 {
            return Err(Error::Config(format!("patch size {patch} is below 2")));
        }
        if width < patch || height < patch {
            return Err(Error::Shape(format!(
                "{width}x{height} image is smaller than patch size {patch}"
            )));
        }
        Ok(PatchLayout { width, height, patch })
    }

    pub fn cols(&self) -> usize {
        self.width.div_ceil(self.patch)
    }

    pub fn rows(&self) -> usize {
        self.height.div_ceil(self.patch)
    }

    pub fn tile_count(&self) -> usize {
        self.cols() * self.rows()
    }
}

/// Normalized patch vectors with the records needed to undo normalization.
/// `sources[i]` indexes the record that patch `i` was normalized with.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchDataset {
    pub patch: usize,
    pub patches: Vec<Vec<f64>>,
    pub sources: Vec<usize>,
    pub records: Vec<NormRecord>,
}

impl PatchDataset {
    pub fn empty(patch: usize) -> Self {
        PatchDataset {
            patch,
            patches: Vec::new(),
            sources: Vec::new(),
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// `len x p^2` matrix, one patch per row.
    pub fn to_matrix(&self) -> Array2<f64> {
        let d = self.patch * self.patch;
        Array2::from_shape_fn((self.len(), d), |(i, j)| self.patches[i][j])
    }

    pub fn extend(&mut self, other: PatchDataset) {
        let offset = self.records.len();
        self.patches.extend(other.patches);
        self.sources.extend(other.sources.into_iter().map(|s| s + offset));
        self.records.extend(other.records);
    }
}

fn check_plane(plane: &[f64], width: usize, height: usize) -> Result<()> {
    if plane.len() != width * height {
        return Err(Error::Shape(format!(
            "plane of {} values for {width}x{height}",
            plane.len()
        )));
    }
    if plane.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidValue("non-finite sample in image".into()));
    }
    Ok(())
}

/// Non-overlapping `p x p` tiles, row-major over the tile grid. The image
/// is normalized by its own range and edge tiles are filled by replicating
/// the last row and column.
pub fn patchify_coding(plane: &[f64], width: usize, height: usize, patch: usize) -> Result<(PatchDataset, PatchLayout)> {
    let layout = PatchLayout::new(width, height, patch)?;
    check_plane(plane, width, height)?;
    let record = NormRecord::of(plane);
    let mut patches = Vec::with_capacity(layout.tile_count());
    for ty in 0..layout.rows() {
        for tx in 0..layout.cols() {
            let mut v = Vec::with_capacity(patch * patch);
            for y in 0..patch {
                let sy = (ty * patch + y).min(height - 1);
                for x in 0..patch {
                    let sx = (tx * patch + x).min(width - 1);
                    v.push(record.normalize(plane[sy * width + sx]));
                }
            }
            patches.push(v);
        }
    }
    let n = patches.len();
    Ok((
        PatchDataset {
            patch,
            patches,
            sources: vec![0; n],
            records: vec![record],
        },
        layout,
    ))
}

/// Inverse of [`patchify_coding`]: places tiles, crops the padding and
/// maps values back through `record`.
pub fn depatchify(patches: &[Vec<f64>], layout: &PatchLayout, record: &NormRecord) -> Result<Vec<f64>> {
    let p = layout.patch;
    if patches.len() != layout.tile_count() {
        return Err(Error::Shape(format!(
            "{} patches for a {}x{} tile grid",
            patches.len(),
            layout.cols(),
            layout.rows()
        )));
    }
    if let Some(bad) = patches.iter().find(|v| v.len() != p * p) {
        return Err(Error::Shape(format!("patch of {} values for p = {p}", bad.len())));
    }
    let mut out = vec![0.0; layout.width * layout.height];
    for (y, row) in out.chunks_mut(layout.width).enumerate() {
        let (ty, py) = (y / p, y % p);
        for (x, px) in row.iter_mut().enumerate() {
            let tile = &patches[ty * layout.cols() + x / p];
            *px = record.denormalize(tile[py * p + x % p]);
        }
    }
    Ok(out)
}

fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Overlapping `p x p` samples every `stride` pixels (full placements only)
/// from the normalized image, dropping patches whose sample variance is
/// below `min_variance`.
pub fn patchify_training(
    plane: &[f64],
    width: usize,
    height: usize,
    patch: usize,
    stride: usize,
    min_variance: f64,
) -> Result<PatchDataset> {
    PatchLayout::new(width, height, patch)?;
    check_plane(plane, width, height)?;
    if stride == 0 {
        return Err(Error::Config("patch stride must be >= 1".into()));
    }
    let record = NormRecord::of(plane);
    let mut patches = Vec::new();
    for y0 in (0..=height - patch).step_by(stride) {
        for x0 in (0..=width - patch).step_by(stride) {
            let v: Vec<f64> = (0..patch * patch)
                .map(|i| record.normalize(plane[(y0 + i / patch) * width + x0 + i % patch]))
                .collect();
            if sample_variance(&v) >= min_variance {
                patches.push(v);
            }
        }
    }
    let n = patches.len();
    Ok(PatchDataset {
        patch,
        patches,
        sources: vec![0; n],
        records: vec![record],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(width: usize, height: usize) -> Vec<f64> {
        let last = (width * height - 1) as f64;
        (0..width * height).map(|i| ((i * 37) % (width * height)) as f64 / last).collect()
    }

    #[test]
    fn single_tile_roundtrip_is_exact() {
        let img = ramp(64, 64);
        let (ds, layout) = patchify_coding(&img, 64, 64, 64).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.records[0], NormRecord { min: 0.0, max: 1.0 });
        let back = depatchify(&ds.patches, &layout, &ds.records[0]).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn training_mode_full_placements_only() {
        let img = ramp(64, 64);
        let ds = patchify_training(&img, 64, 64, 64, 32, 1e-4).unwrap();
        assert_eq!(ds.len(), 1);
        let ds = patchify_training(&img, 64, 64, 32, 32, 1e-4).unwrap();
        assert_eq!(ds.len(), 4);
    }

    #[test]
    fn uniform_patches_are_dropped() {
        let mut img = vec![0.25; 32 * 16];
        img[5] = 1.0;
        let ds = patchify_training(&img, 32, 16, 16, 16, 1e-4).unwrap();
        assert_eq!(ds.len(), 1);
        assert!(ds.patches[0].iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn padded_grid_roundtrip() {
        let img = ramp(70, 70);
        let (ds, layout) = patchify_coding(&img, 70, 70, 32).unwrap();
        assert_eq!((layout.cols(), layout.rows()), (3, 3));
        assert_eq!(ds.len(), 9);
        // last tile replicates the bottom-right pixel beyond the crop
        let corner = img[70 * 70 - 1];
        assert_eq!(ds.patches[8][32 * 32 - 1], corner);
        assert_eq!(depatchify(&ds.patches, &layout, &ds.records[0]).unwrap(), img);
    }

    #[test]
    fn arbitrary_range_roundtrip_is_close() {
        let img: Vec<f64> = ramp(40, 24).iter().map(|x| 0.37 * x - 0.11).collect();
        let (ds, layout) = patchify_coding(&img, 40, 24, 16).unwrap();
        assert!(ds.patches.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
        let back = depatchify(&ds.patches, &layout, &ds.records[0]).unwrap();
        for (a, b) in back.iter().zip(&img) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_image_roundtrip() {
        let img = vec![0.3; 16 * 16];
        let (ds, layout) = patchify_coding(&img, 16, 16, 8).unwrap();
        assert!(ds.patches.iter().flatten().all(|x| *x == 0.0));
        assert_eq!(depatchify(&ds.patches, &layout, &ds.records[0]).unwrap(), img);
    }

    #[test]
    fn geometry_errors() {
        assert!(patchify_coding(&[0.0; 16], 4, 4, 8).is_err());
        assert!(patchify_coding(&[0.0; 16], 4, 4, 1).is_err());
        assert!(patchify_coding(&[0.0; 15], 4, 4, 2).is_err());
        let layout = PatchLayout::new(4, 4, 2).unwrap();
        assert!(depatchify(&vec![vec![0.0; 4]; 3], &layout, &NormRecord { min: 0.0, max: 1.0 }).is_err());
    }
}
