//! PSNR over light fields and views.

use crate::error::{Error, Result};
use crate::layers::ValidityMask;
use crate::lightfield::{LightField, ViewImage};

/// Peak for data normalized to `[0, 1]`.
pub const PEAK_NORMALIZED: f64 = 1.0;
/// Peak for data on the 8-bit integer scale.
pub const PEAK_8BIT: f64 = 255.0;

/// Anything with a shape and a flat sample buffer.
pub trait SampleGrid {
    fn shape(&self) -> Vec<usize>;
    fn sample_slice(&self) -> &[f64];
}

impl SampleGrid for LightField {
    fn shape(&self) -> Vec<usize> {
        let (s, t) = self.angular_dims();
        let (w, h) = self.spatial_dims();
        vec![self.channels(), t, s, h, w]
    }

    fn sample_slice(&self) -> &[f64] {
        self.samples()
    }
}

impl SampleGrid for ViewImage {
    fn shape(&self) -> Vec<usize> {
        vec![self.channels(), self.height(), self.width()]
    }

    fn sample_slice(&self) -> &[f64] {
        self.samples()
    }
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    sum / a.len() as f64
}

/// `10 log10(peak^2 / mse)`; `+inf` when the MSE is zero.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

pub fn psnr<G: SampleGrid>(a: &G, b: &G, peak: f64) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "psnr of {:?} against {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if !(peak > 0.0) {
        return Err(Error::InvalidValue(format!("psnr peak {peak}")));
    }
    Ok(psnr_from_mse(mse(a.sample_slice(), b.sample_slice()), peak))
}

/// MSE restricted to rays the mask marks valid, averaged over channels too.
pub fn masked_mse(a: &LightField, b: &LightField, mask: &ValidityMask) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "masked psnr of {:?} against {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let ray_count = a.samples().len() / a.channels();
    if mask.len() != ray_count {
        return Err(Error::Shape(format!(
            "mask has {} rays, light field has {ray_count}",
            mask.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in 0..a.channels() {
        let off = c * ray_count;
        for (i, valid) in mask.as_slice().iter().enumerate() {
            if *valid {
                let d = a.samples()[off + i] - b.samples()[off + i];
                sum += d * d;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / count as f64)
}

pub fn masked_psnr(a: &LightField, b: &LightField, mask: &ValidityMask, peak: f64) -> Result<f64> {
    Ok(psnr_from_mse(masked_mse(a, b, mask)?, peak))
}

/// Masked PSNR of every view, row-major (`t` outer, `s` inner). Views with
/// no valid ray report `None`.
pub fn per_view_psnr(a: &LightField, b: &LightField, mask: &ValidityMask, peak: f64) -> Result<Vec<Option<f64>>> {
    masked_mse(a, b, mask).or_else(|e| match e {
        Error::EmptyMask => Ok(0.0),
        other => Err(other),
    })?;
    let (w, h) = a.spatial_dims();
    let plane = w * h;
    let rays = a.samples().len() / a.channels();
    Ok((0..a.view_count())
        .map(|view| {
            let valid = &mask.as_slice()[view * plane..(view + 1) * plane];
            let mut sum = 0.0;
            let mut count = 0usize;
            for c in 0..a.channels() {
                let off = c * rays + view * plane;
                for (i, ok) in valid.iter().enumerate() {
                    if *ok {
                        let d = a.samples()[off + i] - b.samples()[off + i];
                        sum += d * d;
                        count += 1;
                    }
                }
            }
            (count > 0).then(|| psnr_from_mse(sum / count as f64, peak))
        })
        .collect())
}
