//! Bjontegaard delta rate and delta PSNR between two RD curves.

use crate::error::{Error, Result};
use crate::linalg::least_squares;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint {
    /// Bits per pixel, > 0.
    pub rate: f64,
    /// PSNR in dB.
    pub quality: f64,
}

impl RdPoint {
    pub fn new(rate: f64, quality: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) || !quality.is_finite() {
            return Err(Error::Curve(format!("invalid RD point ({rate}, {quality})")));
        }
        Ok(RdPoint { rate, quality })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdResult {
    /// Average rate change of B relative to A, in percent.
    pub bd_rate: f64,
    /// Average quality change of B relative to A, in dB.
    pub bd_psnr: f64,
    /// Overlap in log10(rate) used for BD-PSNR.
    pub rate_interval: (f64, f64),
    /// Overlap in PSNR used for BD-Rate.
    pub psnr_interval: (f64, f64),
    pub degree: usize,
    /// Set when either curve had too few points for a cubic fit.
    pub reduced_degree: bool,
}

/// Polynomial in `x - center`, lowest order first.
#[derive(Debug, Clone)]
struct Poly {
    coeffs: Vec<f64>,
    center: f64,
}

impl Poly {
    fn fit(x: &[f64], y: &[f64], degree: usize) -> Result<Self> {
        let center = x.iter().sum::<f64>() / x.len() as f64;
        let cols = degree + 1;
        let a: Vec<f64> = x
            .iter()
            .flat_map(|&xi| (0..cols).map(move |k| (xi - center).powi(k as i32)))
            .collect();
        let coeffs = least_squares(&a, x.len(), cols, y)
            .ok_or_else(|| Error::Curve("degenerate curve, polynomial fit failed".into()))?;
        Ok(Poly { coeffs, center })
    }

    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let anti = |x: f64| {
            let t = x - self.center;
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * t.powi(k as i32 + 1) / (k + 1) as f64)
                .sum::<f64>()
        };
        anti(hi) - anti(lo)
    }
}

fn prepare(curve: &[RdPoint], name: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    if curve.len() < 3 {
        return Err(Error::Curve(format!("curve {name} has {} points, need 3", curve.len())));
    }
    let mut pts = curve.to_vec();
    for p in &pts {
        RdPoint::new(p.rate, p.quality)?;
    }
    pts.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    for w in pts.windows(2) {
        if w[0].rate == w[1].rate {
            return Err(Error::Curve(format!("curve {name} repeats rate {}", w[0].rate)));
        }
        if w[1].quality < w[0].quality {
            return Err(Error::Curve(format!(
                "curve {name} loses quality from rate {} to {}",
                w[0].rate, w[1].rate
            )));
        }
    }
    Ok((
        pts.iter().map(|p| p.rate.log10()).collect(),
        pts.iter().map(|p| p.quality).collect(),
    ))
}

fn overlap(a: &[f64], b: &[f64], what: &str) -> Result<(f64, f64)> {
    let lo = a[0].max(b[0]);
    let hi = a[a.len() - 1].min(b[b.len() - 1]);
    if hi <= lo {
        return Err(Error::Curve(format!("curves do not overlap in {what}")));
    }
    Ok((lo, hi))
}

/// Cubic (or lower, for short curves) fits of PSNR against log10 rate and
/// of log10 rate against PSNR, averaged over the shared interval.
pub fn bd_metrics(curve_a: &[RdPoint], curve_b: &[RdPoint]) -> Result<BdResult> {
    let (ra, qa) = prepare(curve_a, "A")?;
    let (rb, qb) = prepare(curve_b, "B")?;
    let degree = 3.min(ra.len() - 1).min(rb.len() - 1);

    let rate_interval = overlap(&ra, &rb, "rate")?;
    let (lo, hi) = rate_interval;
    let pa = Poly::fit(&ra, &qa, degree)?;
    let pb = Poly::fit(&rb, &qb, degree)?;
    let bd_psnr = (pb.integral(lo, hi) - pa.integral(lo, hi)) / (hi - lo);

    let psnr_interval = overlap(&qa, &qb, "quality")?;
    let (lo, hi) = psnr_interval;
    let la = Poly::fit(&qa, &ra, degree)?;
    let lb = Poly::fit(&qb, &rb, degree)?;
    let delta = (lb.integral(lo, hi) - la.integral(lo, hi)) / (hi - lo);

    Ok(BdResult {
        bd_rate: (10f64.powf(delta) - 1.0) * 100.0,
        bd_psnr,
        rate_interval,
        psnr_interval,
        degree,
        reduced_degree: degree < 3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: &[(f64, f64)]) -> Vec<RdPoint> {
        points.iter().map(|&(r, q)| RdPoint::new(r, q).unwrap()).collect()
    }

    const A: [(f64, f64); 4] = [(0.1, 30.0), (0.3, 34.0), (0.8, 38.0), (2.0, 41.0)];

    #[test]
    fn identical_curves() {
        let a = curve(&A);
        let r = bd_metrics(&a, &a).unwrap();
        assert!(r.bd_rate.abs() < 1e-9 && r.bd_psnr.abs() < 1e-9);
        assert!(!r.reduced_degree);
    }

    #[test]
    fn doubled_rate() {
        let a = curve(&A);
        let b: Vec<RdPoint> = a.iter().map(|p| RdPoint::new(2.0 * p.rate, p.quality).unwrap()).collect();
        let r = bd_metrics(&a, &b).unwrap();
        assert!((r.bd_rate - 100.0).abs() < 1e-6, "{}", r.bd_rate);
        assert!(r.bd_psnr < 0.0);
    }

    #[test]
    fn constant_quality_offset() {
        let a = curve(&A);
        let b: Vec<RdPoint> = a.iter().map(|p| RdPoint::new(p.rate, p.quality + 1.0).unwrap()).collect();
        assert!((bd_metrics(&a, &b).unwrap().bd_psnr - 1.0).abs() < 1e-6);
    }

    #[test]
    fn short_curves_fall_back() {
        let a = curve(&A[..3]);
        let r = bd_metrics(&a, &a).unwrap();
        assert_eq!(r.degree, 2);
        assert!(r.reduced_degree);
    }

    #[test]
    fn invalid_curves() {
        let a = curve(&A);
        assert!(bd_metrics(&a[..2], &a).is_err());
        let dup = curve(&[(0.1, 30.0), (0.1, 31.0), (0.5, 35.0)]);
        assert!(bd_metrics(&dup, &a).is_err());
        let dip = curve(&[(0.1, 30.0), (0.2, 29.0), (0.5, 35.0)]);
        assert!(bd_metrics(&dip, &a).is_err());
        let far = curve(&[(10.0, 50.0), (20.0, 51.0), (30.0, 52.0)]);
        assert!(bd_metrics(&far, &a).is_err());
        assert!(RdPoint::new(0.0, 30.0).is_err());
    }
}
