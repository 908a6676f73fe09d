//! Uniform scalar quantizer over `[0, 1]`.

use crate::error::{Error, Result};

pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizerSpec {
    bits: u32,
}

impl QuantizerSpec {
    pub fn new(bits: u32) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(Error::Config(format!(
                "quantizer bits {bits} outside [{MIN_BITS}, {MAX_BITS}]"
            )));
        }
        Ok(QuantizerSpec { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Largest symbol, `2^Q - 1`.
    pub fn levels(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    pub fn quantize_one(&self, x: f64) -> Result<u32> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfRange(format!("quantizer input {x} outside [0, 1]")));
        }
        Ok((x * self.levels() as f64 + 0.5).floor() as u32)
    }

    pub fn dequantize_one(&self, symbol: u32) -> f64 {
        symbol as f64 / self.levels() as f64
    }

    pub fn quantize(&self, values: &[f64]) -> Result<Vec<u32>> {
        values.iter().map(|&x| self.quantize_one(x)).collect()
    }

    pub fn dequantize(&self, symbols: &[u32]) -> Vec<f64> {
        symbols.iter().map(|&s| self.dequantize_one(s)).collect()
    }
}

/// Quality parameter to quantizer bits: affine from QP 2 -> 14 bits down to
/// QP 48 -> 3 bits, rounded and clamped to the valid range.
pub fn bits_for_qp(qp: u32) -> u32 {
    let q = 14.0 + (qp as f64 - 2.0) * (3.0 - 14.0) / 46.0;
    (q.round() as i64).clamp(MIN_BITS as i64, MAX_BITS as i64) as u32
}

/// The thirteen quality settings swept by default.
pub const DEFAULT_QPS: [u32; 13] = [2, 6, 10, 14, 18, 22, 26, 28, 32, 36, 40, 44, 48];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        let q = QuantizerSpec::new(8).unwrap();
        assert_eq!(q.quantize_one(0.0).unwrap(), 0);
        assert_eq!(q.quantize_one(1.0).unwrap(), 255);
        assert_eq!(q.dequantize_one(255), 1.0);
        assert_eq!(q.quantize_one(0.5).unwrap(), 128);
        assert!((q.dequantize_one(128) - 0.501_96).abs() < 1e-5);
    }

    #[test]
    fn error_bound_on_dense_grid() {
        for bits in MIN_BITS..=MAX_BITS {
            let q = QuantizerSpec::new(bits).unwrap();
            let bound = 1.0 / (2.0 * q.levels() as f64) + 1e-12;
            for i in 0..=20_000 {
                let x = i as f64 / 20_000.0;
                let y = q.dequantize_one(q.quantize_one(x).unwrap());
                assert!((x - y).abs() <= bound, "bits {bits} x {x}");
            }
        }
    }

    #[test]
    fn idempotent_on_lattice() {
        let q = QuantizerSpec::new(5).unwrap();
        for s in 0..=q.levels() {
            assert_eq!(q.quantize_one(q.dequantize_one(s)).unwrap(), s);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(QuantizerSpec::new(1).is_err());
        assert!(QuantizerSpec::new(17).is_err());
        let q = QuantizerSpec::new(4).unwrap();
        assert!(q.quantize_one(1.0 + 1e-9).is_err());
        assert!(q.quantize_one(-0.1).is_err());
        assert!(q.quantize_one(f64::NAN).is_err());
    }

    #[test]
    fn qp_mapping() {
        assert_eq!(bits_for_qp(2), 14);
        assert_eq!(bits_for_qp(48), 3);
        let bits: Vec<u32> = DEFAULT_QPS.iter().map(|&qp| bits_for_qp(qp)).collect();
        assert!(bits.windows(2).all(|w| w[0] >= w[1]));
    }
}
