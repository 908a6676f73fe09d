use rayon::prelude::*;

use super::{RdPoint, SweepRow};
use crate::bitstream::bits_for_qp;
use crate::error::{Error, Result};
use crate::lightfield::LightField;
use crate::pipeline::{decode, encode_prepared, prepare_stack, CodecConfig, DbnModel};

/// Encodes and decodes `lf` once per quality parameter, sharing a single
/// layer factorization. Rows come back sorted by rate.
pub fn rd_sweep(lf: &LightField, cfg: &CodecConfig, model: Option<&DbnModel>, qps: &[u32]) -> Result<Vec<SweepRow>> {
    if qps.is_empty() {
        return Err(Error::Config("quality list is empty".into()));
    }
    let prepared = prepare_stack(lf, cfg)?;
    let mut rows = qps
        .par_iter()
        .map(|&qp| {
            let cfg = CodecConfig {
                quant_bits: bits_for_qp(qp),
                ..cfg.clone()
            };
            let enc = encode_prepared(lf, &prepared, &cfg, model)?;
            let dec = decode(&enc.bytes, None, model)?;
            Ok(SweepRow {
                quality: qp,
                point: RdPoint::new(enc.bits_per_pixel(), dec.psnr(lf)?)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.point.rate.total_cmp(&b.point.rate).then(a.quality.cmp(&b.quality)));
    Ok(rows)
}
