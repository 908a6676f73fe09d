//! Prints the rate and PSNR operating points of the 5x5x64x64 synthetic
//! light field for Q in 3..=14, in the form pinned by the acceptance suite.
//!
//! `cargo run --release --example operating_points [refine_iterations]`

use std::time::Instant;

use lfcodec::dbn::DbnConfig;
use lfcodec::pipeline::{decode, encode_prepared, prepare_stack, train_model, CodecConfig};
use lfcodec::synth::occluded_disc;

fn main() -> lfcodec::Result<()> {
    let lf = occluded_disc((5, 5), (64, 64), 1, 2024)?;
    let mut cfg = CodecConfig {
        refine_iterations: std::env::args().nth(1).map_or(0, |a| a.parse().expect("refine iterations")),
        ..CodecConfig::default()
    };
    let t = Instant::now();
    let (model, report) = train_model(std::slice::from_ref(&lf), &cfg, &DbnConfig::default())?;
    eprintln!(
        "trained on {} patches in {:.1} s, mse {:.6} -> {:.6}",
        report.patches,
        t.elapsed().as_secs_f64(),
        report.pretrained_mse,
        report.finetuned_mse
    );
    let prepared = prepare_stack(&lf, &cfg)?;
    for q in 3..=14 {
        cfg.quant_bits = q;
        let enc = encode_prepared(&lf, &prepared, &cfg, Some(&model))?;
        let l1 = decode(&enc.bytes, Some(1), Some(&model))?.psnr(&lf)?;
        let full = decode(&enc.bytes, None, Some(&model))?.psnr(&lf)?;
        println!("    ({q}, {}, {l1:.4}, {full:.4}),", enc.bytes.len());
    }
    Ok(())
}
