//! Rate-distortion curves, Bjontegaard metrics and their text outputs.

mod bd;
mod sweep;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub use bd::{bd_metrics, BdResult, RdPoint};
pub use sweep::rd_sweep;

use crate::error::{Error, Result};

/// One row of a sweep: the quality setting and the point it produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub quality: u32,
    pub point: RdPoint,
}

pub const CSV_HEADER: &str = "quality,bpp,psnr_db";

/// Rows sorted by rate.
pub fn rd_csv(rows: &[SweepRow]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.point.rate.total_cmp(&b.point.rate).then(a.quality.cmp(&b.quality)));
    let mut out = format!("{CSV_HEADER}\n");
    for r in sorted {
        let _ = writeln!(out, "{},{:.6},{:.4}", r.quality, r.point.rate, r.point.quality);
    }
    out
}

pub fn parse_rd_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(Error::Format(format!("expected header {CSV_HEADER:?}, found {other:?}"))),
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Format(format!("bad RD row {line:?}"));
            if f.len() != 3 {
                return Err(bad());
            }
            let quality = f[0].parse().map_err(|_| bad())?;
            let rate = f[1].parse().map_err(|_| bad())?;
            let psnr = f[2].parse().map_err(|_| bad())?;
            Ok(SweepRow {
                quality,
                point: RdPoint::new(rate, psnr)?,
            })
        })
        .collect()
}

pub fn read_rd_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rd_csv(&text)
}

/// Gnuplot script plotting `csv` (bpp on x, PSNR on y) into `png`.
pub fn gnuplot_script(csv: &str, png: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 800,600\n\
         set output '{png}'\n\
         set title '{title}'\n\
         set xlabel 'bits per pixel'\n\
         set ylabel 'PSNR (dB)'\n\
         set grid\n\
         set key bottom right\n\
         plot '{csv}' skip 1 using 2:3 with linespoints title '{title}'\n"
    )
}

pub fn bd_report(name_a: &str, name_b: &str, r: &BdResult) -> String {
    let mut out = String::new();
    let rows = [
        ("anchor", name_a.to_string()),
        ("test", name_b.to_string()),
        ("BD-Rate (%)", format!("{:.4}", r.bd_rate)),
        ("BD-PSNR (dB)", format!("{:.4}", r.bd_psnr)),
        (
            "log10 rate range",
            format!("[{:.4}, {:.4}]", r.rate_interval.0, r.rate_interval.1),
        ),
        (
            "PSNR range (dB)",
            format!("[{:.4}, {:.4}]", r.psnr_interval.0, r.psnr_interval.1),
        ),
        ("fit degree", r.degree.to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<18} {v}");
    }
    if r.reduced_degree {
        out.push_str("warning: fewer than 4 points, fit degree reduced\n");
    }
    out
}
