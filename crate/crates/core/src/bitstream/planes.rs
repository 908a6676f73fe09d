//! Latent codes as 8-bit grayscale frames, for handing to an external
//! video encoder.
//!
//! Each latent vector becomes one frame row (width = code length), frames
//! hold `rows_per_frame` rows and the tail of the last frame is zero. A
//! `latents.txt` sidecar records `count`, `dim`, `rows` and `frames`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pnm::{self, PnmImage};

pub const SIDECAR: &str = "latents.txt";
pub const DEFAULT_ROWS_PER_FRAME: usize = 64;

fn frame_name(i: usize) -> String {
    format!("latent_{i:05}.pgm")
}

/// Writes the frames and sidecar into `dir`; returns the frame paths.
pub fn export_latent_planes(codes: &[Vec<f64>], dir: &Path, rows_per_frame: usize) -> Result<Vec<PathBuf>> {
    if rows_per_frame == 0 {
        return Err(Error::Config("rows per frame must be >= 1".into()));
    }
    let dim = codes.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::Shape("no latent codes to export".into()));
    }
    if codes.iter().any(|c| c.len() != dim) {
        return Err(Error::Shape("latent codes differ in length".into()));
    }
    if codes.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::OutOfRange("latent code outside [0, 1]".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let frames = codes.len().div_ceil(rows_per_frame);
    let mut paths = Vec::with_capacity(frames);
    for (i, chunk) in codes.chunks(rows_per_frame).enumerate() {
        let mut frame = PnmImage::new(dim, rows_per_frame, 1, 255)?;
        for (row, code) in chunk.iter().enumerate() {
            for (k, x) in code.iter().enumerate() {
                frame.samples[row * dim + k] = (x * 255.0).round() as u16;
            }
        }
        let path = dir.join(frame_name(i));
        pnm::write(&path, &frame)?;
        paths.push(path);
    }
    let sidecar = format!(
        "count {}\ndim {dim}\nrows {rows_per_frame}\nframes {frames}\n",
        codes.len()
    );
    let path = dir.join(SIDECAR);
    fs::write(&path, sidecar).map_err(|e| Error::io(&path, e))?;
    Ok(paths)
}

/// Reads frames written by [`export_latent_planes`] (possibly re-encoded
/// externally) back into latent vectors.
pub fn import_latent_planes(dir: &Path) -> Result<Vec<Vec<f64>>> {
    let path = dir.join(SIDECAR);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut fields = [None; 4];
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let value: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad sidecar line {line:?}")))?;
        let slot = match key {
            "count" => 0,
            "dim" => 1,
            "rows" => 2,
            "frames" => 3,
            _ => return Err(Error::Format(format!("unknown sidecar key {key:?}"))),
        };
        fields[slot] = Some(value);
    }
    let [Some(count), Some(dim), Some(rows), Some(frames)] = fields else {
        return Err(Error::Format("sidecar is missing a field".into()));
    };
    if rows == 0 || frames != count.div_ceil(rows) {
        return Err(Error::Format("sidecar frame count is inconsistent".into()));
    }
    let mut codes = Vec::with_capacity(count);
    for i in 0..frames {
        let img = pnm::read(&dir.join(frame_name(i)))?;
        if img.width != dim || img.height != rows || img.channels != 1 {
            return Err(Error::Shape(format!(
                "frame {i} is {}x{}x{}, expected {dim}x{rows}x1",
                img.width, img.height, img.channels
            )));
        }
        let peak = f64::from(img.maxval);
        for row in img.samples.chunks(dim).take(count - codes.len()) {
            codes.push(row.iter().map(|&s| f64::from(s) / peak).collect());
        }
    }
    Ok(codes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(count: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|i| (0..dim).map(|k| ((i * 31 + k * 7) % 101) as f64 / 100.0).collect())
            .collect()
    }

    #[test]
    fn one_full_frame() {
        let dir = tempfile::tempdir().unwrap();
        let c = codes(64, 32);
        let paths = export_latent_planes(&c, dir.path(), DEFAULT_ROWS_PER_FRAME).unwrap();
        assert_eq!(paths.len(), 1);
        let img = pnm::read(&paths[0]).unwrap();
        assert_eq!((img.width, img.height), (32, 64));
        let back = import_latent_planes(dir.path()).unwrap();
        assert_eq!(back.len(), 64);
        for (a, b) in back.iter().flatten().zip(c.iter().flatten()) {
            assert!((a - b).abs() <= 1.0 / 510.0 + 1e-12);
        }
    }

    #[test]
    fn padded_tail() {
        let dir = tempfile::tempdir().unwrap();
        let c = codes(70, 4);
        let paths = export_latent_planes(&c, dir.path(), 64).unwrap();
        assert_eq!(paths.len(), 2);
        let tail = pnm::read(&paths[1]).unwrap();
        assert!(tail.samples[6 * 4..].iter().all(|&s| s == 0));
        assert_eq!(import_latent_planes(dir.path()).unwrap().len(), 70);
    }

    #[test]
    fn wrong_width_rejected() {
        let dir = tempfile::tempdir().unwrap();
        export_latent_planes(&codes(10, 8), dir.path(), 16).unwrap();
        let img = PnmImage::new(7, 16, 1, 255).unwrap();
        pnm::write(&dir.path().join(frame_name(0)), &img).unwrap();
        assert!(matches!(import_latent_planes(dir.path()), Err(Error::Shape(_))));
    }
}
