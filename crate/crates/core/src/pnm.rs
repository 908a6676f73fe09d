//! Binary PGM (`P5`) and PPM (`P6`) reading and writing.
//!
//! Only the two binary variants are supported, with a maxval of 255 (one
//! byte per sample) or 65535 (two big-endian bytes per sample). Samples are
//! kept as integers here; scaling to `[0, 1]` happens in the light-field
//! loader.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmImage {
    pub width: usize,
    pub height: usize,
    /// 1 for PGM, 3 for PPM.
    pub channels: usize,
    pub maxval: u16,
    /// Interleaved samples, row-major: `(y * width + x) * channels + c`.
    pub samples: Vec<u16>,
}

impl PnmImage {
    pub fn new(width: usize, height: usize, channels: usize, maxval: u16) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Format(format!("{channels} channels")));
        }
        if maxval != 255 && maxval != 65535 {
            return Err(Error::Format(format!("maxval {maxval}")));
        }
        Ok(PnmImage {
            width,
            height,
            channels,
            maxval,
            samples: vec![0; width * height * channels],
        })
    }

    pub fn bit_depth(&self) -> u32 {
        if self.maxval == 255 {
            8
        } else {
            16
        }
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format(format!("missing {what} in header")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad {what} in header")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<PnmImage> {
    if bytes.len() < 2 {
        return Err(Error::Format("file too short".into()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::Format(format!(
                "magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format("zero image dimension".into()));
    }
    let maxval = match maxval {
        255 => 255u16,
        65535 => 65535u16,
        m => return Err(Error::Format(format!("maxval {m}"))),
    };
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Format("missing raster separator".into())),
    }
    let count = width * height * channels;
    let raster = &bytes[cur.pos..];
    let samples: Vec<u16> = if maxval == 255 {
        if raster.len() < count {
            return Err(Error::Format("raster truncated".into()));
        }
        raster[..count].iter().map(|&b| u16::from(b)).collect()
    } else {
        if raster.len() < 2 * count {
            return Err(Error::Format("raster truncated".into()));
        }
        raster[..2 * count]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]))
            .collect()
    };
    Ok(PnmImage {
        width,
        height,
        channels,
        maxval,
        samples,
    })
}

pub fn encode(img: &PnmImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval == 255 {
        out.extend(img.samples.iter().map(|&s| s.min(255) as u8));
    } else {
        for &s in &img.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}

pub fn read(path: &Path) -> Result<PnmImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write(path: &Path, img: &PnmImage) -> Result<()> {
    fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_8bit_rgb() {
        let mut img = PnmImage::new(3, 2, 3, 255).unwrap();
        for (i, s) in img.samples.iter_mut().enumerate() {
            *s = (i * 13 % 256) as u16;
        }
        assert_eq!(decode(&encode(&img)).unwrap(), img);
    }

    #[test]
    fn roundtrip_16bit_gray() {
        let mut img = PnmImage::new(4, 3, 1, 65535).unwrap();
        for (i, s) in img.samples.iter_mut().enumerate() {
            *s = (i as u16).wrapping_mul(5003);
        }
        assert_eq!(decode(&encode(&img)).unwrap(), img);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        let img = decode(&bytes).unwrap();
        assert_eq!(img.samples, vec![7, 9]);
    }

    #[test]
    fn rejects_unknown_magic_and_maxval() {
        assert!(matches!(decode(b"P2\n1 1\n255\n0"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P5\n1 1\n1023\n00"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P5\n2 2\n255\n00"), Err(Error::Format(_))));
    }
}
