//! The `LFLC` container: a header followed by one length-prefixed section
//! per scalable level, so any prefix ending on a section boundary decodes.

use super::entropy::{entropy_decode, entropy_encode};
use super::quantizer::QuantizerSpec;
use crate::binio::ByteReader;
use crate::dbn::NormRecord;
use crate::error::{Error, Result};
use crate::wbi::CodeMatrix;

pub const MAGIC: &[u8; 4] = b"LFLC";
pub const VERSION: u16 = 1;

/// What the weighted-binary image stack was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackSource {
    Layers,
    Views,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainerHeader {
    pub angular: (usize, usize),
    /// `(W, H)`.
    pub spatial: (usize, usize),
    pub channels: usize,
    pub depths: Vec<i64>,
    pub beta: f64,
    pub source: StackSource,
    pub partition: Vec<usize>,
    pub patch: usize,
    /// Encoder feature counts `[F1, ..., F4]`; empty in lossless mode.
    pub dbn_sizes: Vec<usize>,
    pub model_fingerprint: u64,
    pub quant_bits: u32,
    pub lossless: bool,
    /// One record per basis image, indexed `n * channels + c`.
    pub norms: Vec<NormRecord>,
}

impl ContainerHeader {
    pub fn layer_count(&self) -> usize {
        self.depths.len()
    }

    /// Number of images `J` in the weighted-binary stack.
    pub fn image_count(&self) -> usize {
        match self.source {
            StackSource::Layers => self.depths.len(),
            StackSource::Views => self.angular.0 * self.angular.1,
        }
    }

    pub fn components(&self) -> usize {
        self.partition.iter().sum()
    }

    pub fn level_count(&self) -> usize {
        self.partition.len()
    }

    pub fn image_len(&self) -> usize {
        self.spatial.0 * self.spatial.1
    }

    pub fn tiles_per_image(&self) -> usize {
        self.spatial.0.div_ceil(self.patch.max(1)) * self.spatial.1.div_ceil(self.patch.max(1))
    }

    pub fn code_len(&self) -> usize {
        self.dbn_sizes.last().copied().unwrap_or(0)
    }

    /// Latent symbols carried by level `m`.
    pub fn latent_count(&self, m: usize) -> usize {
        self.partition[m] * self.channels * self.tiles_per_image() * self.code_len()
    }

    pub fn validate(&self) -> Result<()> {
        let (s, t) = self.angular;
        let (w, h) = self.spatial;
        if s == 0 || t == 0 || w == 0 || h == 0 {
            return Err(Error::Corrupt("zero light-field dimension".into()));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::Corrupt(format!("{} channels", self.channels)));
        }
        if self.depths.is_empty() || self.partition.is_empty() || self.partition.contains(&0) {
            return Err(Error::Corrupt("empty layer or level description".into()));
        }
        if self.components() > 30 {
            return Err(Error::Corrupt(format!("{} components", self.components())));
        }
        if !self.beta.is_finite() {
            return Err(Error::Corrupt("non-finite layer bound".into()));
        }
        if !self.lossless {
            QuantizerSpec::new(self.quant_bits).map_err(|e| Error::Corrupt(e.to_string()))?;
            if self.patch < 2 || self.patch > w || self.patch > h {
                return Err(Error::Corrupt(format!("patch size {} for {w}x{h}", self.patch)));
            }
            if self.dbn_sizes.is_empty() || self.dbn_sizes.contains(&0) {
                return Err(Error::Corrupt("missing network sizes".into()));
            }
            if self.norms.len() != self.components() * self.channels {
                return Err(Error::Corrupt(format!(
                    "{} normalization records for {} basis images",
                    self.norms.len(),
                    self.components() * self.channels
                )));
            }
        }
        Ok(())
    }
}

/// Contents of one level section.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelPayload {
    /// Level dropped by the encoder; contributes nothing.
    Skipped,
    /// Binary codes plus quantized latent codes of the level's basis images,
    /// ordered by component, channel, tile, latent unit.
    Latent { codes: CodeMatrix, symbols: Vec<u32> },
    /// Binary codes plus the basis images as raw 64-bit floats.
    Raw { codes: CodeMatrix, basis: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub header: ContainerHeader,
    pub levels: Vec<LevelPayload>,
}

impl Container {
    pub fn levels_used(&self) -> usize {
        self.levels.len()
    }
}

const TAG_SKIPPED: u8 = 0;
const TAG_LATENT: u8 = 1;
const TAG_RAW: u8 = 2;

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::OutOfRange(format!("{v} does not fit a u32 field")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn write_header(h: &ContainerHeader, out: &mut Vec<u8>) -> Result<()> {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [h.angular.0, h.angular.1, h.spatial.0, h.spatial.1, h.channels] {
        put_u32(out, v)?;
    }
    put_u32(out, h.depths.len())?;
    for d in &h.depths {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&h.beta.to_le_bytes());
    out.push(match h.source {
        StackSource::Layers => 0,
        StackSource::Views => 1,
    });
    put_u32(out, h.partition.len())?;
    for &n in &h.partition {
        put_u32(out, n)?;
    }
    out.push(u8::from(h.lossless));
    out.push(h.quant_bits as u8);
    put_u32(out, h.patch)?;
    put_u32(out, h.dbn_sizes.len())?;
    for &f in &h.dbn_sizes {
        put_u32(out, f)?;
    }
    out.extend_from_slice(&h.model_fingerprint.to_le_bytes());
    put_u32(out, h.norms.len())?;
    for r in &h.norms {
        out.extend_from_slice(&r.min.to_le_bytes());
        out.extend_from_slice(&r.max.to_le_bytes());
    }
    Ok(())
}

fn read_count(r: &mut ByteReader, limit: usize, what: &str) -> Result<usize> {
    let n = r.u32()? as usize;
    if n > limit {
        return Err(Error::Corrupt(format!("{n} {what}")));
    }
    Ok(n)
}

fn read_header(r: &mut ByteReader) -> Result<ContainerHeader> {
    if r.take(4)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Version(version));
    }
    let mut dims = [0usize; 5];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let k = read_count(r, 1 << 16, "layers")?;
    let depths = (0..k).map(|_| r.i64()).collect::<Result<Vec<_>>>()?;
    let beta = r.f64()?;
    let source = match r.u8()? {
        0 => StackSource::Layers,
        1 => StackSource::Views,
        other => return Err(Error::Corrupt(format!("stack source tag {other}"))),
    };
    let m = read_count(r, 64, "levels")?;
    let partition = (0..m).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let lossless = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(Error::Corrupt(format!("lossless flag {other}"))),
    };
    let quant_bits = u32::from(r.u8()?);
    let patch = r.u32()? as usize;
    let f = read_count(r, 64, "network layers")?;
    let dbn_sizes = (0..f).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let model_fingerprint = r.u64()?;
    let count = read_count(r, 1 << 20, "normalization records")?;
    let norms = (0..count)
        .map(|_| Ok(NormRecord { min: r.f64()?, max: r.f64()? }))
        .collect::<Result<Vec<_>>>()?;
    let header = ContainerHeader {
        angular: (dims[0], dims[1]),
        spatial: (dims[2], dims[3]),
        channels: dims[4],
        depths,
        beta,
        source,
        partition,
        patch,
        dbn_sizes,
        model_fingerprint,
        quant_bits,
        lossless,
        norms,
    };
    header.validate()?;
    Ok(header)
}

fn pack_codes(codes: &CodeMatrix, out: &mut Vec<u8>) {
    let mut byte = 0u8;
    for (i, &bit) in codes.bits().iter().enumerate() {
        byte |= u8::from(bit) << (7 - i % 8);
        if i % 8 == 7 {
            out.push(byte);
            byte = 0;
        }
    }
    if !codes.bits().len().is_multiple_of(8) {
        out.push(byte);
    }
}

fn unpack_codes(r: &mut ByteReader, rows: usize, cols: usize) -> Result<CodeMatrix> {
    let n = rows * cols;
    let bytes = r.take(n.div_ceil(8))?;
    let bits = (0..n).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1).collect();
    CodeMatrix::from_bits(rows, cols, bits)
}

fn check_codes(h: &ContainerHeader, m: usize, codes: &CodeMatrix) -> Result<()> {
    if codes.rows() != h.partition[m] || codes.cols() != h.image_count() {
        return Err(Error::Shape(format!(
            "level {m} codes are {}x{}, expected {}x{}",
            codes.rows(),
            codes.cols(),
            h.partition[m],
            h.image_count()
        )));
    }
    Ok(())
}

fn write_section(h: &ContainerHeader, m: usize, level: &LevelPayload) -> Result<Vec<u8>> {
    let mut body = Vec::new();
    match level {
        LevelPayload::Skipped => body.push(TAG_SKIPPED),
        LevelPayload::Latent { codes, symbols } => {
            if h.lossless {
                return Err(Error::InvalidValue("latent section in a lossless container".into()));
            }
            check_codes(h, m, codes)?;
            if symbols.len() != h.latent_count(m) {
                return Err(Error::Shape(format!(
                    "level {m} has {} latent symbols, expected {}",
                    symbols.len(),
                    h.latent_count(m)
                )));
            }
            body.push(TAG_LATENT);
            pack_codes(codes, &mut body);
            body.extend(entropy_encode(symbols, h.quant_bits)?);
        }
        LevelPayload::Raw { codes, basis } => {
            check_codes(h, m, codes)?;
            if basis.len() != h.partition[m] * h.channels * h.image_len() {
                return Err(Error::Shape(format!("level {m} raw basis has {} values", basis.len())));
            }
            body.push(TAG_RAW);
            pack_codes(codes, &mut body);
            for v in basis {
                body.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(body)
}

fn read_section(h: &ContainerHeader, m: usize, body: &[u8]) -> Result<LevelPayload> {
    let mut r = ByteReader::new(body);
    let corrupt = |e: Error| match e {
        Error::Truncated { .. } => Error::Corrupt(format!("level {m} section is shorter than its contents")),
        other => other,
    };
    let tag = r.u8().map_err(corrupt)?;
    let payload = match tag {
        TAG_SKIPPED => LevelPayload::Skipped,
        TAG_LATENT if !h.lossless => {
            let codes = unpack_codes(&mut r, h.partition[m], h.image_count()).map_err(corrupt)?;
            let rest = r.take(r.remaining())?;
            let symbols = entropy_decode(rest, h.latent_count(m), h.quant_bits).map_err(corrupt)?;
            LevelPayload::Latent { codes, symbols }
        }
        TAG_RAW => {
            let codes = unpack_codes(&mut r, h.partition[m], h.image_count()).map_err(corrupt)?;
            let n = h.partition[m] * h.channels * h.image_len();
            let basis = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>().map_err(corrupt)?;
            LevelPayload::Raw { codes, basis }
        }
        other => return Err(Error::Corrupt(format!("level {m} has section tag {other}"))),
    };
    if !matches!(payload, LevelPayload::Latent { .. }) && !r.is_empty() {
        return Err(Error::Corrupt(format!("trailing bytes in level {m} section")));
    }
    Ok(payload)
}

pub fn write_container(container: &Container) -> Result<Vec<u8>> {
    let h = &container.header;
    h.validate()?;
    if container.levels.len() != h.level_count() {
        return Err(Error::Shape(format!(
            "{} level sections for {} levels",
            container.levels.len(),
            h.level_count()
        )));
    }
    let mut out = Vec::new();
    write_header(h, &mut out)?;
    for (m, level) in container.levels.iter().enumerate() {
        let body = write_section(h, m, level)?;
        let len = u32::try_from(body.len()).map_err(|_| Error::OutOfRange("section over 4 GiB".into()))?;
        out.extend_from_slice(&len.to_be_bytes());
        out.extend(body);
    }
    Ok(out)
}

/// Reads the header only.
pub fn read_header_bytes(bytes: &[u8]) -> Result<ContainerHeader> {
    read_header(&mut ByteReader::new(bytes))
}

/// Byte length of every complete section after the header, in order.
pub fn section_sizes(bytes: &[u8]) -> Result<Vec<usize>> {
    let mut r = ByteReader::new(bytes);
    let h = read_header(&mut r)?;
    let mut sizes = Vec::new();
    while sizes.len() < h.level_count() && !r.is_empty() {
        let len = r.u32_be().map_err(|_| truncated(sizes.len()))? as usize;
        r.take(len).map_err(|_| truncated(sizes.len()))?;
        sizes.push(len);
    }
    Ok(sizes)
}

fn truncated(complete: usize) -> Error {
    Error::Truncated {
        last_complete_level: (complete > 0).then_some(complete),
    }
}

/// Parses the header and up to `max_level` sections (all when `None`).
///
/// Only the bytes of the requested sections are touched. A stream cut
/// exactly after a section decodes to the levels it holds; a cut inside a
/// section fails with `Truncated`, naming the last complete level.
pub fn read_container(bytes: &[u8], max_level: Option<usize>) -> Result<Container> {
    let mut r = ByteReader::new(bytes);
    let header = read_header(&mut r).map_err(|e| match e {
        Error::Truncated { .. } => truncated(0),
        other => other,
    })?;
    let wanted = match max_level {
        None => header.level_count(),
        Some(m) if m >= 1 && m <= header.level_count() => m,
        Some(m) => {
            return Err(Error::OutOfRange(format!(
                "max level {m} outside [1, {}]",
                header.level_count()
            )))
        }
    };
    let mut levels = Vec::with_capacity(wanted);
    while levels.len() < wanted {
        if r.is_empty() {
            break;
        }
        let len = r.u32_be().map_err(|_| truncated(levels.len()))? as usize;
        let body = r.take(len).map_err(|_| truncated(levels.len()))?;
        levels.push(read_section(&header, levels.len(), body)?);
    }
    if levels.is_empty() {
        return Err(truncated(0));
    }
    Ok(Container { header, levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn header(lossless: bool) -> ContainerHeader {
        ContainerHeader {
            angular: (3, 3),
            spatial: (10, 6),
            channels: 1,
            depths: vec![-1, 0, 1],
            beta: 1.0 / 3.0,
            source: StackSource::Layers,
            partition: vec![2, 1],
            patch: 4,
            dbn_sizes: if lossless { vec![] } else { vec![8, 12, 4, 2] },
            model_fingerprint: 0xabcdef,
            quant_bits: 6,
            lossless,
            norms: if lossless {
                vec![]
            } else {
                (0..3).map(|n| NormRecord { min: -0.1 * n as f64, max: 0.5 }).collect()
            },
        }
    }

    fn codes(rows: usize) -> CodeMatrix {
        CodeMatrix::from_bits(rows, 3, (0..rows * 3).map(|i| i % 3 != 1).collect()).unwrap()
    }

    #[test]
    fn lossy_roundtrip() {
        let h = header(false);
        assert_eq!(h.tiles_per_image(), 6);
        let levels: Vec<LevelPayload> = (0..2)
            .map(|m| LevelPayload::Latent {
                codes: codes(h.partition[m]),
                symbols: (0..h.latent_count(m) as u32).map(|i| (i * 13) % 64).collect(),
            })
            .collect();
        let c = Container { header: h, levels };
        let bytes = write_container(&c).unwrap();
        assert_eq!(&bytes[..4], b"LFLC");
        assert_eq!(read_container(&bytes, None).unwrap(), c);
        let first = read_container(&bytes, Some(1)).unwrap();
        assert_eq!(first.levels_used(), 1);
        assert_eq!(first.levels[0], c.levels[0]);
        assert_eq!(section_sizes(&bytes).unwrap().len(), 2);
    }

    #[test]
    fn raw_and_skipped_roundtrip() {
        let h = header(true);
        let basis: Vec<f64> = (0..2 * 60).map(|i| i as f64 * 0.37 - 3.0).collect();
        let c = Container {
            header: h,
            levels: vec![LevelPayload::Raw { codes: codes(2), basis }, LevelPayload::Skipped],
        };
        let bytes = write_container(&c).unwrap();
        assert_eq!(read_container(&bytes, None).unwrap(), c);
    }

    #[test]
    fn header_errors() {
        let c = Container {
            header: header(true),
            levels: vec![LevelPayload::Skipped, LevelPayload::Skipped],
        };
        let mut bytes = write_container(&c).unwrap();
        assert!(read_container(&bytes, Some(3)).is_err());
        assert!(read_container(&bytes, Some(0)).is_err());
        bytes[4] = 9;
        assert!(matches!(read_container(&bytes, None), Err(Error::Version(9))));
        bytes[0] = b'X';
        assert!(matches!(read_container(&bytes, None), Err(Error::BadMagic)));
    }

    #[test]
    fn shape_checks_on_write() {
        let h = header(false);
        let bad = Container {
            header: h.clone(),
            levels: vec![
                LevelPayload::Latent {
                    codes: codes(2),
                    symbols: vec![0; 3],
                },
                LevelPayload::Skipped,
            ],
        };
        assert!(write_container(&bad).is_err());
        let short = Container {
            header: h,
            levels: vec![LevelPayload::Skipped],
        };
        assert!(write_container(&short).is_err());
    }
}
