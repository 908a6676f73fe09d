//! Light-field data model and on-disk layout.
//!
//! A light field is a 4D radiance tensor `L(u, v, s, t)` with `(s, t)` the
//! angular (viewpoint) coordinates and `(u, v)` the spatial ones. Samples are
//! stored planar as `(c, t, s, v, u)` with `u` fastest.
//!
//! On disk a light field is a plain-text manifest plus one binary PGM/PPM
//! file per sub-aperture view:
//!
//! ```text
//! S T C BITDEPTH
//! view_t0_s0.ppm
//! view_t0_s1.ppm
//! ...
//! ```
//!
//! Paths are relative to the manifest's directory and listed row-major with
//! `t` outer and `s` inner.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pnm::{self, PnmImage};

/// A single sub-aperture image, planar `(c, v, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewImage {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<f64>,
}

impl ViewImage {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::Shape("view dimensions must be positive".into()));
        }
        if samples.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "view buffer has {} samples, expected {}",
                samples.len(),
                width * height * channels
            )));
        }
        check_unit_range(&samples)?;
        Ok(ViewImage {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn get(&self, c: usize, v: usize, u: usize) -> f64 {
        self.samples[(c * self.height + v) * self.width + u]
    }

    /// Converts to an integer PGM/PPM raster with the given maxval.
    pub fn to_pnm(&self, maxval: u16) -> Result<PnmImage> {
        let mut img = PnmImage::new(self.width, self.height, self.channels, maxval)?;
        let plane = self.width * self.height;
        let scale = f64::from(maxval);
        for c in 0..self.channels {
            for i in 0..plane {
                let x = self.samples[c * plane + i].clamp(0.0, 1.0);
                img.samples[i * self.channels + c] = (x * scale).round() as u16;
            }
        }
        Ok(img)
    }

    pub fn from_pnm(img: &PnmImage) -> Self {
        let plane = img.width * img.height;
        let scale = f64::from(img.maxval);
        let mut samples = vec![0.0; plane * img.channels];
        for c in 0..img.channels {
            for i in 0..plane {
                samples[c * plane + i] = f64::from(img.samples[i * img.channels + c]) / scale;
            }
        }
        ViewImage {
            width: img.width,
            height: img.height,
            channels: img.channels,
            samples,
        }
    }
}

/// 4D light field `L(u, v, s, t)` with `C` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LightField {
    angular: (usize, usize),
    spatial: (usize, usize),
    channels: usize,
    samples: Vec<f64>,
}

impl LightField {
    /// `angular = (S, T)`, `spatial = (W, H)`; `samples` ordered `(c, t, s, v, u)`.
    pub fn new(
        angular: (usize, usize),
        spatial: (usize, usize),
        channels: usize,
        samples: Vec<f64>,
    ) -> Result<Self> {
        let (s, t) = angular;
        let (w, h) = spatial;
        if s == 0 || t == 0 || w == 0 || h == 0 {
            return Err(Error::Shape("light-field dimensions must be positive".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!("{channels} channels (expected 1 or 3)")));
        }
        let expected = channels * s * t * w * h;
        if samples.len() != expected {
            return Err(Error::Shape(format!(
                "light-field buffer has {} samples, expected {expected}",
                samples.len()
            )));
        }
        check_unit_range(&samples)?;
        Ok(LightField {
            angular,
            spatial,
            channels,
            samples,
        })
    }

    pub fn zeros(angular: (usize, usize), spatial: (usize, usize), channels: usize) -> Result<Self> {
        let n = channels * angular.0 * angular.1 * spatial.0 * spatial.1;
        Self::new(angular, spatial, channels, vec![0.0; n])
    }

    /// Assembles a light field from views listed row-major (`t` outer, `s` inner).
    pub fn from_views(angular: (usize, usize), views: &[ViewImage]) -> Result<Self> {
        let (s_dim, t_dim) = angular;
        if views.len() != s_dim * t_dim {
            return Err(Error::Shape(format!(
                "{} views for a {s_dim}x{t_dim} grid",
                views.len()
            )));
        }
        let first = views
            .first()
            .ok_or_else(|| Error::Shape("empty view grid".into()))?;
        let (w, h, ch) = (first.width, first.height, first.channels);
        let plane = w * h;
        let mut samples = vec![0.0; ch * s_dim * t_dim * plane];
        for (idx, view) in views.iter().enumerate() {
            if (view.width, view.height, view.channels) != (w, h, ch) {
                return Err(Error::Shape(format!(
                    "view {idx} is {}x{}x{}, expected {w}x{h}x{ch}",
                    view.width, view.height, view.channels
                )));
            }
            let (t, s) = (idx / s_dim, idx % s_dim);
            for c in 0..ch {
                let dst = ((c * t_dim + t) * s_dim + s) * plane;
                samples[dst..dst + plane].copy_from_slice(&view.samples[c * plane..(c + 1) * plane]);
            }
        }
        Self::new(angular, (w, h), ch, samples)
    }

    pub fn angular_dims(&self) -> (usize, usize) {
        self.angular
    }

    pub fn spatial_dims(&self) -> (usize, usize) {
        self.spatial
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Number of views `S * T`.
    pub fn view_count(&self) -> usize {
        self.angular.0 * self.angular.1
    }

    pub fn index(&self, c: usize, t: usize, s: usize, v: usize, u: usize) -> usize {
        let (s_dim, t_dim) = self.angular;
        let (w, h) = self.spatial;
        (((c * t_dim + t) * s_dim + s) * h + v) * w + u
    }

    pub fn get(&self, c: usize, t: usize, s: usize, v: usize, u: usize) -> f64 {
        self.samples[self.index(c, t, s, v, u)]
    }

    /// Copies out the sub-aperture image at grid position `(s, t)`.
    pub fn extract_view(&self, s: usize, t: usize) -> Result<ViewImage> {
        let (s_dim, t_dim) = self.angular;
        if s >= s_dim || t >= t_dim {
            return Err(Error::OutOfRange(format!(
                "view ({s}, {t}) outside {s_dim}x{t_dim} grid"
            )));
        }
        let (w, h) = self.spatial;
        let plane = w * h;
        let mut samples = Vec::with_capacity(plane * self.channels);
        for c in 0..self.channels {
            let start = self.index(c, t, s, 0, 0);
            samples.extend_from_slice(&self.samples[start..start + plane]);
        }
        Ok(ViewImage {
            width: w,
            height: h,
            channels: self.channels,
            samples,
        })
    }

    /// All views row-major (`t` outer, `s` inner).
    pub fn views(&self) -> Vec<ViewImage> {
        let (s_dim, t_dim) = self.angular;
        (0..t_dim)
            .flat_map(|t| (0..s_dim).map(move |s| (s, t)))
            .map(|(s, t)| self.extract_view(s, t).expect("in range"))
            .collect()
    }
}

/// Signed angular coordinate of grid index `s` in a grid of size `size`:
/// `s - floor(size / 2)`, so the central view of an odd grid maps to 0.
pub fn angular_offset(s: usize, size: usize) -> i64 {
    s as i64 - (size / 2) as i64
}

fn check_unit_range(samples: &[f64]) -> Result<()> {
    if let Some((i, x)) = samples
        .iter()
        .enumerate()
        .find(|(_, x)| !(x.is_finite() && (0.0..=1.0).contains(*x)))
    {
        return Err(Error::InvalidValue(format!(
            "sample {i} = {x} outside [0, 1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub angular: (usize, usize),
    pub channels: usize,
    pub bit_depth: u32,
    /// Row-major, `t` outer and `s` inner.
    pub paths: Vec<PathBuf>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Manifest("empty manifest".into()))?;
        let fields: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Manifest(format!("bad header line {header:?}")))?;
        let [s, t, c, bits] = fields[..] else {
            return Err(Error::Manifest(format!(
                "header needs \"S T C BITDEPTH\", got {header:?}"
            )));
        };
        if s == 0 || t == 0 {
            return Err(Error::Manifest("angular dimensions must be positive".into()));
        }
        if c != 1 && c != 3 {
            return Err(Error::Manifest(format!("{c} channels (expected 1 or 3)")));
        }
        if bits != 8 && bits != 16 {
            return Err(Error::Manifest(format!("bit depth {bits} (expected 8 or 16)")));
        }
        let paths: Vec<PathBuf> = lines.map(PathBuf::from).collect();
        if paths.len() != s * t {
            return Err(Error::Manifest(format!(
                "{} view entries for a {s}x{t} grid",
                paths.len()
            )));
        }
        Ok(Manifest {
            angular: (s, t),
            channels: c,
            bit_depth: bits as u32,
            paths,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {}\n",
            self.angular.0, self.angular.1, self.channels, self.bit_depth
        );
        for p in &self.paths {
            out.push_str(&p.to_string_lossy());
            out.push('\n');
        }
        out
    }

    fn maxval(&self) -> u16 {
        if self.bit_depth == 8 {
            255
        } else {
            65535
        }
    }
}

/// Loads every view listed in `manifest`, resolving paths against `base_dir`.
pub fn load_light_field(manifest: &Manifest, base_dir: &Path) -> Result<LightField> {
    let maxval = manifest.maxval();
    let mut views = Vec::with_capacity(manifest.paths.len());
    for rel in &manifest.paths {
        let path = base_dir.join(rel);
        let img = pnm::read(&path)?;
        if img.channels != manifest.channels {
            return Err(Error::Shape(format!(
                "{}: {} channels, manifest declares {}",
                path.display(),
                img.channels,
                manifest.channels
            )));
        }
        if img.maxval != maxval {
            return Err(Error::Format(format!(
                "{}: maxval {}, manifest declares {}-bit",
                path.display(),
                img.maxval,
                manifest.bit_depth
            )));
        }
        if let Some(first) = views.first() {
            let first: &ViewImage = first;
            if (img.width, img.height) != (first.width, first.height) {
                return Err(Error::Shape(format!(
                    "{}: {}x{} differs from first view {}x{}",
                    path.display(),
                    img.width,
                    img.height,
                    first.width,
                    first.height
                )));
            }
        }
        views.push(ViewImage::from_pnm(&img));
    }
    LightField::from_views(manifest.angular, &views)
}

/// Reads a manifest file and the views it references.
pub fn load_manifest_file(path: &Path) -> Result<LightField> {
    let manifest = Manifest::read(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    load_light_field(&manifest, base)
}

/// Writes `lf` as `manifest.txt` plus one PGM/PPM per view into `dir`.
pub fn save_light_field(lf: &LightField, dir: &Path, bit_depth: u32) -> Result<PathBuf> {
    let maxval = match bit_depth {
        8 => 255,
        16 => 65535,
        b => return Err(Error::InvalidValue(format!("bit depth {b}"))),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ext = if lf.channels == 1 { "pgm" } else { "ppm" };
    let (s_dim, t_dim) = lf.angular;
    let mut paths = Vec::with_capacity(s_dim * t_dim);
    for t in 0..t_dim {
        for s in 0..s_dim {
            let name = PathBuf::from(format!("view_t{t}_s{s}.{ext}"));
            let img = lf.extract_view(s, t)?.to_pnm(maxval)?;
            pnm::write(&dir.join(&name), &img)?;
            paths.push(name);
        }
    }
    let manifest = Manifest {
        angular: lf.angular,
        channels: lf.channels,
        bit_depth,
        paths,
    };
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
