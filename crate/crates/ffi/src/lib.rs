//! C ABI over `lfcodec`.
//!
//! Objects cross the boundary as opaque pointers created by `lfc_*_new`,
//! `lfc_*_load` or an operation, and released with the matching `lfc_*_free`.
//! Every fallible call returns an [`LfcStatus`]; on failure the message is
//! available from [`lfc_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::slice;

use lfcodec::config::PipelineConfig;
use lfcodec::error::Error;
use lfcodec::lightfield::{load_manifest_file, LightField};
use lfcodec::metrics::{bd_metrics, RdPoint};
use lfcodec::pipeline::{decode, encode, DbnModel};
use lfcodec::quality::{psnr, PEAK_NORMALIZED};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Shape = 5,
    Config = 6,
    Truncated = 7,
    Corrupt = 8,
    Internal = 9,
}

/// A light field with samples in `[0, 1]`.
pub struct LfcLightField(LightField);

/// A trained patch autoencoder.
pub struct LfcModel(DbnModel);

/// Pipeline configuration, starting from defaults.
pub struct LfcConfig(PipelineConfig);

/// An owned byte buffer, e.g. an encoded container.
pub struct LfcBuffer(Vec<u8>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LfcStatus {
    match e {
        Error::Io { .. } => LfcStatus::Io,
        Error::Manifest(_) | Error::Format(_) | Error::BadMagic | Error::Version(_) => LfcStatus::Format,
        Error::Shape(_) => LfcStatus::Shape,
        Error::Config(_) => LfcStatus::Config,
        Error::Truncated { .. } => LfcStatus::Truncated,
        Error::Corrupt(_) => LfcStatus::Corrupt,
        _ => LfcStatus::InvalidArgument,
    }
}

struct Fail(LfcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LfcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LfcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            LfcStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(LfcStatus::NullArgument, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(LfcStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(LfcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread; valid until the next
/// failing call. Never null.
#[no_mangle]
pub extern "C" fn lfc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lfc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a light field from a manifest file.
///
/// # Safety
/// `manifest` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_light_field_load(manifest: *const c_char, out: *mut *mut LfcLightField) -> LfcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let lf = load_manifest_file(&path_arg(manifest, "manifest")?)?;
        *out = Box::into_raw(Box::new(LfcLightField(lf)));
        Ok(())
    })
}

/// Builds a light field from `len` samples ordered `(c, t, s, v, u)`.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_light_field_from_samples(
    s: usize,
    t: usize,
    w: usize,
    h: usize,
    channels: usize,
    samples: *const f64,
    len: usize,
    out: *mut *mut LfcLightField,
) -> LfcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if samples.is_null() {
            return Err(null("samples"));
        }
        let data = slice::from_raw_parts(samples, len).to_vec();
        let lf = LightField::new((s, t), (w, h), channels, data)?;
        *out = Box::into_raw(Box::new(LfcLightField(lf)));
        Ok(())
    })
}

/// Writes the dimensions; any output pointer may be null.
///
/// # Safety
/// `lf` must come from this library; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_light_field_dims(
    lf: *const LfcLightField,
    s: *mut usize,
    t: *mut usize,
    w: *mut usize,
    h: *mut usize,
    channels: *mut usize,
) -> LfcStatus {
    guard(|| {
        let lf = &ref_arg(lf, "light field")?.0;
        let (sv, tv) = lf.angular_dims();
        let (wv, hv) = lf.spatial_dims();
        for (p, v) in [(s, sv), (t, tv), (w, wv), (h, hv), (channels, lf.channels())] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Borrows the samples, ordered `(c, t, s, v, u)`, for the lifetime of `lf`.
///
/// # Safety
/// `lf` must come from this library; `data` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_light_field_samples(
    lf: *const LfcLightField,
    data: *mut *const f64,
    len: *mut usize,
) -> LfcStatus {
    guard(|| {
        let lf = &ref_arg(lf, "light field")?.0;
        *out_arg(data, "data")? = lf.samples().as_ptr();
        *out_arg(len, "len")? = lf.samples().len();
        Ok(())
    })
}

/// # Safety
/// `lf` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lfc_light_field_free(lf: *mut LfcLightField) {
    if !lf.is_null() {
        drop(Box::from_raw(lf));
    }
}

/// Plain PSNR (peak 1) over every sample of two equally shaped light fields.
///
/// # Safety
/// Both handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_psnr(a: *const LfcLightField, b: *const LfcLightField, out: *mut f64) -> LfcStatus {
    guard(|| {
        let a = &ref_arg(a, "a")?.0;
        let b = &ref_arg(b, "b")?.0;
        *out_arg(out, "out")? = psnr(a, b, PEAK_NORMALIZED)?;
        Ok(())
    })
}

/// Loads a model file written by `train-dbn`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_model_load(path: *const c_char, out: *mut *mut LfcModel) -> LfcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = DbnModel::load(&path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(LfcModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lfc_model_free(model: *mut LfcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Creates a configuration holding the defaults.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_config_new(out: *mut *mut LfcConfig) -> LfcStatus {
    guard(|| {
        *out_arg(out, "out")? = Box::into_raw(Box::new(LfcConfig(PipelineConfig::default())));
        Ok(())
    })
}

/// Sets one `section.key` entry, e.g. `("quant.bits", "8")`.
///
/// # Safety
/// `cfg` must come from this library; `key` and `value` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lfc_config_set(cfg: *mut LfcConfig, key: *const c_char, value: *const c_char) -> LfcStatus {
    guard(|| {
        let cfg = &mut out_arg(cfg, "config")?.0;
        cfg.set(str_arg(key, "key")?, str_arg(value, "value")?)?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lfc_config_free(cfg: *mut LfcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Encodes `lf` into a container. `cfg` may be null for defaults; `model`
/// may be null only for lossless configurations.
///
/// # Safety
/// Handles must be null or come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_encode(
    lf: *const LfcLightField,
    cfg: *const LfcConfig,
    model: *const LfcModel,
    out: *mut *mut LfcBuffer,
) -> LfcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let lf = &ref_arg(lf, "light field")?.0;
        let defaults = PipelineConfig::default();
        let cfg = cfg.as_ref().map_or(&defaults, |c| &c.0);
        cfg.validate()?;
        let model = model.as_ref().map(|m| &m.0);
        let enc = encode(lf, &cfg.codec, model)?;
        *out = Box::into_raw(Box::new(LfcBuffer(enc.bytes)));
        Ok(())
    })
}

/// Decodes up to `max_level` levels (0 means all) of a container.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `model` may be null for
/// lossless containers; `out` must be writable; `levels_used` may be null.
#[no_mangle]
pub unsafe extern "C" fn lfc_decode(
    bytes: *const u8,
    len: usize,
    max_level: usize,
    model: *const LfcModel,
    out: *mut *mut LfcLightField,
    levels_used: *mut usize,
) -> LfcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if bytes.is_null() {
            return Err(null("bytes"));
        }
        let data = slice::from_raw_parts(bytes, len);
        let level = (max_level > 0).then_some(max_level);
        let dec = decode(data, level, model.as_ref().map(|m| &m.0))?;
        if let Some(l) = levels_used.as_mut() {
            *l = dec.levels_used;
        }
        *out = Box::into_raw(Box::new(LfcLightField(dec.light_field)));
        Ok(())
    })
}

/// Borrows the buffer contents for the lifetime of `buf`.
///
/// # Safety
/// `buf` must come from this library; `data` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_buffer_data(buf: *const LfcBuffer, data: *mut *const u8, len: *mut usize) -> LfcStatus {
    guard(|| {
        let buf = &ref_arg(buf, "buffer")?.0;
        *out_arg(data, "data")? = buf.as_ptr();
        *out_arg(len, "len")? = buf.len();
        Ok(())
    })
}

/// # Safety
/// `buf` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lfc_buffer_free(buf: *mut LfcBuffer) {
    if !buf.is_null() {
        drop(Box::from_raw(buf));
    }
}

/// Bjontegaard metrics of curve B against anchor curve A; rates in bits
/// per pixel, qualities in dB.
///
/// # Safety
/// Each array must hold its stated number of doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn lfc_bd_metrics(
    rate_a: *const f64,
    psnr_a: *const f64,
    count_a: usize,
    rate_b: *const f64,
    psnr_b: *const f64,
    count_b: usize,
    bd_rate: *mut f64,
    bd_psnr: *mut f64,
) -> LfcStatus {
    guard(|| {
        let curve = |r: *const f64, q: *const f64, n: usize| -> Result<Vec<RdPoint>, Fail> {
            if r.is_null() || q.is_null() {
                return Err(null("curve"));
            }
            let (r, q) = (slice::from_raw_parts(r, n), slice::from_raw_parts(q, n));
            Ok(r.iter()
                .zip(q)
                .map(|(&r, &q)| RdPoint::new(r, q))
                .collect::<lfcodec::Result<Vec<_>>>()?)
        };
        let a = curve(rate_a, psnr_a, count_a)?;
        let b = curve(rate_b, psnr_b, count_b)?;
        let result = bd_metrics(&a, &b)?;
        *out_arg(bd_rate, "bd_rate")? = result.bd_rate;
        *out_arg(bd_psnr, "bd_psnr")? = result.bd_psnr;
        Ok(())
    })
}
