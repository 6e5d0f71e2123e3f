//! C ABI for the dcstyle engine.
//!
//! Engines and images are opaque handles created and destroyed through this
//! API. Every fallible call returns a [`DcsStatus`]; on failure the message
//! is available from [`dcs_last_error`] on the same thread. Panics are caught
//! at the boundary and reported as `DCS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use dcstyle::{load_depth, load_mask, DepthControls, Engine, Error, MaskSource, RasterImage, StylizeParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DegenerateDepth = 3,
    Format = 4,
    Manifest = 5,
    NonFinite = 6,
    Io = 7,
    Image = 8,
    Panic = 9,
}

/// Opaque encoder/decoder pair. Safe to use from several threads at once.
pub struct DcsEngine(Engine);

/// Opaque 8-bit RGB image.
pub struct DcsImage(RasterImage);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcsParams {
    /// Global strength in [0, 1].
    pub alpha: f32,
    pub depth_min: f64,
    pub depth_max: f64,
    /// When true, near regions receive more style.
    pub invert_depth: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> DcsStatus {
    match err {
        Error::InvalidInput(_) => DcsStatus::InvalidInput,
        Error::DegenerateDepth(_) => DcsStatus::DegenerateDepth,
        Error::Format(_) => DcsStatus::Format,
        Error::Manifest(_) => DcsStatus::Manifest,
        Error::NonFinite(_) => DcsStatus::NonFinite,
        Error::Io(_) => DcsStatus::Io,
        Error::Image(_) => DcsStatus::Image,
    }
}

enum Failure {
    Null(&'static str),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DcsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            DcsStatus::NullPointer
        }
        Ok(Err(Failure::Engine(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            DcsStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Engine(Error::InvalidInput(format!("{what} is not valid UTF-8"))))?;
    Ok(PathBuf::from(s))
}

unsafe fn optional_path(p: *const c_char, what: &'static str) -> Result<Option<PathBuf>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        path_arg(p, what).map(Some)
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn dcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn dcs_params_default() -> DcsParams {
    DcsParams { alpha: 1.0, depth_min: 0.0, depth_max: 1.0, invert_depth: false }
}

/// Loads `encoder.adsw` and `decoder.adsw` from `weights_dir`.
///
/// # Safety
/// `weights_dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcs_engine_open(weights_dir: *const c_char, out: *mut *mut DcsEngine) -> DcsStatus {
    guard(|| {
        let dir = path_arg(weights_dir, "weights_dir")?;
        write_out(out, DcsEngine(Engine::from_dir(dir)?))
    })
}

/// Engine with deterministic random weights, for testing bindings.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcs_engine_synthetic(seed: u64, out: *mut *mut DcsEngine) -> DcsStatus {
    guard(|| write_out(out, DcsEngine(Engine::synthetic(seed))))
}

/// # Safety
/// `engine` must come from `dcs_engine_open`/`dcs_engine_synthetic` and not
/// be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn dcs_engine_free(engine: *mut DcsEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Loads a PNG or PPM file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcs_image_load(path: *const c_char, out: *mut *mut DcsImage) -> DcsStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        write_out(out, DcsImage(RasterImage::load(path)?))
    })
}

/// Copies `len == height * width * 3` interleaved RGB bytes.
///
/// # Safety
/// `rgb` must point to `len` readable bytes and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcs_image_from_rgb(
    height: usize,
    width: usize,
    rgb: *const u8,
    len: usize,
    out: *mut *mut DcsImage,
) -> DcsStatus {
    guard(|| {
        if rgb.is_null() && len > 0 {
            return Err(Failure::Null("rgb"));
        }
        let bytes = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(rgb, len).to_vec() };
        write_out(out, DcsImage(RasterImage::new(height, width, bytes)?))
    })
}

/// # Safety
/// `image` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn dcs_image_width(image: *const DcsImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `image` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn dcs_image_height(image: *const DcsImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// Borrowed pointer to `height * width * 3` RGB bytes, valid while the image
/// lives. Writes the byte count to `len` when non-NULL.
///
/// # Safety
/// `image` must be a valid handle; `len` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn dcs_image_pixels(image: *const DcsImage, len: *mut usize) -> *const u8 {
    let Some(img) = image.as_ref() else {
        return ptr::null();
    };
    if let Some(len) = len.as_mut() {
        *len = img.0.pixels().len();
    }
    img.0.pixels().as_ptr()
}

/// Writes PNG, or PPM when the path ends in `.ppm`/`.pnm`.
///
/// # Safety
/// `image` must be a valid handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dcs_image_save(image: *const DcsImage, path: *const c_char) -> DcsStatus {
    guard(|| {
        let img = ref_arg(image, "image")?;
        let path = path_arg(path, "path")?;
        img.0.save(path)?;
        Ok(())
    })
}

/// # Safety
/// `image` must come from this API and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn dcs_image_free(image: *mut DcsImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Stylizes `content` with `n_styles` style images.
///
/// `style_weights` may be NULL for equal weights; otherwise it holds
/// `n_styles` non-negative values summing to 1. At most one of `depth_path`
/// and `mask_path` may be non-NULL. `params` may be NULL for defaults.
///
/// # Safety
/// All non-NULL pointers must be valid; `styles` must hold `n_styles`
/// image handles.
#[no_mangle]
pub unsafe extern "C" fn dcs_stylize(
    engine: *const DcsEngine,
    content: *const DcsImage,
    styles: *const *const DcsImage,
    style_weights: *const f32,
    n_styles: usize,
    depth_path: *const c_char,
    mask_path: *const c_char,
    params: *const DcsParams,
    out: *mut *mut DcsImage,
) -> DcsStatus {
    guard(|| {
        let engine = ref_arg(engine, "engine")?;
        let content = ref_arg(content, "content")?;
        if styles.is_null() && n_styles > 0 {
            return Err(Failure::Null("styles"));
        }
        let handles = if n_styles == 0 { &[][..] } else { std::slice::from_raw_parts(styles, n_styles) };
        let style_images = handles
            .iter()
            .map(|&h| ref_arg(h, "styles[i]").map(|i| i.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let weights = if style_weights.is_null() {
            None
        } else {
            Some(std::slice::from_raw_parts(style_weights, n_styles).to_vec())
        };
        let depth = optional_path(depth_path, "depth_path")?;
        let mask = optional_path(mask_path, "mask_path")?;
        let mask_source = match (depth, mask) {
            (Some(_), Some(_)) => {
                return Err(
                    Error::InvalidInput("depth_path and mask_path are mutually exclusive".into()).into()
                )
            }
            (Some(d), None) => MaskSource::Depth(load_depth(d)?),
            (None, Some(m)) => MaskSource::Mask(load_mask(m)?),
            (None, None) => MaskSource::None,
        };
        let p = params.as_ref().copied().unwrap_or_else(|| dcs_params_default());
        let params = StylizeParams {
            alpha: p.alpha,
            depth_controls: DepthControls::new(p.depth_min, p.depth_max, p.invert_depth)?,
            style_weights: weights,
            mask_source,
        };
        let image = engine.0.stylize(&content.0, &style_images, &params)?;
        write_out(out, DcsImage(image))
    })
}

/// Decodes the unmodified content features.
///
/// # Safety
/// `engine` and `content` must be valid handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcs_reconstruct(
    engine: *const DcsEngine,
    content: *const DcsImage,
    out: *mut *mut DcsImage,
) -> DcsStatus {
    guard(|| {
        let engine = ref_arg(engine, "engine")?;
        let content = ref_arg(content, "content")?;
        write_out(out, DcsImage(engine.0.reconstruct(&content.0)?))
    })
}
