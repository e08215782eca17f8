//! C ABI over `hdrinterp`.
//!
//! Frames and reconstructed sequences are opaque heap handles owned by the
//! caller and released with the matching `*_free` function. Every fallible
//! call returns an [`HdriStatus`]; on failure the message is available from
//! [`hdri_last_error`] on the same thread until the next failing call.
//! Pixel data crosses the boundary as interleaved RGB `double`s, row-major,
//! `width * height * 3` values.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hdrinterp::interp::{interpolate, BackendKind};
use hdrinterp::io::{read_pfm, write_pfm};
use hdrinterp::merge::merge_hdr;
use hdrinterp::metrics::mu_psnr;
use hdrinterp::radiometry::ldr_to_radiance;
use hdrinterp::scheduler::{complete_exposure_streams, upscale_fps, AlternatingSequence, HdrFrame};
use hdrinterp::tonemap::MuLawParams;
use hdrinterp::{BitDepth, Crf, Error, ExposureTag, LdrFrame, PixelBuffer, RadianceFrame};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HdriStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    Format = 4,
    Io = 5,
    OutOfRange = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HdriTag {
    High = 0,
    Low = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HdriBackend {
    Blend = 0,
    Flow = 1,
}

/// Opaque LDR frame.
pub struct HdriLdrFrame(LdrFrame);

/// Opaque radiance frame.
pub struct HdriRadianceFrame(RadianceFrame);

/// Opaque reconstructed HDR sequence.
pub struct HdriSequence(Vec<HdrFrame>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(HdriStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::ShapeMismatch { .. } => HdriStatus::ShapeMismatch,
            Error::UnsupportedFormat(_) | Error::Malformed(_) | Error::Manifest(_) => HdriStatus::Format,
            Error::Io(_) => HdriStatus::Io,
            _ => HdriStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HdriStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HdriStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HdriStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HdriStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<String, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(HdriStatus::InvalidArgument, "path is not UTF-8".into()))
}

unsafe fn pixels_in(width: usize, height: usize, data: *const f64) -> Result<PixelBuffer, Failure> {
    if data.is_null() {
        return Err(null("data"));
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Failure(HdriStatus::InvalidArgument, "frame size overflows".into()))?;
    Ok(PixelBuffer::new(width, height, std::slice::from_raw_parts(data, len).to_vec())?)
}

unsafe fn pixels_out(src: &PixelBuffer, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let data = src.data();
    if len < data.len() {
        return Err(Failure(
            HdriStatus::OutOfRange,
            format!("buffer holds {len} values, need {}", data.len()),
        ));
    }
    ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
    Ok(())
}

fn crf(gamma: f64) -> Result<Crf, Failure> {
    Ok(Crf::new(gamma)?)
}

fn backend(b: HdriBackend) -> BackendKind {
    match b {
        HdriBackend::Blend => BackendKind::Blend,
        HdriBackend::Flow => BackendKind::Flow,
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hdri_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates an LDR frame from values in `[0, 1]`. `bits` is 8, 16, or 0 for
/// unquantized data.
///
/// # Safety
/// `data` must point to `width * height * 3` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_ldr_frame_new(
    width: usize,
    height: usize,
    data: *const f64,
    exposure_time: f64,
    tag: HdriTag,
    bits: u32,
    out: *mut *mut HdriLdrFrame,
) -> HdriStatus {
    guard(|| {
        let pixels = pixels_in(width, height, data)?;
        let depth = if bits == 0 { BitDepth::Unquantized } else { BitDepth::from_bits(bits)? };
        let tag = match tag {
            HdriTag::High => ExposureTag::High,
            HdriTag::Low => ExposureTag::Low,
        };
        store(out, HdriLdrFrame(LdrFrame::new(pixels, exposure_time, tag, depth)?))
    })
}

/// # Safety
/// `frame` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hdri_ldr_frame_free(frame: *mut HdriLdrFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// # Safety
/// `frame` must be a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_ldr_frame_dims(frame: *const HdriLdrFrame, width: *mut usize, height: *mut usize) -> HdriStatus {
    guard(|| {
        let f = &borrow(frame, "frame")?.0;
        if width.is_null() || height.is_null() {
            return Err(null("width/height"));
        }
        (*width, *height) = f.dims();
        Ok(())
    })
}

/// Copies the pixels into `out`, which holds `len` doubles.
///
/// # Safety
/// `frame` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hdri_ldr_frame_pixels(frame: *const HdriLdrFrame, out: *mut f64, len: usize) -> HdriStatus {
    guard(|| pixels_out(borrow(frame, "frame")?.0.pixels(), out, len))
}

/// Creates a radiance frame from non-negative values.
///
/// # Safety
/// `data` must point to `width * height * 3` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_radiance_frame_new(
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut HdriRadianceFrame,
) -> HdriStatus {
    guard(|| store(out, HdriRadianceFrame(RadianceFrame::new(pixels_in(width, height, data)?)?)))
}

/// # Safety
/// `frame` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hdri_radiance_frame_free(frame: *mut HdriRadianceFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// # Safety
/// `frame` must be a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_radiance_frame_dims(
    frame: *const HdriRadianceFrame,
    width: *mut usize,
    height: *mut usize,
) -> HdriStatus {
    guard(|| {
        let f = &borrow(frame, "frame")?.0;
        if width.is_null() || height.is_null() {
            return Err(null("width/height"));
        }
        (*width, *height) = f.dims();
        Ok(())
    })
}

/// # Safety
/// `frame` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hdri_radiance_frame_pixels(frame: *const HdriRadianceFrame, out: *mut f64, len: usize) -> HdriStatus {
    guard(|| pixels_out(borrow(frame, "frame")?.0.pixels(), out, len))
}

/// Maps an LDR frame to radiance through the power-law response `gamma`.
///
/// # Safety
/// `frame` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_ldr_to_radiance(
    frame: *const HdriLdrFrame,
    gamma: f64,
    out: *mut *mut HdriRadianceFrame,
) -> HdriStatus {
    guard(|| {
        let f = &borrow(frame, "frame")?.0;
        store(out, HdriRadianceFrame(ldr_to_radiance(f, crf(gamma)?)?))
    })
}

/// Synthesizes the frame at fraction `tau` in `(0, 1)` between `a` and `b`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_interpolate(
    a: *const HdriLdrFrame,
    b: *const HdriLdrFrame,
    tau: f64,
    method: HdriBackend,
    out: *mut *mut HdriLdrFrame,
) -> HdriStatus {
    guard(|| {
        let (a, b) = (&borrow(a, "a")?.0, &borrow(b, "b")?.0);
        let frame = interpolate(a, b, tau, backend(method).build().as_ref())?;
        store(out, HdriLdrFrame(frame))
    })
}

/// Fuses a long/short exposure pair into one radiance frame.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_merge(
    a: *const HdriLdrFrame,
    b: *const HdriLdrFrame,
    gamma: f64,
    out: *mut *mut HdriRadianceFrame,
) -> HdriStatus {
    guard(|| {
        let (a, b) = (&borrow(a, "a")?.0, &borrow(b, "b")?.0);
        store(out, HdriRadianceFrame(merge_hdr(a, b, crf(gamma)?)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_read_pfm(path: *const c_char, out: *mut *mut HdriRadianceFrame) -> HdriStatus {
    guard(|| {
        let path = path_arg(path)?;
        store(out, HdriRadianceFrame(read_pfm(&path)?))
    })
}

/// Writes a little-endian PFM.
///
/// # Safety
/// `path` must be a NUL-terminated string; `frame` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hdri_write_pfm(path: *const c_char, frame: *const HdriRadianceFrame) -> HdriStatus {
    guard(|| {
        let path = path_arg(path)?;
        Ok(write_pfm(&path, &borrow(frame, "frame")?.0)?)
    })
}

/// μ-law PSNR in dB between two radiance frames.
///
/// # Safety
/// `pred` and `gt` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_mu_psnr(
    pred: *const HdriRadianceFrame,
    gt: *const HdriRadianceFrame,
    mu: f64,
    out: *mut f64,
) -> HdriStatus {
    guard(|| {
        let (pred, gt) = (&borrow(pred, "pred")?.0, &borrow(gt, "gt")?.0);
        let params = MuLawParams::new(mu)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = mu_psnr(pred, gt, params)?;
        Ok(())
    })
}

/// Reconstructs an HDR sequence from `count` alternating-exposure frames at
/// `2^factor_log2` times the input rate. A `factor_log2` of 0 gives one
/// output per interior input frame.
///
/// # Safety
/// `frames` must point to `count` live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_reconstruct(
    frames: *const *const HdriLdrFrame,
    count: usize,
    factor_log2: u32,
    method: HdriBackend,
    gamma: f64,
    out: *mut *mut HdriSequence,
) -> HdriStatus {
    guard(|| {
        if frames.is_null() {
            return Err(null("frames"));
        }
        let inputs = std::slice::from_raw_parts(frames, count)
            .iter()
            .map(|&f| borrow(f, "frame").map(|f| f.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let seq = AlternatingSequence::new(inputs, 1.0)?;
        let b = backend(method).build();
        let streams = complete_exposure_streams(&seq, b.as_ref())?;
        store(out, HdriSequence(upscale_fps(&streams, factor_log2, b.as_ref(), crf(gamma)?)?))
    })
}

/// # Safety
/// `seq` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hdri_sequence_free(seq: *mut HdriSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Number of frames, or 0 for a null handle.
///
/// # Safety
/// `seq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hdri_sequence_len(seq: *const HdriSequence) -> usize {
    seq.as_ref().map_or(0, |s| s.0.len())
}

unsafe fn sequence_frame<'a>(seq: *const HdriSequence, index: usize) -> Result<&'a HdrFrame, Failure> {
    let s = &borrow(seq, "seq")?.0;
    s.get(index)
        .ok_or_else(|| Failure(HdriStatus::OutOfRange, format!("frame {index} of {}", s.len())))
}

/// Timestamp of frame `index` as `numerator / denominator` input frame
/// intervals, and its synthesis level (-1 for frames built from a captured
/// input).
///
/// # Safety
/// `seq` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_sequence_timestamp(
    seq: *const HdriSequence,
    index: usize,
    numerator: *mut i64,
    denominator: *mut u64,
    level: *mut i32,
) -> HdriStatus {
    guard(|| {
        let f = sequence_frame(seq, index)?;
        if numerator.is_null() || denominator.is_null() || level.is_null() {
            return Err(null("numerator/denominator/level"));
        }
        *numerator = f.timestamp.numerator();
        *denominator = f.timestamp.denominator();
        *level = f.provenance.level().map_or(-1, |l| l as i32);
        Ok(())
    })
}

/// Copies frame `index` out as a new radiance handle.
///
/// # Safety
/// `seq` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hdri_sequence_frame(
    seq: *const HdriSequence,
    index: usize,
    out: *mut *mut HdriRadianceFrame,
) -> HdriStatus {
    guard(|| {
        let f = sequence_frame(seq, index)?;
        store(out, HdriRadianceFrame(f.radiance.clone()))
    })
}
