//! Flat, buffer-oriented boundary around [`nftrack::pipeline::Tracker`].
//!
//! Everything crossing the boundary is a plain number or a byte buffer, so
//! the same three entry points serve native hosts (via the C ABI) and
//! browser hosts (via a WebAssembly build). Trackers live in a process-wide
//! registry keyed by nonzero integer handles. See `ABI.md` for the normative
//! description of the exported symbols.
//!
//! A handle must be driven by one thread at a time; distinct handles are
//! independent.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard, PoisonError};

use nftrack::camera::CameraIntrinsics;
use nftrack::image::{to_gray, GrayImage};
use nftrack::pipeline::{FrameResult, Phase, Tracker, TrackerConfig};
use nftrack::target::TargetTemplate;
use nftrack::Error;

/// Error codes reported by [`embed_last_error`] after a failed init.
pub const ERR_NONE: i32 = 0;
pub const ERR_DIMENSIONS: i32 = 1;
pub const ERR_TOO_FEW_FEATURES: i32 = 2;
pub const ERR_CONFIG: i32 = 3;
/// Non-positive physical size or invalid intrinsics.
pub const ERR_PARAMETERS: i32 = 4;

pub const STATUS_INVALID_HANDLE: i32 = -1;
pub const STATUS_DIMENSION_MISMATCH: i32 = -2;
pub const STATUS_NO_POSE: i32 = 0;
pub const STATUS_DETECTED: i32 = 1;
pub const STATUS_TRACKED: i32 = 2;

pub const FORMAT_GRAY: i32 = 0;
pub const FORMAT_RGBA: i32 = 1;

/// Length of the output record: 16 pose matrix values, 9 homography values,
/// total time in microseconds.
pub const RESULT_LEN: usize = 26;

struct Registry {
    next: u32,
    trackers: BTreeMap<u32, Arc<Mutex<Tracker>>>,
}

static REGISTRY: Mutex<Registry> = Mutex::new(Registry { next: 1, trackers: BTreeMap::new() });
thread_local! {
    static LAST_ERROR: Cell<i32> = const { Cell::new(ERR_NONE) };
}

fn set_error(code: i32) {
    LAST_ERROR.with(|e| e.set(code));
}

fn registry() -> MutexGuard<'static, Registry> {
    // A panic while holding the lock cannot leave the map inconsistent.
    REGISTRY.lock().unwrap_or_else(PoisonError::into_inner)
}

/// Result of one processed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessResult {
    pub status: i32,
    /// Row-major 4x4 camera-from-target transform; zeros without a pose.
    pub matrix: [f64; 16],
    /// Row-major template-to-frame homography; zeros without a pose.
    pub homography: [f64; 9],
    pub total_us: f64,
}

impl ProcessResult {
    fn status_only(status: i32) -> Self {
        Self { status, matrix: [0.0; 16], homography: [0.0; 9], total_us: 0.0 }
    }

    /// Flattens into the boundary record layout.
    pub fn to_record(&self) -> [f64; RESULT_LEN] {
        let mut out = [0.0; RESULT_LEN];
        out[..16].copy_from_slice(&self.matrix);
        out[16..25].copy_from_slice(&self.homography);
        out[25] = self.total_us;
        out
    }
}

impl From<&FrameResult> for ProcessResult {
    fn from(r: &FrameResult) -> Self {
        let mut out = Self::status_only(STATUS_NO_POSE);
        out.total_us = r.timings.total_us as f64;
        if let (Some(pose), Some(h)) = (&r.pose, &r.homography) {
            out.status = match r.phase_executed {
                Phase::Detecting => STATUS_DETECTED,
                Phase::Tracking => STATUS_TRACKED,
            };
            let m = pose.to_matrix4();
            for row in 0..4 {
                for col in 0..4 {
                    out.matrix[row * 4 + col] = m[(row, col)];
                }
            }
            out.homography = h.to_row_major();
        }
        out
    }
}

/// Parameters of [`init`], mirroring the flat boundary arguments.
#[derive(Debug, Clone, Copy)]
pub struct InitParams<'a> {
    pub template: &'a [u8],
    pub width: usize,
    pub height: usize,
    pub physical_width: f64,
    pub physical_height: f64,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub config: &'a str,
}

fn build_tracker(p: &InitParams) -> Result<Tracker, i32> {
    if p.width == 0 || p.height == 0 || p.width.checked_mul(p.height) != Some(p.template.len()) {
        return Err(ERR_DIMENSIONS);
    }
    let config = TrackerConfig::from_text(p.config).map_err(|_| ERR_CONFIG)?;
    let k = CameraIntrinsics::new(p.fx, p.fy, p.cx, p.cy).map_err(|_| ERR_PARAMETERS)?;
    if !(p.physical_width > 0.0 && p.physical_height > 0.0) {
        return Err(ERR_PARAMETERS);
    }
    let image = GrayImage::new(p.width, p.height, p.template.to_vec()).map_err(|_| ERR_DIMENSIONS)?;
    let template = TargetTemplate::new(image, p.physical_width, p.physical_height, &config.features).map_err(|e| {
        match e {
            Error::TooFewFeatures { .. } => ERR_TOO_FEW_FEATURES,
            // Images too small for the pyramid.
            _ => ERR_DIMENSIONS,
        }
    })?;
    Tracker::new(template, k, config).map_err(|e| match e {
        Error::TooFewFeatures { .. } => ERR_TOO_FEW_FEATURES,
        _ => ERR_CONFIG,
    })
}

/// Creates a tracker and returns its handle, or 0 with the error code
/// available from [`last_error`].
pub fn init(params: &InitParams) -> u32 {
    match build_tracker(params) {
        Ok(tracker) => {
            set_error(ERR_NONE);
            let mut reg = registry();
            let mut handle = reg.next;
            while handle == 0 || reg.trackers.contains_key(&handle) {
                handle = handle.wrapping_add(1);
            }
            reg.next = handle.wrapping_add(1);
            reg.trackers.insert(handle, Arc::new(Mutex::new(tracker)));
            handle
        }
        Err(code) => {
            set_error(code);
            0
        }
    }
}

/// Error code of the calling thread's most recent [`init`] (0 after a success).
pub fn last_error() -> i32 {
    LAST_ERROR.with(Cell::get)
}

/// Runs one frame. `format` is [`FORMAT_GRAY`] or [`FORMAT_RGBA`].
pub fn process(handle: u32, pixels: &[u8], format: i32, width: usize, height: usize) -> ProcessResult {
    // Only the lookup holds the registry lock; handles process concurrently.
    let Some(tracker) = registry().trackers.get(&handle).cloned() else {
        return ProcessResult::status_only(STATUS_INVALID_HANDLE);
    };
    let channels = match format {
        FORMAT_GRAY => 1,
        FORMAT_RGBA => 4,
        _ => return ProcessResult::status_only(STATUS_DIMENSION_MISMATCH),
    };
    let expected = width.checked_mul(height).and_then(|n| n.checked_mul(channels));
    if width == 0 || height == 0 || expected != Some(pixels.len()) {
        return ProcessResult::status_only(STATUS_DIMENSION_MISMATCH);
    }
    let frame = if channels == 4 {
        to_gray(pixels, width, height)
    } else {
        GrayImage::new(width, height, pixels.to_vec())
    };
    let Ok(frame) = frame else {
        return ProcessResult::status_only(STATUS_DIMENSION_MISMATCH);
    };
    let mut tracker = tracker.lock().unwrap_or_else(PoisonError::into_inner);
    match tracker.process_frame(&frame) {
        Ok(r) => ProcessResult::from(&r),
        Err(_) => ProcessResult::status_only(STATUS_DIMENSION_MISMATCH),
    }
}

/// Releases a tracker. Unknown or already disposed handles are ignored.
pub fn dispose(handle: u32) {
    registry().trackers.remove(&handle);
}

/// # Safety
/// `ptr` must be null or valid for `len` bytes.
unsafe fn slice<'a>(ptr: *const u8, len: usize) -> Option<&'a [u8]> {
    if ptr.is_null() {
        (len == 0).then_some(&[])
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// C entry point for [`init`]. `config` is UTF-8 text in the tracker's
/// `key = value` format (may be empty).
///
/// # Safety
/// `template` must be valid for `template_len` bytes and `config` for
/// `config_len` bytes (either may be null when its length is 0).
#[no_mangle]
pub unsafe extern "C" fn embed_init(
    template: *const u8,
    template_len: usize,
    tw: u32,
    th: u32,
    physical_w: f64,
    physical_h: f64,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    config: *const u8,
    config_len: usize,
) -> u32 {
    let Some(template) = slice(template, template_len) else {
        set_error(ERR_DIMENSIONS);
        return 0;
    };
    let config = match slice(config, config_len).map(std::str::from_utf8) {
        Some(Ok(c)) => c,
        _ => {
            set_error(ERR_CONFIG);
            return 0;
        }
    };
    init(&InitParams {
        template,
        width: tw as usize,
        height: th as usize,
        physical_width: physical_w,
        physical_height: physical_h,
        fx,
        fy,
        cx,
        cy,
        config,
    })
}

#[no_mangle]
pub extern "C" fn embed_last_error() -> i32 {
    last_error()
}

/// C entry point for [`process`]. Writes [`RESULT_LEN`] values to `out`
/// (when non-null) and returns the status.
///
/// # Safety
/// `pixels` must be valid for `pixels_len` bytes; `out` must be null or
/// valid for writing `RESULT_LEN` doubles.
#[no_mangle]
pub unsafe extern "C" fn embed_process(
    handle: u32,
    pixels: *const u8,
    pixels_len: usize,
    format: i32,
    fw: u32,
    fh: u32,
    out: *mut f64,
) -> i32 {
    let result = match slice(pixels, pixels_len) {
        Some(p) => process(handle, p, format, fw as usize, fh as usize),
        None => ProcessResult::status_only(STATUS_DIMENSION_MISMATCH),
    };
    if !out.is_null() {
        std::ptr::copy_nonoverlapping(result.to_record().as_ptr(), out, RESULT_LEN);
    }
    result.status
}

#[no_mangle]
pub extern "C" fn embed_dispose(handle: u32) {
    dispose(handle)
}
