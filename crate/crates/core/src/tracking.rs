//! Steady-state tracking: the template is warped by the previous homography,
//! small patches are cut from the warp and located in the new frame by NCC
//! search, and the homography and pose are re-estimated from the matches.

use std::time::Instant;

use nalgebra::Point2;

use crate::camera::{CameraIntrinsics, Homography, Pose};
use crate::error::{Error, Result};
use crate::features::Keypoint;
use crate::geometry::{homography_dlt, pose_from_corners, ransac_homography, PnpParams, PointPair, RansacParams};
use crate::image::GrayImage;
use crate::target::TargetTemplate;

pub const PATCH_SIZE: usize = 5;
pub const PATCH_RADIUS: i64 = (PATCH_SIZE / 2) as i64;
pub const MAX_TRACKED_POINTS: usize = 25;

pub type Patch = [u8; PATCH_SIZE * PATCH_SIZE];

/// Image resolution at which patches are cut and searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchResolution {
    Half,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingParams {
    pub max_points: usize,
    /// Side of the square search window; offsets run `-len/2 ..= len/2 - 1`.
    pub window_len: usize,
    pub ncc_accept: f64,
    pub match_resolution: MatchResolution,
    /// Fit the tracking homography with RANSAC instead of plain DLT.
    pub use_ransac: bool,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            max_points: MAX_TRACKED_POINTS,
            window_len: 16,
            ncc_accept: 0.7,
            match_resolution: MatchResolution::Half,
            use_ransac: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityParams {
    /// Allowed frame-to-frame translation as a fraction of the target's major dimension.
    pub translation_ratio: f64,
    pub min_tracked_points: usize,
    /// Optional frame-to-frame rotation bound in degrees.
    pub max_rotation_deg: Option<f64>,
}

impl Default for ValidityParams {
    fn default() -> Self {
        Self { translation_ratio: 5.0 / 29.7, min_tracked_points: 8, max_rotation_deg: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedPoint {
    pub template_point: Point2<f64>,
    pub last_frame_point: Point2<f64>,
    pub patch: Patch,
    pub alive: bool,
}

impl TrackedPoint {
    pub fn new(template_point: Point2<f64>, frame_point: Point2<f64>) -> Self {
        Self { template_point, last_frame_point: frame_point, patch: [0; 25], alive: true }
    }
}

/// Output of one tracking step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub homography: Homography,
    pub pose: Pose,
    pub survivors: usize,
    pub warp_us: u64,
    pub ncc_us: u64,
    pub homography_us: u64,
    pub pnp_us: u64,
}

/// Inverse-mapping warp of `template` by `h` into an `out_width x out_height`
/// canvas with bilinear sampling. Pixels mapping outside the template are 0.
pub fn warp_template(template: &GrayImage, h: &Homography, out_width: usize, out_height: usize) -> Result<GrayImage> {
    let mut out = GrayImage::filled(out_width, out_height, 0);
    warp_into(template, h, &mut out)?;
    Ok(out)
}

/// Writes the warp of `template` into `canvas`, leaving pixels that map
/// outside the template untouched.
pub fn warp_into(template: &GrayImage, h: &Homography, canvas: &mut GrayImage) -> Result<()> {
    let inv = h.inverse()?;
    let m = inv.matrix();
    let w = canvas.width();
    let data = canvas.data_mut();
    for (y, row) in data.chunks_exact_mut(w).enumerate() {
        let yf = y as f64;
        let bx = m[(0, 1)] * yf + m[(0, 2)];
        let by = m[(1, 1)] * yf + m[(1, 2)];
        let bz = m[(2, 1)] * yf + m[(2, 2)];
        for (x, px) in row.iter_mut().enumerate() {
            let xf = x as f64;
            let z = m[(2, 0)] * xf + bz;
            if z.abs() < 1e-12 {
                continue;
            }
            let u = (m[(0, 0)] * xf + bx) / z;
            let v = (m[(1, 0)] * xf + by) / z;
            if let Some(s) = template.sample_bilinear(u, v) {
                *px = (s + 0.5).floor() as u8;
            }
        }
    }
    Ok(())
}

/// Halves the resolution: each output pixel is the round-half-up mean of a
/// 2x2 block. An odd trailing row or column is dropped.
pub fn downsample2(image: &GrayImage) -> Result<GrayImage> {
    if image.width() < 2 || image.height() < 2 {
        return Err(Error::InvalidInput(format!(
            "downsample needs at least 2x2, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    let (w, h) = (image.width() / 2, image.height() / 2);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let r0 = image.row(2 * y);
        let r1 = image.row(2 * y + 1);
        for x in 0..w {
            let s = r0[2 * x] as u32 + r0[2 * x + 1] as u32 + r1[2 * x] as u32 + r1[2 * x + 1] as u32;
            data.push(((s + 2) / 4) as u8);
        }
    }
    GrayImage::new(w, h, data)
}

/// Indices of the inlier keypoints with the highest response, at most `cap`.
pub fn select_tracking_points(
    keypoints: &[Keypoint],
    inlier_mask: &[bool],
    cap: usize,
    min_points: usize,
) -> Result<Vec<usize>> {
    if keypoints.len() != inlier_mask.len() {
        return Err(Error::InvalidInput("mask length differs from keypoint count".into()));
    }
    let mut idx: Vec<usize> = (0..keypoints.len()).filter(|&i| inlier_mask[i]).collect();
    if idx.len() < min_points {
        return Err(Error::TooFewPoints { found: idx.len(), required: min_points });
    }
    idx.sort_by(|&a, &b| keypoints[b].response.total_cmp(&keypoints[a].response).then(a.cmp(&b)));
    idx.truncate(cap);
    Ok(idx)
}

/// The 5x5 window centered at `round(center)`, row-major, or `None` if it
/// does not fit inside the image.
pub fn extract_patch(image: &GrayImage, center: &Point2<f64>) -> Option<Patch> {
    let cx = center.x.round();
    let cy = center.y.round();
    if !cx.is_finite() || !cy.is_finite() {
        return None;
    }
    patch_at(image, cx as i64, cy as i64)
}

fn patch_at(image: &GrayImage, cx: i64, cy: i64) -> Option<Patch> {
    let (w, h) = (image.width() as i64, image.height() as i64);
    if cx - PATCH_RADIUS < 0 || cy - PATCH_RADIUS < 0 || cx + PATCH_RADIUS >= w || cy + PATCH_RADIUS >= h {
        return None;
    }
    let mut out = [0u8; 25];
    for (r, dy) in (-PATCH_RADIUS..=PATCH_RADIUS).enumerate() {
        let row = image.row((cy + dy) as usize);
        let x0 = (cx - PATCH_RADIUS) as usize;
        out[r * PATCH_SIZE..(r + 1) * PATCH_SIZE].copy_from_slice(&row[x0..x0 + PATCH_SIZE]);
    }
    Some(out)
}

/// Zero-mean normalized cross-correlation in `[-1, 1]`; 0 when either side
/// has zero variance.
pub fn ncc(a: &[u8], b: &[u8]) -> f64 {
    assert_eq!(a.len(), b.len(), "ncc operands differ in length");
    let n = a.len() as i64;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0i64, 0i64, 0i64, 0i64, 0i64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as i64, y as i64);
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    let va = n * saa - sa * sa;
    let vb = n * sbb - sb * sb;
    if va == 0 || vb == 0 {
        return 0.0;
    }
    let cov = n * sab - sa * sb;
    (cov as f64 / ((va as f64) * (vb as f64)).sqrt()).clamp(-1.0, 1.0)
}

/// Exhaustive NCC search over integer offsets `-len/2 ..= len/2 - 1` around
/// `round(center)`. Ties prefer the smaller offset, then row-major order.
/// `None` if no window position fits inside the frame.
pub fn ncc_search(frame: &GrayImage, patch: &Patch, center: &Point2<f64>, window_len: usize) -> Option<(Point2<f64>, f64)> {
    let cx = center.x.round();
    let cy = center.y.round();
    if !cx.is_finite() || !cy.is_finite() || window_len == 0 {
        return None;
    }
    let (cx, cy) = (cx as i64, cy as i64);
    let half = (window_len / 2) as i64;
    let lo = -half;
    let hi = window_len as i64 - half - 1;
    let mut best: Option<(i64, i64, f64)> = None;
    for dy in lo..=hi {
        for dx in lo..=hi {
            let Some(window) = patch_at(frame, cx + dx, cy + dy) else {
                continue;
            };
            let score = ncc(patch, &window);
            let better = match best {
                None => true,
                Some((bx, by, bs)) => score > bs || (score == bs && dx * dx + dy * dy < bx * bx + by * by),
            };
            if better {
                best = Some((dx, dy, score));
            }
        }
    }
    best.map(|(dx, dy, s)| (Point2::new((cx + dx) as f64, (cy + dy) as f64), s))
}

/// Translation (and optional rotation) gate between consecutive poses.
pub fn validate_pose(prev: &Pose, new: &Pose, target: &TargetTemplate, params: &ValidityParams) -> bool {
    let limit = params.translation_ratio * target.major_dimension();
    if (new.t - prev.t).norm() > limit {
        return false;
    }
    if let Some(max_deg) = params.max_rotation_deg {
        if prev.rotation_angle_to(new).to_degrees() > max_deg {
            return false;
        }
    }
    true
}

fn micros(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}

/// One tracking step. Updates `tracked` in place (patches refreshed, `alive`
/// and `last_frame_point` set) and returns the new homography and pose.
#[allow(clippy::too_many_arguments)]
pub fn track_frame(
    prev_h: &Homography,
    prev_pose: Option<&Pose>,
    tracked: &mut [TrackedPoint],
    frame: &GrayImage,
    k: &CameraIntrinsics,
    template: &TargetTemplate,
    params: &TrackingParams,
    ransac: &RansacParams,
    pnp: &PnpParams,
) -> Result<TrackResult> {
    let start = Instant::now();
    let warped = warp_template(&template.image, prev_h, frame.width(), frame.height())?;
    let (warp_s, frame_s, scale, offset) = match params.match_resolution {
        MatchResolution::Half => (downsample2(&warped)?, downsample2(frame)?, 2.0, 0.5),
        MatchResolution::Full => (warped, frame.clone(), 1.0, 0.0),
    };
    let warp_us = micros(start);

    let start = Instant::now();
    let mut pairs: Vec<PointPair> = Vec::with_capacity(tracked.len());
    for tp in tracked.iter_mut() {
        tp.alive = false;
        let Ok(pred) = prev_h.apply(&tp.template_point) else {
            continue;
        };
        // Full-res pixel 2j + 0.5 is the center of half-res pixel j.
        let pred_s = Point2::new((pred.x - offset) / scale, (pred.y - offset) / scale);
        let center = Point2::new(pred_s.x.round(), pred_s.y.round());
        let Some(patch) = extract_patch(&warp_s, &center) else {
            continue;
        };
        tp.patch = patch;
        let Some((found, score)) = ncc_search(&frame_s, &patch, &center, params.window_len) else {
            continue;
        };
        if score < params.ncc_accept {
            continue;
        }
        let matched = pred + (found - center) * scale;
        tp.last_frame_point = matched;
        tp.alive = true;
        pairs.push((tp.template_point, matched));
    }
    let ncc_us = micros(start);

    let start = Instant::now();
    if pairs.len() < 4 {
        return Err(Error::TrackingLost);
    }
    let homography = if params.use_ransac {
        ransac_homography(&pairs, ransac, 0).map(|(h, _)| h)
    } else {
        homography_dlt(&pairs)
    }
    .map_err(|_| Error::TrackingLost)?;
    let homography_us = micros(start);

    let start = Instant::now();
    let pose = pose_from_corners(&homography, &template.corners_2d, &template.corners_3d, k, prev_pose, pnp)
        .map_err(|_| Error::TrackingLost)?;
    let pnp_us = micros(start);

    Ok(TrackResult { homography, pose, survivors: pairs.len(), warp_us, ncc_us, homography_us, pnp_us })
}
