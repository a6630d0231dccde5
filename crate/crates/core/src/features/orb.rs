//! Intensity-centroid orientation and steered binary descriptors.

use std::f64::consts::TAU;

use crate::image::GrayImage;

use super::pattern::PATTERN;
use super::{Descriptor, Keypoint};

/// Radius of the default orientation patch.
pub const ORIENTATION_RADIUS: usize = 15;

/// Orientation estimate; `confident` is false when both first moments vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub angle: f64,
    pub confident: bool,
}

/// First-order moments `(m10, m01)` over the disc of `radius` centered at the
/// rounded keypoint position, with y pointing down.
pub fn moments(image: &GrayImage, kp: &Keypoint, radius: usize) -> (i64, i64) {
    let cx = kp.x.round() as i64;
    let cy = kp.y.round() as i64;
    let r = radius as i64;
    let mut m10 = 0i64;
    let mut m01 = 0i64;
    for dy in -r..=r {
        let row = image.row((cy + dy) as usize);
        // Half-width of the disc on this row.
        let half = ((r * r - dy * dy) as f64).sqrt().floor() as i64;
        for dx in -half..=half {
            let v = row[(cx + dx) as usize] as i64;
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    (m10, m01)
}

/// Patch orientation `atan2(m01, m10)` in `[0, 2pi)`. The disc of `radius`
/// around the keypoint must lie inside the image.
pub fn orientation(image: &GrayImage, kp: &Keypoint, radius: usize) -> Orientation {
    let (m10, m01) = moments(image, kp, radius);
    if m10 == 0 && m01 == 0 {
        return Orientation { angle: 0.0, confident: false };
    }
    let mut angle = (m01 as f64).atan2(m10 as f64);
    if angle < 0.0 {
        angle += TAU;
    }
    if angle >= TAU {
        angle -= TAU;
    }
    Orientation { angle, confident: true }
}

/// Pattern offsets rotated by `angle`, rounded to the nearest pixel.
pub(crate) fn steered_pattern(angle: f64) -> [[i32; 4]; 256] {
    let (s, c) = angle.sin_cos();
    let rot = |x: i8, y: i8| {
        let (x, y) = (x as f64, y as f64);
        ((c * x - s * y).round() as i32, (s * x + c * y).round() as i32)
    };
    let mut out = [[0i32; 4]; 256];
    for (o, p) in out.iter_mut().zip(PATTERN.iter()) {
        let (px, py) = rot(p[0], p[1]);
        let (qx, qy) = rot(p[2], p[3]);
        *o = [px, py, qx, qy];
    }
    out
}

fn describe_by(kp: &Keypoint, sample: impl Fn(i64, i64) -> u8) -> Descriptor {
    let cx = kp.x.round() as i64;
    let cy = kp.y.round() as i64;
    let pattern = steered_pattern(kp.angle);
    let mut bits = [0u64; 4];
    for (i, p) in pattern.iter().enumerate() {
        let a = sample(cx + p[0] as i64, cy + p[1] as i64);
        let b = sample(cx + p[2] as i64, cy + p[3] as i64);
        if a < b {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    Descriptor(bits)
}

/// Descriptor from an image already smoothed with [`crate::image::box_blur5`].
pub(crate) fn describe_smoothed(smoothed: &GrayImage, kp: &Keypoint) -> Descriptor {
    describe_by(kp, |x, y| smoothed.get(x as usize, y as usize))
}

/// 256-bit steered BRIEF descriptor. Bit `i` is set iff the 5x5-box-smoothed
/// intensity at the first point of pair `i` is below that at the second,
/// with the pattern rotated by `kp.angle`. The 31x31 patch plus a 2 px
/// smoothing margin must lie inside the image.
pub fn describe(image: &GrayImage, kp: &Keypoint) -> Descriptor {
    describe_by(kp, |x, y| {
        let mut s = 0u32;
        for yy in y - 2..=y + 2 {
            for xx in x - 2..=x + 2 {
                s += image.get(xx as usize, yy as usize) as u32;
            }
        }
        ((s + 12) / 25) as u8
    })
}
