//! FAST-9 segment-test corner detection.

use crate::image::GrayImage;

use super::Keypoint;

/// Bresenham circle of radius 3, clockwise from the top.
pub const RING: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Minimum contiguous arc length.
pub const ARC_LENGTH: usize = 9;

/// Segment-test score at `(x, y)`: the largest sum of absolute differences
/// over any contiguous arc of at least [`ARC_LENGTH`] ring pixels that are all
/// brighter than `center + threshold` or all darker than `center - threshold`.
/// `None` if the pixel is not a corner. The caller guarantees a 3 px margin.
#[inline]
pub fn segment_score(image: &GrayImage, x: usize, y: usize, threshold: u8) -> Option<u32> {
    let w = image.width() as isize;
    let data = image.data();
    let idx = y as isize * w + x as isize;
    let c = data[idx as usize] as i32;
    let t = threshold as i32;
    let hi = c + t;
    let lo = c - t;

    // Any arc of 9 covers at least two of the four compass pixels.
    let compass = [0usize, 4, 8, 12].map(|k| {
        let (dx, dy) = RING[k];
        data[(idx + dy as isize * w + dx as isize) as usize] as i32
    });
    let brighter = compass.iter().filter(|&&v| v > hi).count();
    let darker = compass.iter().filter(|&&v| v < lo).count();
    if brighter < 2 && darker < 2 {
        return None;
    }

    let mut sign = [0i8; 16];
    let mut diff = [0u32; 16];
    for (k, &(dx, dy)) in RING.iter().enumerate() {
        let v = data[(idx + dy as isize * w + dx as isize) as usize] as i32;
        sign[k] = if v > hi {
            1
        } else if v < lo {
            -1
        } else {
            0
        };
        diff[k] = (v - c).unsigned_abs();
    }
    arc_score(&sign, &diff)
}

fn arc_score(sign: &[i8; 16], diff: &[u32; 16]) -> Option<u32> {
    if sign.iter().all(|&s| s != 0 && s == sign[0]) {
        return Some(diff.iter().sum());
    }
    // Start scanning just after a run boundary so no run wraps the origin.
    let start = (0..16).find(|&k| sign[k] != sign[(k + 15) % 16])?;
    let mut best: Option<u32> = None;
    let mut k = 0;
    while k < 16 {
        let s = sign[(start + k) % 16];
        let mut len = 0;
        let mut sum = 0;
        while k < 16 && sign[(start + k) % 16] == s {
            sum += diff[(start + k) % 16];
            len += 1;
            k += 1;
        }
        if s != 0 && len >= ARC_LENGTH {
            best = Some(best.map_or(sum, |b: u32| b.max(sum)));
        }
    }
    best
}

/// Corner score map over the region at least `border` px from every edge.
/// Zero means "not a corner".
pub(crate) fn score_map(image: &GrayImage, threshold: u8, border: usize) -> Vec<u32> {
    let (w, h) = (image.width(), image.height());
    let mut scores = vec![0u32; w * h];
    let border = border.max(3);
    if w <= 2 * border || h <= 2 * border {
        return scores;
    }
    for y in border..h - border {
        for x in border..w - border {
            if let Some(s) = segment_score(image, x, y, threshold) {
                scores[y * w + x] = s;
            }
        }
    }
    scores
}

/// 3x3 non-maximum suppression. Equal scores are resolved in favour of the
/// pixel earlier in raster order.
pub(crate) fn suppress(scores: &[u32], w: usize, h: usize) -> Vec<(usize, usize, u32)> {
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let s = scores[y * w + x];
            if s == 0 {
                continue;
            }
            let i = y * w + x;
            let mut keep = true;
            'nb: for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if j == i {
                        continue;
                    }
                    let o = scores[j];
                    if o > s || (o == s && j < i) {
                        keep = false;
                        break 'nb;
                    }
                }
            }
            if keep {
                out.push((x, y, s));
            }
        }
    }
    out
}

pub(crate) fn detect_with_border(
    image: &GrayImage,
    threshold: u8,
    max_points: usize,
    border: usize,
    octave: u8,
) -> Vec<Keypoint> {
    let scores = score_map(image, threshold, border);
    let mut corners = suppress(&scores, image.width(), image.height());
    // Stable sort keeps raster order among equal responses.
    corners.sort_by(|a, b| b.2.cmp(&a.2));
    corners.truncate(max_points);
    corners
        .into_iter()
        .map(|(x, y, s)| Keypoint {
            x: x as f64,
            y: y as f64,
            response: s as f32,
            angle: 0.0,
            octave,
        })
        .collect()
}

/// FAST-9 corners with 3x3 non-maximum suppression, strongest first.
pub fn detect_fast(image: &GrayImage, threshold: u8, max_points: usize) -> Vec<Keypoint> {
    if image.width() < 7 || image.height() < 7 {
        return Vec::new();
    }
    detect_with_border(image, threshold.max(1), max_points, 3, 0)
}
