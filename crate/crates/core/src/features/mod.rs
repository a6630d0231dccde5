//! Oriented FAST keypoints with steered binary descriptors.

pub mod fast;
pub mod orb;
pub mod pattern;

pub use fast::detect_fast;
pub use orb::{describe, orientation, Orientation};

use crate::error::{Error, Result};
use crate::image::{box_blur5, build_pyramid, GrayImage};

/// Interest point. Coordinates are level-0 pixels once returned from
/// [`detect_and_describe`]; `octave` records the pyramid level it was found on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub response: f32,
    pub angle: f64,
    pub octave: u8,
}

/// Packed 256-bit binary descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Descriptor(pub [u64; 4]);

impl Descriptor {
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn distance(&self, other: &Descriptor) -> u32 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a ^ b).count_ones()).sum()
    }

    pub fn not(&self) -> Descriptor {
        Descriptor(self.0.map(|w| !w))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub fast_threshold: u8,
    pub max_features: usize,
    pub min_features: usize,
    pub pyramid_levels: usize,
    pub scale_factor: f64,
    pub orientation_radius: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            fast_threshold: 20,
            max_features: 500,
            min_features: 8,
            pyramid_levels: 4,
            scale_factor: 2.0,
            orientation_radius: orb::ORIENTATION_RADIUS,
        }
    }
}

/// Parallel keypoint and descriptor lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Features {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
}

impl Features {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

/// Detects FAST corners on every pyramid level, orients and describes them,
/// and returns the strongest `max_features` in level-0 coordinates.
pub fn detect_and_describe(image: &GrayImage, config: &FeatureConfig) -> Result<Features> {
    let pyramid = build_pyramid(image, config.pyramid_levels.max(1), config.scale_factor)?;
    // Pattern reach plus smoothing margin, or the orientation disc.
    let border = (pattern::PATTERN_RADIUS as usize + 2).max(config.orientation_radius) + 1;

    let areas: Vec<f64> = pyramid
        .levels
        .iter()
        .map(|l| (l.width() * l.height()) as f64)
        .collect();
    let total_area: f64 = areas.iter().sum();
    let mut budgets: Vec<usize> = areas
        .iter()
        .map(|a| (config.max_features as f64 * a / total_area).floor() as usize)
        .collect();
    budgets[0] += config.max_features - budgets.iter().sum::<usize>();

    let mut found: Vec<(Keypoint, Descriptor)> = Vec::new();
    for (level, img) in pyramid.levels.iter().enumerate() {
        let kps = fast::detect_with_border(img, config.fast_threshold.max(1), budgets[level], border, level as u8);
        if kps.is_empty() {
            continue;
        }
        let smoothed = box_blur5(img);
        let scale = pyramid.scale(level);
        for mut kp in kps {
            kp.angle = orb::orientation(img, &kp, config.orientation_radius).angle;
            let desc = orb::describe_smoothed(&smoothed, &kp);
            kp.x = (kp.x + 0.5) * scale - 0.5;
            kp.y = (kp.y + 0.5) * scale - 0.5;
            found.push((kp, desc));
        }
    }
    found.sort_by(|a, b| b.0.response.total_cmp(&a.0.response));
    found.truncate(config.max_features);

    if found.len() < config.min_features {
        return Err(Error::TooFewFeatures { found: found.len(), required: config.min_features });
    }
    let (keypoints, descriptors) = found.into_iter().unzip();
    Ok(Features { keypoints, descriptors })
}
