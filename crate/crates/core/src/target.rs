use nalgebra::{Matrix3, Point2, Point3};

use crate::error::{Error, Result};
use crate::features::{detect_and_describe, FeatureConfig, Features};
use crate::image::GrayImage;

/// Width and height of a DIN A4 sheet in meters (landscape).
pub const DIN_A4: (f64, f64) = (0.297, 0.210);

/// A planar target: its image, precomputed features and metric extent.
///
/// Template pixel centers sit at integer coordinates, so the image spans
/// `[-0.5, w - 0.5] x [-0.5, h - 0.5]`. The target plane is `z = 0` with its
/// origin at the image center, x to the right and y down, in meters.
#[derive(Debug, Clone)]
pub struct TargetTemplate {
    pub image: GrayImage,
    pub features: Features,
    pub physical_width: f64,
    pub physical_height: f64,
    pub corners_2d: [Point2<f64>; 4],
    pub corners_3d: [Point3<f64>; 4],
}

impl TargetTemplate {
    pub fn new(image: GrayImage, physical_width: f64, physical_height: f64, config: &FeatureConfig) -> Result<Self> {
        if !(physical_width > 0.0 && physical_height > 0.0) {
            return Err(Error::InvalidInput(format!(
                "physical size must be positive, got {physical_width}x{physical_height}"
            )));
        }
        let features = detect_and_describe(&image, config)?;
        let (w, h) = (image.width() as f64, image.height() as f64);
        let corners_2d = [
            Point2::new(-0.5, -0.5),
            Point2::new(w - 0.5, -0.5),
            Point2::new(w - 0.5, h - 0.5),
            Point2::new(-0.5, h - 0.5),
        ];
        let (hw, hh) = (physical_width / 2.0, physical_height / 2.0);
        let corners_3d = [
            Point3::new(-hw, -hh, 0.0),
            Point3::new(hw, -hh, 0.0),
            Point3::new(hw, hh, 0.0),
            Point3::new(-hw, hh, 0.0),
        ];
        Ok(Self { image, features, physical_width, physical_height, corners_2d, corners_3d })
    }

    /// Affine map from template pixels to plane meters (homogeneous 2D).
    pub fn pixel_to_plane(&self) -> Matrix3<f64> {
        let sx = self.physical_width / self.image.width() as f64;
        let sy = self.physical_height / self.image.height() as f64;
        Matrix3::new(
            sx,
            0.0,
            0.5 * sx - self.physical_width / 2.0,
            0.0,
            sy,
            0.5 * sy - self.physical_height / 2.0,
            0.0,
            0.0,
            1.0,
        )
    }

    pub fn plane_point(&self, p: &Point2<f64>) -> Point3<f64> {
        let a = self.pixel_to_plane();
        Point3::new(a[(0, 0)] * p.x + a[(0, 2)], a[(1, 1)] * p.y + a[(1, 2)], 0.0)
    }

    pub fn major_dimension(&self) -> f64 {
        self.physical_width.max(self.physical_height)
    }
}
