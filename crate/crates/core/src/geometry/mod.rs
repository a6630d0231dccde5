//! Homography estimation, corner transfer and planar pose recovery.

pub mod dlt;
pub mod pnp;
pub mod ransac;

pub use dlt::homography_dlt;
pub use pnp::pnp_iterative;
pub use ransac::ransac_homography;

use nalgebra::{Point2, Point3};

use crate::camera::{CameraIntrinsics, Homography, Pose};
use crate::error::{Error, Result};

/// `(source, destination)` correspondence, e.g. template px to frame px.
pub type PointPair = (Point2<f64>, Point2<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub max_iterations: usize,
    /// Symmetric transfer error bound, pixels.
    pub inlier_threshold: f64,
    pub confidence: f64,
    pub min_inliers: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self { max_iterations: 500, inlier_threshold: 3.0, confidence: 0.995, min_inliers: 8 }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0)
            || !(self.inlier_threshold > 0.0)
            || self.max_iterations == 0
        {
            return Err(Error::InvalidInput(format!("bad ransac parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpParams {
    pub max_iterations: usize,
    /// Mean per-point reprojection change, pixels, below which iteration stops.
    pub convergence_epsilon: f64,
    pub damping_initial: f64,
}

impl Default for PnpParams {
    fn default() -> Self {
        Self { max_iterations: 20, convergence_epsilon: 1e-6, damping_initial: 1e-3 }
    }
}

impl PnpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.convergence_epsilon > 0.0) || !(self.damping_initial > 0.0) {
            return Err(Error::InvalidInput(format!("bad pnp parameters {self:?}")));
        }
        Ok(())
    }
}

/// Applies `h` to every point.
pub fn transform_points(h: &Homography, points: &[Point2<f64>]) -> Result<Vec<Point2<f64>>> {
    points.iter().map(|p| h.apply(p)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReprojectionError {
    pub per_point: Vec<f64>,
    pub mean: f64,
}

/// Pixel distance between each projected object point and its measurement.
pub fn reprojection_error(
    pose: &Pose,
    k: &CameraIntrinsics,
    object: &[Point3<f64>],
    image: &[Point2<f64>],
) -> Result<ReprojectionError> {
    if object.len() != image.len() {
        return Err(Error::InvalidInput("object and image point counts differ".into()));
    }
    let per_point = object
        .iter()
        .zip(image)
        .map(|(x, m)| {
            let p = k.project(&pose.transform(x)).ok_or(Error::BehindCamera)?;
            Ok((p - m).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = if per_point.is_empty() { 0.0 } else { per_point.iter().sum::<f64>() / per_point.len() as f64 };
    Ok(ReprojectionError { per_point, mean })
}

/// Transfers the template corners through `h` and solves PnP against their
/// metric positions.
pub fn pose_from_corners(
    h: &Homography,
    corners_2d: &[Point2<f64>; 4],
    corners_3d: &[Point3<f64>; 4],
    k: &CameraIntrinsics,
    initial: Option<&Pose>,
    params: &PnpParams,
) -> Result<Pose> {
    let image = transform_points(h, corners_2d)?;
    pnp_iterative(corners_3d, &image, k, initial, params)
}
