//! Detection/tracking state machine.
//!
//! A tracker starts in [`Phase::Detecting`]. A frame whose detection yields a
//! pose switches it to [`Phase::Tracking`]; a tracking frame that loses the
//! target or fails the validity gate switches it back, and detection runs on
//! the following frame.

mod config;

pub use config::{PnpPoints, TrackerConfig};

use std::time::Instant;

use nalgebra::{Point2, Point3};

use crate::camera::{CameraIntrinsics, Homography, Pose};
use crate::error::{Error, Result};
use crate::features::detect_and_describe;
use crate::geometry::{pnp_iterative, pose_from_corners, ransac_homography, transform_points, PointPair};
use crate::image::GrayImage;
use crate::matching::{filter_matches, match_nn};
use crate::target::TargetTemplate;
use crate::tracking::{select_tracking_points, track_frame, validate_pose, TrackedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Detecting,
    Tracking,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Detecting => "detecting",
            Phase::Tracking => "tracking",
        }
    }
}

/// Per-stage wall time in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageTimings {
    pub feature_us: u64,
    pub match_us: u64,
    pub ransac_us: u64,
    pub pnp_us: u64,
    pub warp_us: u64,
    pub ncc_us: u64,
    pub total_us: u64,
}

impl StageTimings {
    /// Sum of the individual stages (excludes bookkeeping counted in `total_us`).
    pub fn stage_sum(&self) -> u64 {
        self.feature_us + self.match_us + self.ransac_us + self.pnp_us + self.warp_us + self.ncc_us
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub phase_executed: Phase,
    pub pose: Option<Pose>,
    pub homography: Option<Homography>,
    pub inlier_count: usize,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub phase: Phase,
    pub last_h: Option<Homography>,
    pub last_pose: Option<Pose>,
    pub tracked_points: Vec<TrackedPoint>,
    pub consecutive_detection_frames: usize,
}

impl TrackerState {
    fn detecting(consecutive_detection_frames: usize) -> Self {
        Self {
            phase: Phase::Detecting,
            last_h: None,
            last_pose: None,
            tracked_points: Vec::new(),
            consecutive_detection_frames,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tracker {
    template: TargetTemplate,
    k: CameraIntrinsics,
    config: TrackerConfig,
    state: TrackerState,
    frame_size: Option<(usize, usize)>,
    frame_index: u64,
}

fn micros(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}

/// The transferred target outline must be a convex quadrilateral in front of
/// the camera; anything else is a spurious homography.
fn plausible_outline(corners: &[Point2<f64>]) -> bool {
    let n = corners.len();
    let mut sign = 0.0;
    for i in 0..n {
        let a = corners[i];
        let b = corners[(i + 1) % n];
        let c = corners[(i + 2) % n];
        let cross = (b - a).perp(&(c - b));
        if !cross.is_finite() || cross.abs() < 1e-9 {
            return false;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

impl Tracker {
    /// Creates a tracker in the detecting phase. The template must carry at
    /// least `config.features.min_features` features.
    pub fn new(template: TargetTemplate, k: CameraIntrinsics, config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        let required = config.features.min_features.max(4);
        if template.features.len() < required {
            return Err(Error::TooFewFeatures { found: template.features.len(), required });
        }
        Ok(Self {
            template,
            k,
            config,
            state: TrackerState::detecting(0),
            frame_size: None,
            frame_index: 0,
        })
    }

    /// Pins the accepted frame size; otherwise the first frame sets it.
    pub fn with_frame_size(mut self, width: usize, height: usize) -> Self {
        self.frame_size = Some((width, height));
        self
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn template(&self) -> &TargetTemplate {
        &self.template
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.k
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn reset(&mut self) {
        self.state = TrackerState::detecting(0);
    }

    pub fn process_frame(&mut self, frame: &GrayImage) -> Result<FrameResult> {
        let dims = (frame.width(), frame.height());
        match self.frame_size {
            Some(expected) if expected != dims => {
                return Err(Error::InvalidInput(format!(
                    "frame is {}x{}, tracker expects {}x{}",
                    dims.0, dims.1, expected.0, expected.1
                )));
            }
            Some(_) => {}
            None => self.frame_size = Some(dims),
        }
        let start = Instant::now();
        let seed = self.config.ransac_seed.wrapping_add(self.frame_index);
        self.frame_index += 1;
        let mut result = match self.state.phase {
            Phase::Detecting => self.detect(frame, seed),
            Phase::Tracking => self.track(frame),
        };
        result.timings.total_us = micros(start);
        debug_assert!(result.pose.is_some() == result.homography.is_some());
        Ok(result)
    }

    fn detect(&mut self, frame: &GrayImage, seed: u64) -> FrameResult {
        let mut timings = StageTimings::default();
        let mut result = FrameResult {
            phase_executed: Phase::Detecting,
            pose: None,
            homography: None,
            inlier_count: 0,
            timings,
        };
        self.state.consecutive_detection_frames += 1;
        let cfg = &self.config;

        let start = Instant::now();
        let features = detect_and_describe(frame, &cfg.features);
        timings.feature_us = micros(start);
        let Ok(features) = features else {
            result.timings = timings;
            return result;
        };

        let start = Instant::now();
        let matches = match_nn(&features.descriptors, &self.template.features.descriptors)
            .map(|m| filter_matches(&m, cfg.match_filter_floor))
            .unwrap_or_default();
        timings.match_us = micros(start);
        if matches.len() < 4 {
            result.timings = timings;
            return result;
        }

        let start = Instant::now();
        let tkps = &self.template.features.keypoints;
        let pairs: Vec<PointPair> = matches
            .iter()
            .map(|m| {
                let t = &tkps[m.train_index];
                let f = &features.keypoints[m.query_index];
                (Point2::new(t.x, t.y), Point2::new(f.x, f.y))
            })
            .collect();
        let estimate = ransac_homography(&pairs, &cfg.ransac, seed);
        timings.ransac_us = micros(start);
        let Ok((h, mask)) = estimate else {
            result.timings = timings;
            return result;
        };
        let inliers = mask.iter().filter(|&&m| m).count();
        result.inlier_count = inliers;

        let start = Instant::now();
        let pose = self.pose_for(&h, &pairs, &mask, None);
        timings.pnp_us = micros(start);
        result.timings = timings;
        let Some(pose) = pose else {
            return result;
        };
        result.pose = Some(pose);
        result.homography = Some(h);

        // Tracked points come from the strongest inlier frame keypoints, one
        // per template keypoint.
        let frame_kps: Vec<_> = matches.iter().map(|m| features.keypoints[m.query_index]).collect();
        let ranked = select_tracking_points(&frame_kps, &mask, usize::MAX, 0).unwrap_or_default();
        let mut used = std::collections::HashSet::new();
        let tracked: Vec<TrackedPoint> = ranked
            .into_iter()
            .filter(|&i| used.insert(matches[i].train_index))
            .take(cfg.tracking.max_points)
            .map(|i| TrackedPoint::new(pairs[i].0, pairs[i].1))
            .collect();
        if tracked.len() >= cfg.validity.min_tracked_points.max(4) {
            self.state = TrackerState {
                phase: Phase::Tracking,
                last_h: Some(h),
                last_pose: Some(pose),
                tracked_points: tracked,
                consecutive_detection_frames: 0,
            };
        }
        result
    }

    fn pose_for(&self, h: &Homography, pairs: &[PointPair], mask: &[bool], initial: Option<&Pose>) -> Option<Pose> {
        let outline = transform_points(h, &self.template.corners_2d).ok()?;
        if !plausible_outline(&outline) {
            return None;
        }
        let pose = match self.config.pnp_points {
            PnpPoints::Corners => pose_from_corners(
                h,
                &self.template.corners_2d,
                &self.template.corners_3d,
                &self.k,
                initial,
                &self.config.pnp,
            ),
            PnpPoints::Inliers => {
                let (object, image): (Vec<Point3<f64>>, Vec<Point2<f64>>) = pairs
                    .iter()
                    .zip(mask)
                    .filter(|(_, &m)| m)
                    .map(|(p, _)| (self.template.plane_point(&p.0), p.1))
                    .unzip();
                pnp_iterative(&object, &image, &self.k, initial, &self.config.pnp)
            }
        }
        .ok()?;
        pose.is_valid().then_some(pose)
    }

    fn track(&mut self, frame: &GrayImage) -> FrameResult {
        let mut result = FrameResult {
            phase_executed: Phase::Tracking,
            pose: None,
            homography: None,
            inlier_count: 0,
            timings: StageTimings::default(),
        };
        let (Some(prev_h), Some(prev_pose)) = (self.state.last_h, self.state.last_pose) else {
            self.state = TrackerState::detecting(0);
            return result;
        };
        let cfg = self.config;
        let outcome = track_frame(
            &prev_h,
            Some(&prev_pose),
            &mut self.state.tracked_points,
            frame,
            &self.k,
            &self.template,
            &cfg.tracking,
            &cfg.ransac,
            &cfg.pnp,
        );
        let tr = match outcome {
            Ok(tr) => tr,
            Err(_) => {
                self.state = TrackerState::detecting(0);
                return result;
            }
        };
        result.timings.warp_us = tr.warp_us;
        result.timings.ncc_us = tr.ncc_us;
        result.timings.ransac_us = tr.homography_us;
        result.timings.pnp_us = tr.pnp_us;
        result.inlier_count = tr.survivors;

        let outline_ok = transform_points(&tr.homography, &self.template.corners_2d)
            .map(|c| plausible_outline(&c))
            .unwrap_or(false);
        if !outline_ok || !tr.pose.is_valid() || !validate_pose(&prev_pose, &tr.pose, &self.template, &cfg.validity) {
            self.state = TrackerState::detecting(0);
            return result;
        }
        result.pose = Some(tr.pose);
        result.homography = Some(tr.homography);
        if tr.survivors < cfg.validity.min_tracked_points {
            // Pose stands for this frame, but too few points remain to keep tracking.
            self.state = TrackerState::detecting(0);
        } else {
            self.state.last_h = Some(tr.homography);
            self.state.last_pose = Some(tr.pose);
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outline_convexity() {
        let sq = [Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), Point2::new(10.0, 10.0), Point2::new(0.0, 10.0)];
        assert!(plausible_outline(&sq));
        let bow = [Point2::new(0.0, 0.0), Point2::new(10.0, 10.0), Point2::new(10.0, 0.0), Point2::new(0.0, 10.0)];
        assert!(!plausible_outline(&bow));
        let flat = [Point2::new(0.0, 0.0), Point2::new(5.0, 0.0), Point2::new(10.0, 0.0), Point2::new(0.0, 10.0)];
        assert!(!plausible_outline(&flat));
    }
}
