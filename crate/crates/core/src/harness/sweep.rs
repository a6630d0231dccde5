//! Minimum-elevation robustness sweep.

use crate::camera::CameraIntrinsics;
use crate::error::Result;
use crate::pipeline::{Tracker, TrackerConfig};
use crate::target::TargetTemplate;

use super::metrics::corner_error;
use super::scene::{orbit_pose, render_view, Background};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
    pub seeds: u64,
    pub radius: f64,
    pub azimuth_deg: f64,
    /// A detection counts only if its corner error is below this.
    pub max_corner_err_px: f64,
    pub size: (usize, usize),
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            start_deg: 90.0,
            stop_deg: 5.0,
            step_deg: 1.0,
            seeds: 5,
            radius: 0.3,
            azimuth_deg: 0.0,
            max_corner_err_px: 10.0,
            size: (320, 240),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Smallest elevation such that it and every tested elevation above it
    /// succeeded on all seeds; `None` if 90 degrees already fails.
    pub min_angle_deg: Option<f64>,
    /// `(elevation, successes)` for each tested elevation, descending.
    pub tested: Vec<(f64, u64)>,
}

/// Runs one detection on a noiseless frame; true if it finds a pose close to
/// ground truth.
pub fn detect_at(
    config: &TrackerConfig,
    template: &TargetTemplate,
    k: &CameraIntrinsics,
    params: &SweepParams,
    elevation_deg: f64,
    seed: u64,
) -> Result<bool> {
    let pose = orbit_pose(params.radius, elevation_deg, params.azimuth_deg);
    let frame = render_view(template, &pose, k, params.size, Background::Texture(seed))?;
    let mut cfg = *config;
    cfg.ransac_seed = config.ransac_seed.wrapping_add(seed);
    let mut tracker = Tracker::new(template.clone(), *k, cfg)?;
    let res = tracker.process_frame(&frame)?;
    Ok(res
        .pose
        .is_some_and(|est| corner_error(template, k, &est, &pose) < params.max_corner_err_px))
}

pub fn sweep_min_angle_with(
    config: &TrackerConfig,
    template: &TargetTemplate,
    k: &CameraIntrinsics,
    params: &SweepParams,
) -> Result<SweepOutcome> {
    let mut outcome = SweepOutcome { min_angle_deg: None, tested: Vec::new() };
    let steps = ((params.start_deg - params.stop_deg) / params.step_deg).round() as usize;
    for i in 0..=steps {
        let el = params.start_deg - i as f64 * params.step_deg;
        let mut ok = 0;
        for seed in 0..params.seeds {
            if detect_at(config, template, k, params, el, seed)? {
                ok += 1;
            }
        }
        outcome.tested.push((el, ok));
        if ok < params.seeds {
            break;
        }
        outcome.min_angle_deg = Some(el);
    }
    Ok(outcome)
}

/// Descends from 90 to 5 degrees in 1 degree steps and returns the lowest
/// elevation reached before detection first fails on any of 5 seeds.
pub fn sweep_min_angle(config: &TrackerConfig, template: &TargetTemplate, k: &CameraIntrinsics) -> Result<Option<f64>> {
    Ok(sweep_min_angle_with(config, template, k, &SweepParams::default())?.min_angle_deg)
}
