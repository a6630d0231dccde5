//! Synthetic ground-truth sequences, evaluation metrics and the elevation sweep.

mod metrics;
mod scene;
mod sweep;

pub use metrics::{
    corner_error, evaluate, evaluate_with_elevations, poses_from_csv, poses_to_csv, project_corners, FrameRow,
    SequenceMetrics, TimingSummary, METRICS_HEADER, POSES_HEADER,
};
pub use scene::{
    add_noise, background_texture, default_target_image, ground_truth_homography, orbit_pose, render_sequence,
    render_view, textured_target, Background, Orbit, Sequence, Trajectory, TrajectorySpec, DEFAULT_TARGET_SIZE,
};
pub use sweep::{detect_at, sweep_min_angle, sweep_min_angle_with, SweepOutcome, SweepParams};

use crate::error::Result;
use crate::features::FeatureConfig;
use crate::target::{TargetTemplate, DIN_A4};

/// Default synthetic target as an A4-sized template.
pub fn default_template(config: &FeatureConfig) -> Result<TargetTemplate> {
    TargetTemplate::new(default_target_image(), DIN_A4.0, DIN_A4.1, config)
}
