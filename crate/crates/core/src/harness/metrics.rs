//! Per-frame evaluation rows, aggregates and CSV output.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{Matrix3, Point2, Vector3};

use crate::camera::{CameraIntrinsics, Pose};
use crate::error::{Error, Result};
use crate::pipeline::{Phase, StageTimings, Tracker, TrackerConfig};
use crate::target::TargetTemplate;

use super::scene::Sequence;

pub const METRICS_HEADER: &str = "frame,phase,pose_found,corner_err_px,rot_err_deg,trans_err_m,\
t_feature_us,t_match_us,t_ransac_us,t_pnp_us,t_warp_us,t_ncc_us,t_total_us";

pub const POSES_HEADER: &str = "frame,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz";

/// One evaluated frame. Errors are `None` when there is no estimate or no
/// ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub frame: usize,
    pub phase: Phase,
    pub pose_found: bool,
    pub has_truth: bool,
    pub corner_err_px: Option<f64>,
    pub rot_err_deg: Option<f64>,
    pub trans_err_m: Option<f64>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TimingSummary {
    pub frames: usize,
    pub mean: [f64; 7],
    pub p95: [f64; 7],
}

impl TimingSummary {
    /// Column order of `mean` and `p95`.
    pub const STAGES: [&'static str; 7] = ["feature", "match", "ransac", "pnp", "warp", "ncc", "stage_sum"];

    pub fn mean_stage_sum(&self) -> f64 {
        self.mean[6]
    }

    fn from_timings(timings: &[StageTimings]) -> Self {
        let mut s = TimingSummary { frames: timings.len(), ..Default::default() };
        if timings.is_empty() {
            return s;
        }
        for (c, slot) in s.mean.iter_mut().enumerate() {
            let mut v: Vec<f64> = timings.iter().map(|t| stage_values(t)[c] as f64).collect();
            *slot = v.iter().sum::<f64>() / v.len() as f64;
            v.sort_by(f64::total_cmp);
            s.p95[c] = percentile(&v, 0.95);
        }
        s
    }
}

fn stage_values(t: &StageTimings) -> [u64; 7] {
    [t.feature_us, t.match_us, t.ransac_us, t.pnp_us, t.warp_us, t.ncc_us, t.stage_sum()]
}

/// Nearest-rank percentile of sorted values.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMetrics {
    pub rows: Vec<FrameRow>,
    pub first_acquisition: Option<usize>,
    /// Pose-found fraction over frames with ground truth after the first acquisition.
    pub pose_found_rate: f64,
    pub mean_corner_err_px: Option<f64>,
    pub mean_rot_err_deg: Option<f64>,
    pub mean_trans_err_m: Option<f64>,
    /// Per loss of ground truth (blackout): visible frames until the pose
    /// came back, counting the first visible frame as 1. `None` if never.
    pub reacquisition_latency: Vec<Option<usize>>,
    pub tracking_to_detecting: usize,
    pub detecting: TimingSummary,
    pub tracking: TimingSummary,
    /// Smallest elevation over frames with a pose, when elevations are known.
    pub min_elevation_deg: Option<f64>,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl SequenceMetrics {
    /// Recomputes every aggregate from the per-frame table.
    pub fn from_rows(rows: Vec<FrameRow>, elevations: Option<&[f64]>) -> Self {
        let first = rows.iter().find(|r| r.pose_found).map(|r| r.frame);
        let after: Vec<&FrameRow> = match first {
            Some(f) => rows.iter().filter(|r| r.frame > f && r.has_truth).collect(),
            None => Vec::new(),
        };
        let pose_found_rate = if after.is_empty() {
            if first.is_some() { 1.0 } else { 0.0 }
        } else {
            after.iter().filter(|r| r.pose_found).count() as f64 / after.len() as f64
        };

        let mut latency = Vec::new();
        let mut i = 0;
        while i < rows.len() {
            if rows[i].has_truth || i == 0 {
                i += 1;
                continue;
            }
            while i < rows.len() && !rows[i].has_truth {
                i += 1;
            }
            let found = rows[i..].iter().position(|r| r.pose_found).map(|p| p + 1);
            latency.push(found);
        }

        let transitions = rows
            .windows(2)
            .filter(|w| w[0].phase == Phase::Tracking && w[1].phase == Phase::Detecting)
            .count();

        let by_phase = |p: Phase| {
            let t: Vec<StageTimings> = rows.iter().filter(|r| r.phase == p).map(|r| r.timings).collect();
            TimingSummary::from_timings(&t)
        };

        let min_elevation_deg = elevations.and_then(|el| {
            rows.iter()
                .filter(|r| r.pose_found && r.frame < el.len())
                .map(|r| el[r.frame])
                .min_by(f64::total_cmp)
        });

        SequenceMetrics {
            first_acquisition: first,
            pose_found_rate,
            mean_corner_err_px: mean(rows.iter().filter_map(|r| r.corner_err_px)),
            mean_rot_err_deg: mean(rows.iter().filter_map(|r| r.rot_err_deg)),
            mean_trans_err_m: mean(rows.iter().filter_map(|r| r.trans_err_m)),
            reacquisition_latency: latency,
            tracking_to_detecting: transitions,
            detecting: by_phase(Phase::Detecting),
            tracking: by_phase(Phase::Tracking),
            min_elevation_deg,
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(METRICS_HEADER);
        s.push('\n');
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
        for r in &self.rows {
            let t = &r.timings;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.frame,
                r.phase.as_str(),
                u8::from(r.pose_found),
                opt(r.corner_err_px),
                opt(r.rot_err_deg),
                opt(r.trans_err_m),
                t.feature_us,
                t.match_us,
                t.ransac_us,
                t.pnp_us,
                t.warp_us,
                t.ncc_us,
                t.total_us
            );
        }
        s
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Mean pixel distance between the target corners projected under two poses.
pub fn corner_error(template: &TargetTemplate, k: &CameraIntrinsics, estimate: &Pose, truth: &Pose) -> f64 {
    let project = |p: &Pose, c| k.project(&p.transform(c));
    let mut sum = 0.0;
    for c in &template.corners_3d {
        match (project(estimate, c), project(truth, c)) {
            (Some(a), Some(b)) => sum += (a - b).norm(),
            _ => return f64::INFINITY,
        }
    }
    sum / template.corners_3d.len() as f64
}

/// Runs a fresh tracker over the sequence and scores it against ground truth.
pub fn evaluate(
    config: &TrackerConfig,
    template: &TargetTemplate,
    k: &CameraIntrinsics,
    sequence: &Sequence,
) -> Result<SequenceMetrics> {
    evaluate_with_elevations(config, template, k, sequence, None)
}

pub fn evaluate_with_elevations(
    config: &TrackerConfig,
    template: &TargetTemplate,
    k: &CameraIntrinsics,
    sequence: &Sequence,
    elevations: Option<&[f64]>,
) -> Result<SequenceMetrics> {
    if sequence.is_empty() {
        return Err(Error::InvalidInput("empty sequence".into()));
    }
    let mut tracker = Tracker::new(template.clone(), *k, *config)?;
    let mut rows = Vec::with_capacity(sequence.len());
    for (i, (frame, truth)) in sequence.frames.iter().zip(&sequence.poses).enumerate() {
        let res = tracker.process_frame(frame)?;
        let (c, r, t) = match (&res.pose, truth) {
            (Some(est), Some(gt)) => (
                Some(corner_error(template, k, est, gt)),
                Some(est.rotation_angle_to(gt).to_degrees()),
                Some((est.t - gt.t).norm()),
            ),
            _ => (None, None, None),
        };
        rows.push(FrameRow {
            frame: i,
            phase: res.phase_executed,
            pose_found: res.pose.is_some(),
            has_truth: truth.is_some(),
            corner_err_px: c,
            rot_err_deg: r,
            trans_err_m: t,
            timings: res.timings,
        });
    }
    Ok(SequenceMetrics::from_rows(rows, elevations))
}

/// `frame,r00..r22,tx,ty,tz`; frames without a pose are omitted.
pub fn poses_to_csv(poses: &[Option<Pose>]) -> String {
    let mut s = String::from(POSES_HEADER);
    s.push('\n');
    for (i, p) in poses.iter().enumerate() {
        let Some(p) = p else { continue };
        let _ = write!(s, "{i}");
        for r in 0..3 {
            for c in 0..3 {
                let _ = write!(s, ",{:.17e}", p.r[(r, c)]);
            }
        }
        let _ = writeln!(s, ",{:.17e},{:.17e},{:.17e}", p.t.x, p.t.y, p.t.z);
    }
    s
}

/// Parses a poses file. Rows may skip frames; the result is indexed by frame.
pub fn poses_from_csv(text: &str) -> Result<Vec<Option<Pose>>> {
    let mut out: Vec<Option<Pose>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let s = line.trim();
        if s.is_empty() || (i == 0 && s.starts_with("frame")) {
            continue;
        }
        let bad = |m: String| Error::Config { line: line_no, message: m };
        let fields: Vec<&str> = s.split(',').map(str::trim).collect();
        if fields.len() != 13 {
            return Err(bad(format!("expected 13 fields, got {}", fields.len())));
        }
        let frame: usize = fields[0].parse().map_err(|_| bad("bad frame index".into()))?;
        let mut v = [0.0; 12];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| bad(format!("bad number {f:?}")))?;
        }
        let r = Matrix3::from_row_slice(&v[..9]);
        let pose = Pose::new(r, Vector3::new(v[9], v[10], v[11])).map_err(|e| bad(e.to_string()))?;
        if out.len() <= frame {
            out.resize(frame + 1, None);
        }
        out[frame] = Some(pose);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no poses".into()));
    }
    Ok(out)
}

/// Projected outline of the target under a pose, for diagnostics.
pub fn project_corners(template: &TargetTemplate, k: &CameraIntrinsics, pose: &Pose) -> Option<Vec<Point2<f64>>> {
    template.corners_3d.iter().map(|c| k.project(&pose.transform(c))).collect()
}
