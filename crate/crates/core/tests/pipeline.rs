use proptest::prelude::*;

use nftrack::camera::CameraIntrinsics;
use nftrack::features::FeatureConfig;
use nftrack::harness::{
    corner_error, default_target_image, default_template, orbit_pose, render_sequence, render_view, Background, Orbit,
    Sequence, Trajectory, TrajectorySpec,
};
use nftrack::image::GrayImage;
use nftrack::pipeline::{Phase, Tracker, TrackerConfig};
use nftrack::target::TargetTemplate;
use nftrack::tracking::MAX_TRACKED_POINTS;
use nftrack::Error;

fn k() -> CameraIntrinsics {
    CameraIntrinsics::default_320x240()
}

fn template() -> TargetTemplate {
    default_template(&FeatureConfig::default()).unwrap()
}

fn tracker() -> Tracker {
    Tracker::new(template(), k(), TrackerConfig::default()).unwrap()
}

fn orbit_sequence(frames: usize, seed: u64, blackout: Option<std::ops::Range<usize>>) -> Sequence {
    let mut spec = TrajectorySpec::orbit(Orbit::standard(frames), 2.0, seed);
    spec.blackout = blackout;
    render_sequence(&template(), &spec, &k(), (320, 240)).unwrap()
}

#[test]
fn creation() {
    let t = tracker();
    assert_eq!(t.phase(), Phase::Detecting);
    assert!(t.template().features.len() >= 100, "{}", t.template().features.len());

    let flat = GrayImage::filled(200, 150, 90);
    assert!(matches!(
        TargetTemplate::new(flat, 0.2, 0.15, &FeatureConfig::default()),
        Err(Error::TooFewFeatures { .. })
    ));
    let mut strict = TrackerConfig::default();
    strict.features.min_features = 10_000;
    assert!(Tracker::new(template(), k(), strict).is_err());
}

#[test]
fn detect_then_track() {
    let seq = orbit_sequence(3, 4, None);
    let mut t = tracker();
    let r0 = t.process_frame(&seq.frames[0]).unwrap();
    assert_eq!(r0.phase_executed, Phase::Detecting);
    assert!(r0.pose.is_some() && r0.homography.is_some());
    assert_eq!(t.phase(), Phase::Tracking);
    assert!(r0.timings.feature_us > 0 && r0.timings.total_us >= r0.timings.feature_us);

    let r1 = t.process_frame(&seq.frames[1]).unwrap();
    assert_eq!(r1.phase_executed, Phase::Tracking);
    let err = corner_error(t.template(), &k(), &r1.pose.unwrap(), seq.poses[1].as_ref().unwrap());
    assert!(err < 2.0, "corner error {err}");
    assert!(r1.timings.warp_us > 0 || r1.timings.ncc_us > 0);
}

#[test]
fn black_frame_loses_tracking_and_reacquires() {
    let seq = orbit_sequence(12, 6, None);
    let mut t = tracker();
    t.process_frame(&seq.frames[0]).unwrap();
    t.process_frame(&seq.frames[1]).unwrap();
    assert_eq!(t.phase(), Phase::Tracking);
    let r = t.process_frame(&GrayImage::filled(320, 240, 0)).unwrap();
    assert_eq!(r.phase_executed, Phase::Tracking);
    assert!(r.pose.is_none());
    assert_eq!(t.phase(), Phase::Detecting);
    assert!(t.state().tracked_points.is_empty() && t.state().last_pose.is_none());

    let found = seq.frames[2..4].iter().any(|f| t.process_frame(f).unwrap().pose.is_some());
    assert!(found, "not re-acquired within 2 visible frames");
}

#[test]
fn failed_detection_stays_detecting() {
    let mut t = tracker();
    let r = t.process_frame(&GrayImage::filled(320, 240, 0)).unwrap();
    assert_eq!(r.phase_executed, Phase::Detecting);
    assert!(r.pose.is_none());
    assert_eq!(t.phase(), Phase::Detecting);
    assert_eq!(t.state().consecutive_detection_frames, 1);
}

#[test]
fn frame_size_is_enforced() {
    let mut t = tracker().with_frame_size(320, 240);
    assert!(matches!(t.process_frame(&GrayImage::filled(160, 120, 0)), Err(Error::InvalidInput(_))));
    let mut t = tracker();
    t.process_frame(&GrayImage::filled(320, 240, 0)).unwrap();
    assert!(t.process_frame(&GrayImage::filled(321, 240, 0)).is_err());
}

#[test]
fn tracking_is_cheaper_than_detection() {
    let seq = orbit_sequence(40, 2, None);
    let mut t = tracker();
    let mut det = Vec::new();
    let mut trk = Vec::new();
    for f in &seq.frames {
        let r = t.process_frame(f).unwrap();
        match r.phase_executed {
            Phase::Detecting => det.push(r.timings.stage_sum()),
            Phase::Tracking => trk.push(r.timings.stage_sum()),
        }
    }
    // Fresh detections on the same frames for a stable detection cost.
    for f in seq.frames.iter().step_by(4) {
        let mut fresh = tracker();
        det.push(fresh.process_frame(f).unwrap().timings.stage_sum());
    }
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
    assert!(!trk.is_empty());
    assert!(mean(&trk) < mean(&det), "tracking {} vs detection {}", mean(&trk), mean(&det));
}

#[test]
fn config_variants_track() {
    let seq = orbit_sequence(20, 3, None);
    for text in ["pnp.points = inliers", "tracking.match_resolution = full", "tracking.use_ransac = true"] {
        let cfg = TrackerConfig::from_text(text).unwrap();
        let mut t = Tracker::new(template(), k(), cfg).unwrap();
        let found = seq.frames.iter().filter(|f| t.process_frame(f).unwrap().pose.is_some()).count();
        assert!(found >= 19, "{text}: {found}");
    }
}

#[derive(Debug, Clone)]
enum FrameKind {
    Target(f64, f64),
    Black,
    Noise(u8),
    Background(u64),
}

fn frame_kind() -> impl Strategy<Value = FrameKind> {
    prop_oneof![
        4 => (50.0..90.0f64, 0.0..360.0f64).prop_map(|(e, a)| FrameKind::Target(e, a)),
        1 => Just(FrameKind::Black),
        1 => any::<u8>().prop_map(FrameKind::Noise),
        1 => any::<u64>().prop_map(FrameKind::Background),
    ]
}

fn render(kind: &FrameKind, template: &TargetTemplate) -> GrayImage {
    match *kind {
        FrameKind::Target(el, az) => render_view(template, &orbit_pose(0.42, el, az), &k(), (320, 240), Background::Gray(100)).unwrap(),
        FrameKind::Black => GrayImage::filled(320, 240, 0),
        FrameKind::Noise(s) => GrayImage::from_fn(320, 240, |x, y| ((x * 7919 + y * 104729 + s as usize * 31) % 251) as u8),
        FrameKind::Background(seed) => nftrack::harness::background_texture(320, 240, seed),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    /// Every transition is a legal one, poses and homographies always satisfy
    /// their invariants, and at most 25 points are ever tracked.
    #[test]
    fn state_machine_soundness(kinds in proptest::collection::vec(frame_kind(), 1..14)) {
        let template = template();
        let mut t = Tracker::new(template.clone(), k(), TrackerConfig::default()).unwrap();
        for kind in &kinds {
            let before = t.phase();
            let r = t.process_frame(&render(kind, &template)).unwrap();
            prop_assert_eq!(r.phase_executed, before);
            prop_assert_eq!(r.pose.is_some(), r.homography.is_some());
            if let Some(p) = &r.pose {
                prop_assert!(p.is_valid());
            }
            if let Some(h) = &r.homography {
                prop_assert!(h.matrix().determinant().abs() > 1e-12);
            }
            let after = t.phase();
            if before == Phase::Detecting && after == Phase::Tracking {
                prop_assert!(r.pose.is_some());
            }
            if after == Phase::Tracking {
                prop_assert!(t.state().last_pose.is_some());
            }
            prop_assert!(t.state().tracked_points.iter().filter(|p| p.alive).count() <= MAX_TRACKED_POINTS);
            prop_assert!(t.state().tracked_points.len() <= MAX_TRACKED_POINTS);
        }
    }
}

#[test]
fn custom_pose_list_sequence() {
    let poses = (0..8).map(|i| orbit_pose(0.4, 85.0 - i as f64, 10.0 * i as f64)).collect();
    let spec = TrajectorySpec {
        trajectory: Trajectory::Poses(poses),
        noise_sigma: 1.0,
        blackout: None,
        background: Background::Gray(128),
        seed: 1,
    };
    let template = TargetTemplate::new(default_target_image(), 0.297, 0.210, &FeatureConfig::default()).unwrap();
    let seq = render_sequence(&template, &spec, &k(), (320, 240)).unwrap();
    let mut t = Tracker::new(template, k(), TrackerConfig::default()).unwrap();
    for (f, truth) in seq.frames.iter().zip(&seq.poses) {
        let r = t.process_frame(f).unwrap();
        let err = corner_error(t.template(), &k(), &r.pose.unwrap(), truth.as_ref().unwrap());
        assert!(err < 5.0, "{err}");
    }
}
