//! Acceptance suite: one test per top-level requirement. Each prints a
//! `PASS`/`FAIL` line with the measured numbers (visible with `--nocapture`)
//! and fails if the requirement is not met.

use std::time::Instant;

use nalgebra::{Matrix3, Point2, Point3, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nftrack::camera::{rotation_from_axis_angle, CameraIntrinsics, Homography, Pose};
use nftrack::features::{Descriptor, FeatureConfig};
use nftrack::geometry::pnp::{apply_increment, jacobian, residuals};
use nftrack::geometry::{
    homography_dlt, pnp_iterative, ransac_homography, transform_points, PnpParams, PointPair, RansacParams,
};
use nftrack::harness::{
    default_target_image, default_template, evaluate, orbit_pose, render_sequence, render_view, sweep_min_angle,
    sweep_min_angle_with, Background, Orbit, Sequence, SweepParams, TrajectorySpec,
};
use nftrack::image::GrayImage;
use nftrack::matching::{filter_matches, match_nn, Match};
use nftrack::pipeline::{Phase, Tracker, TrackerConfig};
use nftrack::tracking::{extract_patch, ncc, ncc_search, MAX_TRACKED_POINTS};

fn report(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn k() -> CameraIntrinsics {
    CameraIntrinsics::default_320x240()
}

fn random_homography(rng: &mut ChaCha8Rng) -> Homography {
    Homography::new(Matrix3::new(
        1.0 + rng.random_range(-0.3..0.3),
        rng.random_range(-0.3..0.3),
        rng.random_range(-50.0..50.0),
        rng.random_range(-0.3..0.3),
        1.0 + rng.random_range(-0.3..0.3),
        rng.random_range(-50.0..50.0),
        rng.random_range(-1e-3..1e-3),
        rng.random_range(-1e-3..1e-3),
        1.0,
    ))
    .unwrap()
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2<f64>> {
    (0..n).map(|_| Point2::new(rng.random_range(0.0..300.0), rng.random_range(0.0..200.0))).collect()
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    let base = orbit_pose(rng.random_range(0.3..0.6), rng.random_range(50.0..90.0), rng.random_range(0.0..360.0));
    let roll = rotation_from_axis_angle(&Vector3::new(0.0, 0.0, rng.random_range(-0.5..0.5)));
    Pose { r: roll * base.r, t: roll * base.t }
}

fn plane_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3<f64>> {
    (0..n)
        .map(|_| Point3::new(rng.random_range(-0.15..0.15), rng.random_range(-0.1..0.1), 0.0))
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn geometry_oracle_suite() {
    let start = Instant::now();
    let mut dlt_ok = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let h = random_homography(&mut rng);
        let pairs: Vec<PointPair> = random_points(&mut rng, 20).into_iter().map(|p| (p, h.apply(&p).unwrap())).collect();
        let est = homography_dlt(&pairs).unwrap();
        if (est.matrix() - h.matrix()).norm() / h.matrix().norm() < 1e-6 {
            dlt_ok += 1;
        }
    }

    let corners = [Point2::new(0.0, 0.0), Point2::new(300.0, 0.0), Point2::new(300.0, 200.0), Point2::new(0.0, 200.0)];
    let mut ransac_ok = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let h = random_homography(&mut rng);
        let mut pairs: Vec<PointPair> =
            random_points(&mut rng, 20).into_iter().map(|p| (p, h.apply(&p).unwrap())).collect();
        for p in random_points(&mut rng, 20) {
            pairs.push((p, Point2::new(rng.random_range(-50.0..350.0), rng.random_range(-50.0..250.0))));
        }
        if let Ok((est, _)) = ransac_homography(&pairs, &RansacParams::default(), seed) {
            let a = transform_points(&est, &corners).unwrap();
            let b = transform_points(&h, &corners).unwrap();
            if a.iter().zip(&b).all(|(p, q)| (p - q).norm() < 1.0) {
                ransac_ok += 1;
            }
        }
    }

    let mut rot = Vec::new();
    let mut trans = Vec::new();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
        let truth = random_pose(&mut rng);
        let object = plane_points(&mut rng, 20);
        let image: Vec<Point2<f64>> = object
            .iter()
            .map(|x| {
                let p = k().project(&truth.transform(x)).unwrap();
                Point2::new(p.x + gaussian(&mut rng, 0.5), p.y + gaussian(&mut rng, 0.5))
            })
            .collect();
        let est = pnp_iterative(&object, &image, &k(), None, &PnpParams::default()).unwrap();
        rot.push(est.rotation_angle_to(&truth).to_degrees());
        trans.push((est.t - truth.t).norm() / truth.t.norm());
    }
    rot.sort_by(f64::total_cmp);
    trans.sort_by(f64::total_cmp);
    let (med_rot, med_trans) = ((rot[49] + rot[50]) / 2.0, (trans[49] + trans[50]) / 2.0);
    let secs = start.elapsed().as_secs_f64();

    report(
        "geometry oracle suite",
        dlt_ok == 100 && ransac_ok >= 98 && med_rot < 1.0 && med_trans < 0.02 && secs < 10.0,
        format!(
            "DLT {dlt_ok}/100, RANSAC {ransac_ok}/100, PnP median rot {med_rot:.3} deg, trans {:.3}%, {secs:.2}s",
            med_trans * 100.0
        ),
    );
}

#[test]
fn pnp_jacobian_vs_finite_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pose = random_pose(&mut rng);
        let object = plane_points(&mut rng, 8);
        let image = vec![Point2::origin(); object.len()];
        let j = jacobian(&pose, &k(), &object);
        let eps = 1e-6;
        for c in 0..6 {
            let mut d = Vector6::zeros();
            d[c] = eps;
            let plus = residuals(&apply_increment(&pose, &d), &k(), &object, &image).unwrap();
            let minus = residuals(&apply_increment(&pose, &(-d)), &k(), &object, &image).unwrap();
            let col_norm = (0..j.nrows()).map(|r| j[(r, c)].powi(2)).sum::<f64>().sqrt();
            for r in 0..j.nrows() {
                let fd = (plus[r] - minus[r]) / (2.0 * eps);
                worst = worst.max((fd - j[(r, c)]).abs() / col_norm);
            }
        }
    }
    report("PnP Jacobian", worst < 1e-4, format!("max relative deviation {worst:.2e} over 100 poses"));
}

fn random_descriptor(rng: &mut ChaCha8Rng) -> Descriptor {
    Descriptor([rng.random(), rng.random(), rng.random(), rng.random()])
}

fn flip_bits(d: &Descriptor, n: usize, rng: &mut ChaCha8Rng) -> Descriptor {
    let mut out = *d;
    for _ in 0..n {
        let b = rng.random_range(0..256);
        out.0[b / 64] ^= 1 << (b % 64);
    }
    out
}

#[test]
fn matching_oracle() {
    let mut mismatches = 0;
    let mut filter_errors = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train: Vec<Descriptor> = (0..500).map(|_| random_descriptor(&mut rng)).collect();
        // Half the queries are noisy copies of train entries, half are random.
        let query: Vec<Descriptor> = (0..500)
            .map(|i| {
                if i % 2 == 0 {
                    let src = train[rng.random_range(0..500)];
                    let bits = rng.random_range(0..60);
                    flip_bits(&src, bits, &mut rng)
                } else {
                    random_descriptor(&mut rng)
                }
            })
            .collect();
        let got = match_nn(&query, &train).unwrap();
        let brute: Vec<Match> = query
            .iter()
            .enumerate()
            .map(|(qi, q)| {
                let mut best = (u32::MAX, 0);
                for (ti, t) in train.iter().enumerate() {
                    let d = (0..4).map(|w| (q.0[w] ^ t.0[w]).count_ones()).sum::<u32>();
                    if d < best.0 {
                        best = (d, ti);
                    }
                }
                Match { query_index: qi, train_index: best.1, distance: best.0 }
            })
            .collect();
        if got != brute {
            mismatches += 1;
        }
        let min = brute.iter().map(|m| m.distance).min().unwrap();
        let limit = (3 * min).max(30);
        let expected: Vec<Match> = brute.iter().copied().filter(|m| m.distance <= limit).collect();
        if filter_matches(&got, 30) != expected {
            filter_errors += 1;
        }
    }
    report(
        "matching oracle",
        mismatches == 0 && filter_errors == 0,
        format!("{mismatches} nearest-neighbour mismatches, {filter_errors} filter mismatches over 100 instances"),
    );
}

#[test]
fn tracking_micro_suite() {
    // Planted offsets.
    let mut found = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = GrayImage::from_fn(64, 64, |_, _| rng.random());
        let center = Point2::new(rng.random_range(20..44) as f64, rng.random_range(20..44) as f64);
        let (dx, dy) = (rng.random_range(-8..8) as f64, rng.random_range(-8..8) as f64);
        let patch = extract_patch(&frame, &Point2::new(center.x + dx, center.y + dy)).unwrap();
        if let Some((p, _)) = ncc_search(&frame, &patch, &center, 16) {
            if p == Point2::new(center.x + dx, center.y + dy) {
                found += 1;
            }
        }
    }

    // Affine intensity invariance: exact integer maps without clipping.
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let a: Vec<u8> = (0..25).map(|_| rng.random_range(0..60)).collect();
        let b: Vec<u8> = (0..25).map(|_| rng.random_range(0..60)).collect();
        let alpha = rng.random_range(1..=3u8);
        let beta = rng.random_range(0..=70u8);
        let mapped: Vec<u8> = b.iter().map(|&v| v * alpha + beta).collect();
        let inverted: Vec<u8> = b.iter().map(|&v| 255 - v).collect();
        worst = worst.max((ncc(&a, &b) - ncc(&a, &mapped)).abs());
        worst = worst.max((ncc(&a, &b) + ncc(&a, &inverted)).abs());
    }

    // Tracked-point cap across fuzzed sequences.
    let template = default_template(&FeatureConfig::default()).unwrap();
    let mut max_alive = 0;
    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tracker = Tracker::new(template.clone(), k(), TrackerConfig::default()).unwrap();
        for _ in 0..25 {
            let frame = match rng.random_range(0..5) {
                0 => GrayImage::filled(320, 240, 0),
                1 => GrayImage::from_fn(320, 240, |_, _| rng.random()),
                _ => {
                    let pose = orbit_pose(rng.random_range(0.35..0.6), rng.random_range(45.0..90.0), rng.random_range(0.0..360.0));
                    render_view(&template, &pose, &k(), (320, 240), Background::Texture(seed)).unwrap()
                }
            };
            tracker.process_frame(&frame).unwrap();
            let pts = &tracker.state().tracked_points;
            max_alive = max_alive.max(pts.iter().filter(|p| p.alive).count()).max(pts.len());
        }
    }

    report(
        "tracking micro-suite",
        found == 1000 && worst < 1e-9 && max_alive <= MAX_TRACKED_POINTS,
        format!("{found}/1000 plants found, affine deviation {worst:.1e}, max tracked points {max_alive}"),
    );
}

fn standard_sequence() -> (Sequence, f64) {
    let template = default_template(&FeatureConfig::default()).unwrap();
    let mut spec = TrajectorySpec::orbit(Orbit::standard(300), 2.0, 1);
    spec.blackout = Some(150..155);
    let start = Instant::now();
    let seq = render_sequence(&template, &spec, &k(), (320, 240)).unwrap();
    (seq, start.elapsed().as_secs_f64())
}

#[test]
fn end_to_end_sequence() {
    let cfg = TrackerConfig::default();
    let template = default_template(&cfg.features).unwrap();
    let (seq, render_secs) = standard_sequence();
    let start = Instant::now();
    let m = evaluate(&cfg, &template, &k(), &seq).unwrap();
    let secs = render_secs + start.elapsed().as_secs_f64();
    let corner = m.mean_corner_err_px.unwrap_or(f64::INFINITY);
    let latency = m.reacquisition_latency.first().copied().flatten();
    report(
        "end-to-end sequence",
        m.pose_found_rate >= 0.95 && corner < 2.0 && latency.is_some_and(|l| l <= 2) && secs < 60.0,
        format!(
            "pose found {:.1}%, mean corner error {corner:.3} px, re-acquired after {latency:?} visible frames, {secs:.1}s",
            m.pose_found_rate * 100.0
        ),
    );
}

#[test]
fn relative_phase_cost() {
    let cfg = TrackerConfig::default();
    let template = default_template(&cfg.features).unwrap();
    let (seq, _) = standard_sequence();
    let m = evaluate(&cfg, &template, &k(), &seq).unwrap();
    // Steady state: tracking frames past the first few after each acquisition.
    let tracking: Vec<u64> = m
        .rows
        .windows(6)
        .filter(|w| w.iter().all(|r| r.phase == Phase::Tracking && r.pose_found))
        .map(|w| w[5].timings.stage_sum())
        .collect();
    // Detection cost over the same frames: a fresh tracker detects on every tenth frame.
    let detection: Vec<u64> = seq
        .frames
        .iter()
        .zip(&seq.poses)
        .step_by(10)
        .filter(|(_, p)| p.is_some())
        .map(|(f, _)| {
            let mut t = Tracker::new(template.clone(), k(), cfg).unwrap();
            t.process_frame(f).unwrap().timings.stage_sum()
        })
        .collect();
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
    let (trk, det) = (mean(&tracking), mean(&detection));
    report(
        "relative phase cost",
        trk <= det / 3.0 && trk <= 15_000.0,
        format!(
            "tracking {trk:.0} us over {} frames, detection {det:.0} us over {} frames, ratio {:.3}",
            tracking.len(),
            detection.len(),
            trk / det
        ),
    );
}

#[test]
fn robustness_angle_sweep() {
    let cfg = TrackerConfig::default();
    let template = default_template(&cfg.features).unwrap();
    let outcome = sweep_min_angle_with(&cfg, &template, &k(), &SweepParams::default()).unwrap();
    let angle = sweep_min_angle(&cfg, &template, &k()).unwrap();
    let seeds = SweepParams::default().seeds;
    let monotone = angle.is_some_and(|a| outcome.tested.iter().filter(|(e, _)| *e >= a).all(|&(_, ok)| ok == seeds));
    report(
        "robustness angle",
        angle == outcome.min_angle_deg && angle.is_some_and(|a| a <= 30.0) && monotone,
        format!("minimum elevation {angle:?} deg, first failure {:?}", outcome.tested.last()),
    );
}

#[test]
fn boundary_equivalence() {
    let cfg = TrackerConfig::default();
    let template = default_template(&cfg.features).unwrap();
    let mut orbit = Orbit::standard(100);
    orbit.radius = 0.4;
    let mut spec = TrajectorySpec::orbit(orbit, 2.0, 12);
    spec.blackout = Some(60..63);
    let seq = render_sequence(&template, &spec, &k(), (320, 240)).unwrap();

    let mut direct = Tracker::new(template, k(), cfg).unwrap();
    let target = default_target_image();
    let handle = nftrack_embed::init(&nftrack_embed::InitParams {
        template: target.data(),
        width: target.width(),
        height: target.height(),
        physical_width: 0.297,
        physical_height: 0.210,
        fx: 280.0,
        fy: 280.0,
        cx: 160.0,
        cy: 120.0,
        config: "",
    });
    assert_ne!(handle, 0);
    let mut status_mismatch = 0;
    let mut worst: f64 = 0.0;
    let mut statuses = [0usize; 3];
    for f in &seq.frames {
        let d = direct.process_frame(f).unwrap();
        let e = nftrack_embed::process(handle, f.data(), nftrack_embed::FORMAT_GRAY, 320, 240);
        let expected = match (&d.pose, d.phase_executed) {
            (None, _) => 0,
            (Some(_), Phase::Detecting) => 1,
            (Some(_), Phase::Tracking) => 2,
        };
        if e.status != expected {
            status_mismatch += 1;
        }
        statuses[expected as usize] += 1;
        if let Some(p) = d.pose {
            let m = p.to_matrix4();
            for i in 0..16 {
                worst = worst.max((m[(i / 4, i % 4)] - e.matrix[i]).abs());
            }
        }
    }
    nftrack_embed::dispose(handle);
    report(
        "boundary equivalence",
        status_mismatch == 0 && worst <= 1e-9,
        format!("{status_mismatch} status mismatches over 100 frames (none/detected/tracked = {statuses:?}), max pose deviation {worst:.1e}"),
    );
}
