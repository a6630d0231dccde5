//! Synthetic targets, camera trajectories and frame rendering.

use std::ops::Range;

use nalgebra::{Matrix3, Point2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::camera::{CameraIntrinsics, Homography, Pose};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::target::TargetTemplate;
use crate::tracking::warp_into;

/// Pixel size of the default synthetic target (1 px per mm of DIN A4).
pub const DEFAULT_TARGET_SIZE: (usize, usize) = (297, 210);

/// What fills the frame outside the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    Gray(u8),
    /// Seeded clutter texture.
    Texture(u64),
}

/// Camera path on a sphere around the target center, looking at the center.
/// Elevation is measured from the target plane (90 degrees is fronto-parallel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orbit {
    pub radius: f64,
    /// Elevation at the first and last frame.
    pub elevation_max_deg: f64,
    /// Elevation reached half way through the sequence.
    pub elevation_min_deg: f64,
    pub azimuth_start_deg: f64,
    pub azimuth_span_deg: f64,
    pub frames: usize,
}

impl Orbit {
    pub fn standard(frames: usize) -> Self {
        Self {
            radius: 0.45,
            elevation_max_deg: 90.0,
            elevation_min_deg: 60.0,
            azimuth_start_deg: 0.0,
            azimuth_span_deg: 180.0,
            frames,
        }
    }

    /// `(elevation, azimuth)` in degrees for frame `i`.
    pub fn angles(&self, i: usize) -> (f64, f64) {
        let s = if self.frames > 1 { i as f64 / (self.frames - 1) as f64 } else { 0.0 };
        let dip = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * s).cos());
        let el = self.elevation_max_deg - (self.elevation_max_deg - self.elevation_min_deg) * dip;
        (el, self.azimuth_start_deg + self.azimuth_span_deg * s)
    }

    pub fn poses(&self) -> Vec<Pose> {
        (0..self.frames)
            .map(|i| {
                let (el, az) = self.angles(i);
                orbit_pose(self.radius, el, az)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Poses(Vec<Pose>),
    Orbit(Orbit),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub trajectory: Trajectory,
    pub noise_sigma: f64,
    /// Frames rendered black, with no ground truth.
    pub blackout: Option<Range<usize>>,
    pub background: Background,
    pub seed: u64,
}

impl TrajectorySpec {
    pub fn orbit(orbit: Orbit, noise_sigma: f64, seed: u64) -> Self {
        Self {
            trajectory: Trajectory::Orbit(orbit),
            noise_sigma,
            blackout: None,
            background: Background::Texture(seed ^ 0x5eed),
            seed,
        }
    }

    pub fn poses(&self) -> Vec<Pose> {
        match &self.trajectory {
            Trajectory::Poses(p) => p.clone(),
            Trajectory::Orbit(o) => o.poses(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Trajectory::Orbit(o) = &self.trajectory {
            let in_range = |e: f64| e > 0.0 && e <= 90.0;
            if o.frames == 0 || !in_range(o.elevation_max_deg) || !in_range(o.elevation_min_deg) || !(o.radius > 0.0) {
                return Err(Error::InvalidInput(format!("bad orbit {o:?}")));
            }
        }
        if let Trajectory::Poses(p) = &self.trajectory {
            if p.is_empty() {
                return Err(Error::InvalidInput("empty trajectory".into()));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidInput("noise sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Camera at `radius` from the target center, at the given elevation above
/// the plane and azimuth around its normal, looking at the center. At 90
/// degrees the pose is `R = I, t = (0, 0, radius)`.
pub fn orbit_pose(radius: f64, elevation_deg: f64, azimuth_deg: f64) -> Pose {
    let (el, az) = (elevation_deg.to_radians(), azimuth_deg.to_radians());
    let center = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), -el.sin()) * radius;
    let z = -center.normalize();
    let down = Vector3::new(0.0, 1.0, 0.0);
    let mut x = down.cross(&z);
    if x.norm() < 1e-9 {
        x = Vector3::new(1.0, 0.0, 0.0);
    }
    let x = x.normalize();
    let y = z.cross(&x);
    let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    Pose { r, t: -(r * center) }
}

/// Plane-induced homography from template pixels to frame pixels:
/// `K [r1 r2 t] A` with `A` the template's pixel-to-plane map.
pub fn ground_truth_homography(template: &TargetTemplate, pose: &Pose, k: &CameraIntrinsics) -> Result<Homography> {
    let rt = Matrix3::from_columns(&[pose.r.column(0).into_owned(), pose.r.column(1).into_owned(), pose.t]);
    Homography::new(k.matrix() * rt * template.pixel_to_plane())
}

fn value_noise(width: usize, height: usize, cell: usize, lo: u8, hi: u8, rng: &mut ChaCha8Rng) -> GrayImage {
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(lo as f64..=hi as f64)).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    GrayImage::from_fn(width, height, |x, y| {
        let gx = x as f64 / cell as f64;
        let gy = y as f64 / cell as f64;
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        let (fx, fy) = (smooth(gx - ix as f64), smooth(gy - iy as f64));
        let g = |i: usize, j: usize| grid[j * gw + i];
        let top = g(ix, iy) + (g(ix + 1, iy) - g(ix, iy)) * fx;
        let bot = g(ix, iy + 1) + (g(ix + 1, iy + 1) - g(ix, iy + 1)) * fx;
        (top + (bot - top) * fy).round() as u8
    })
}

enum Shape {
    Rect { cx: f64, cy: f64, hw: f64, hh: f64, cos: f64, sin: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Triangle([Point2<f64>; 3]),
}

impl Shape {
    fn random(rng: &mut ChaCha8Rng, width: f64, height: f64, size: f64) -> (Shape, (f64, f64, f64, f64)) {
        let cx = rng.random_range(0.0..width);
        let cy = rng.random_range(0.0..height);
        let shape = match rng.random_range(0..3) {
            0 => {
                let a: f64 = rng.random_range(0.0..std::f64::consts::PI);
                Shape::Rect {
                    cx,
                    cy,
                    hw: size * 0.5,
                    hh: size * rng.random_range(0.25..0.6),
                    cos: a.cos(),
                    sin: a.sin(),
                }
            }
            1 => Shape::Ellipse { cx, cy, rx: size * 0.5, ry: size * rng.random_range(0.3..0.5) },
            _ => {
                let mut p = [Point2::origin(); 3];
                for v in p.iter_mut() {
                    *v = Point2::new(cx + rng.random_range(-size..size) * 0.6, cy + rng.random_range(-size..size) * 0.6);
                }
                Shape::Triangle(p)
            }
        };
        (shape, (cx - size, cy - size, cx + size, cy + size))
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { cx, cy, hw, hh, cos, sin } => {
                let (dx, dy) = (x - cx, y - cy);
                (dx * cos + dy * sin).abs() <= hw && (-dx * sin + dy * cos).abs() <= hh
            }
            Shape::Ellipse { cx, cy, rx, ry } => ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0,
            Shape::Triangle(p) => {
                let s = |a: Point2<f64>, b: Point2<f64>| (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
                let (d0, d1, d2) = (s(p[0], p[1]), s(p[1], p[2]), s(p[2], p[0]));
                (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
            }
        }
    }
}

/// Draws `count` shapes from largest to smallest, sizes log-spaced between
/// `max` and `min`, so detail exists at every scale.
fn draw_shapes(img: &mut GrayImage, count: usize, min: f64, max: f64, rng: &mut ChaCha8Rng) {
    let (w, h) = (img.width(), img.height());
    for i in 0..count {
        let s = (i as f64 + rng.random::<f64>()) / count as f64;
        let size = max * (min / max).powf(s);
        let (shape, (x0, y0, x1, y1)) = Shape::random(rng, w as f64, h as f64, size);
        let value: u8 = rng.random();
        let xs = x0.max(0.0) as usize..(x1.ceil().max(0.0) as usize).min(w);
        let ys = y0.max(0.0) as usize..(y1.ceil().max(0.0) as usize).min(h);
        for y in ys {
            for x in xs.clone() {
                if shape.contains(x as f64, y as f64) {
                    img.set(x, y, value);
                }
            }
        }
    }
}

/// High-texture target: smooth value noise overlaid with random filled
/// rectangles, ellipses and triangles.
pub fn textured_target(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = value_noise(width, height, 24, 60, 200, &mut rng);
    let count = (width * height) / 300;
    draw_shapes(&mut img, count, 6.0, 90.0, &mut rng);
    img
}

/// Default synthetic target image.
pub fn default_target_image() -> GrayImage {
    textured_target(DEFAULT_TARGET_SIZE.0, DEFAULT_TARGET_SIZE.1, 2018)
}

/// Background clutter: low-contrast noise with a sparse set of shapes.
pub fn background_texture(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = value_noise(width, height, 32, 70, 180, &mut rng);
    let count = (width * height) / 2500;
    draw_shapes(&mut img, count, 6.0, 30.0, &mut rng);
    img
}

fn background_image(bg: Background, width: usize, height: usize) -> GrayImage {
    match bg {
        Background::Gray(v) => GrayImage::filled(width, height, v),
        Background::Texture(seed) => background_texture(width, height, seed),
    }
}

/// Renders the target under `pose` over `background` without noise.
pub fn render_view(
    template: &TargetTemplate,
    pose: &Pose,
    k: &CameraIntrinsics,
    size: (usize, usize),
    background: Background,
) -> Result<GrayImage> {
    let corners: Vec<Vector3<f64>> = template.corners_3d.iter().map(|c| pose.transform(c)).collect();
    if corners.iter().all(|c| c.z <= 0.0) {
        return Err(Error::InvalidInput("target is behind the camera".into()));
    }
    let h = ground_truth_homography(template, pose, k)?;
    let mut frame = background_image(background, size.0, size.1);
    warp_into(&template.image, &h, &mut frame)?;
    Ok(frame)
}

/// Adds zero-mean Gaussian noise, rounding and clamping to `[0, 255]`.
pub fn add_noise(image: &mut GrayImage, sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for px in image.data_mut() {
        *px = (*px as f64 + normal.sample(rng)).round().clamp(0.0, 255.0) as u8;
    }
}

/// Rendered frames with ground truth (`None` during blackout).
#[derive(Debug, Clone)]
pub struct Sequence {
    pub frames: Vec<GrayImage>,
    pub poses: Vec<Option<Pose>>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Renders every pose of the trajectory. Deterministic given the spec.
pub fn render_sequence(
    template: &TargetTemplate,
    spec: &TrajectorySpec,
    k: &CameraIntrinsics,
    size: (usize, usize),
) -> Result<Sequence> {
    spec.validate()?;
    let poses = spec.poses();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let background = background_image(spec.background, size.0, size.1);
    let mut frames = Vec::with_capacity(poses.len());
    let mut truth = Vec::with_capacity(poses.len());
    for (i, pose) in poses.iter().enumerate() {
        if spec.blackout.as_ref().is_some_and(|b| b.contains(&i)) {
            frames.push(GrayImage::filled(size.0, size.1, 0));
            truth.push(None);
            continue;
        }
        let projected: Vec<Point2<f64>> = template
            .corners_3d
            .iter()
            .filter_map(|c| k.project(&pose.transform(c)))
            .collect();
        if projected.is_empty() {
            return Err(Error::InvalidInput(format!("frame {i}: target is behind the camera")));
        }
        let visible = projected
            .iter()
            .any(|p| p.x >= 0.0 && p.y >= 0.0 && p.x < size.0 as f64 && p.y < size.1 as f64);
        if !visible {
            return Err(Error::InvalidInput(format!("frame {i}: no target corner inside the frame")));
        }
        let h = ground_truth_homography(template, pose, k)?;
        let mut frame = background.clone();
        warp_into(&template.image, &h, &mut frame)?;
        add_noise(&mut frame, spec.noise_sigma, &mut rng);
        frames.push(frame);
        truth.push(Some(*pose));
    }
    Ok(Sequence { frames, poses: truth })
}
