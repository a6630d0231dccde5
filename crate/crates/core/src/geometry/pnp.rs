//! Iterative planar PnP: homography-decomposition initialization followed by
//! Levenberg-Marquardt over a 6-parameter pose increment.
//!
//! The increment is `(w, dt)` with `R' = exp([w]x) R` and `t' = t + dt`, so
//! the rotation is updated in axis-angle form around the current estimate.

use nalgebra::{DMatrix, Matrix3, Matrix6, Point2, Point3, Vector3, Vector6};

use crate::camera::{project_to_so3, rotation_from_axis_angle, skew, CameraIntrinsics, Pose};
use crate::error::{Error, Result};

use super::dlt::homography_dlt;
use super::{PnpParams, PointPair};

/// Consecutive rejected damped steps treated as divergence.
const MAX_REJECTED_STEPS: usize = 5;

/// Applies a pose increment `[w; dt]`.
pub fn apply_increment(pose: &Pose, delta: &Vector6<f64>) -> Pose {
    let w = Vector3::new(delta[0], delta[1], delta[2]);
    let dt = Vector3::new(delta[3], delta[4], delta[5]);
    Pose {
        r: rotation_from_axis_angle(&w) * pose.r,
        t: pose.t + dt,
    }
}

/// Stacked reprojection residuals `[u - u_meas, v - v_meas]` per point.
pub fn residuals(
    pose: &Pose,
    k: &CameraIntrinsics,
    object: &[Point3<f64>],
    image: &[Point2<f64>],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * object.len());
    for (x, m) in object.iter().zip(image) {
        let p = k.project(&pose.transform(x)).ok_or(Error::BehindCamera)?;
        out.push(p.x - m.x);
        out.push(p.y - m.y);
    }
    Ok(out)
}

/// Analytic `2n x 6` Jacobian of [`residuals`] with respect to the increment
/// at zero.
pub fn jacobian(pose: &Pose, k: &CameraIntrinsics, object: &[Point3<f64>]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * object.len(), 6);
    for (i, x) in object.iter().enumerate() {
        let rx = pose.r * x.coords;
        let pc = rx + pose.t;
        let iz = 1.0 / pc.z;
        let du = Vector3::new(k.fx * iz, 0.0, -k.fx * pc.x * iz * iz);
        let dv = Vector3::new(0.0, k.fy * iz, -k.fy * pc.y * iz * iz);
        // d(pc)/dw = -[R x]_x, d(pc)/dt = I
        let dpc_dw = -skew(&rx);
        let du_dw = dpc_dw.transpose() * du;
        let dv_dw = dpc_dw.transpose() * dv;
        for c in 0..3 {
            j[(2 * i, c)] = du_dw[c];
            j[(2 * i + 1, c)] = dv_dw[c];
            j[(2 * i, 3 + c)] = du[c];
            j[(2 * i + 1, 3 + c)] = dv[c];
        }
    }
    j
}

/// Pose from a plane-to-image homography of target points on `z = 0`:
/// `H ~ K [r1 r2 t]`. The sign is chosen so every object point has positive depth.
pub fn pose_from_plane_homography(
    h: &Matrix3<f64>,
    k: &CameraIntrinsics,
    object: &[Point3<f64>],
) -> Result<Pose> {
    let m = k.inverse_matrix() * h;
    let c1 = m.column(0).into_owned();
    let c2 = m.column(1).into_owned();
    let c3 = m.column(2).into_owned();
    let norm = 0.5 * (c1.norm() + c2.norm());
    if !(norm > 1e-12) {
        return Err(Error::PoseFailed("degenerate homography"));
    }
    for sign in [1.0, -1.0] {
        let s = sign / norm;
        let r1 = c1 * s;
        let r2 = c2 * s;
        let t = c3 * s;
        let r3 = r1.cross(&r2);
        let r = project_to_so3(&Matrix3::from_columns(&[r1, r2, r3]));
        let pose = Pose { r, t };
        if object.iter().all(|x| pose.transform(x).z > 0.0) {
            return Ok(pose);
        }
    }
    Err(Error::PoseFailed("no positive-depth initialization"))
}

fn initial_from_homography(object: &[Point3<f64>], image: &[Point2<f64>], k: &CameraIntrinsics) -> Result<Pose> {
    if object.iter().any(|p| p.z.abs() > 1e-9) {
        return Err(Error::InvalidInput("homography initialization needs z = 0 object points".into()));
    }
    let pairs: Vec<PointPair> = object
        .iter()
        .zip(image)
        .map(|(o, i)| (Point2::new(o.x, o.y), *i))
        .collect();
    let h = homography_dlt(&pairs)?;
    pose_from_plane_homography(h.matrix(), k, object)
}

fn mean_displacement(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 2;
    let s: f64 = a
        .chunks_exact(2)
        .zip(b.chunks_exact(2))
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
        .sum();
    s / n as f64
}

/// Minimizes total squared reprojection error over the pose. Without an
/// `initial` pose the object points must lie on `z = 0`.
pub fn pnp_iterative(
    object: &[Point3<f64>],
    image: &[Point2<f64>],
    k: &CameraIntrinsics,
    initial: Option<&Pose>,
    params: &PnpParams,
) -> Result<Pose> {
    if object.len() != image.len() {
        return Err(Error::InvalidInput("object and image point counts differ".into()));
    }
    if object.len() < 4 {
        return Err(Error::InvalidInput(format!("pnp needs 4 points, got {}", object.len())));
    }
    let mut pose = match initial {
        Some(p) => *p,
        None => initial_from_homography(object, image, k).map_err(|e| match e {
            Error::Degenerate => Error::PoseFailed("collinear object points"),
            other => other,
        })?,
    };
    let mut res = residuals(&pose, k, object, image)?;
    let mut cost: f64 = res.iter().map(|r| r * r).sum();
    let mut lambda = params.damping_initial;
    let mut rejected = 0;

    for _ in 0..params.max_iterations {
        let j = jacobian(&pose, k, object);
        let mut jtj = Matrix6::<f64>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        for row in 0..j.nrows() {
            let jr = Vector6::from_iterator(j.row(row).iter().copied());
            jtj += jr * jr.transpose();
            jtr += jr * res[row];
        }
        let mut a = jtj;
        for d in 0..6 {
            a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
        }
        let Some(delta) = a.cholesky().map(|c| -c.solve(&jtr)) else {
            lambda *= 10.0;
            rejected += 1;
            if rejected >= MAX_REJECTED_STEPS {
                return Err(Error::PoseFailed("diverged"));
            }
            continue;
        };
        let mut candidate = apply_increment(&pose, &delta);
        candidate.r = project_to_so3(&candidate.r);
        let cand_res = match residuals(&candidate, k, object, image) {
            Ok(r) => r,
            Err(_) => {
                lambda *= 10.0;
                rejected += 1;
                if rejected >= MAX_REJECTED_STEPS {
                    return Err(Error::PoseFailed("diverged"));
                }
                continue;
            }
        };
        let moved = mean_displacement(&cand_res, &res);
        let cand_cost: f64 = cand_res.iter().map(|r| r * r).sum();
        if cand_cost <= cost {
            pose = candidate;
            res = cand_res;
            cost = cand_cost;
            lambda = (lambda * 0.1).max(1e-12);
            rejected = 0;
        } else {
            lambda *= 10.0;
            rejected += 1;
        }
        if moved < params.convergence_epsilon {
            break;
        }
        if rejected >= MAX_REJECTED_STEPS {
            return Err(Error::PoseFailed("diverged"));
        }
    }
    if !pose.is_valid() {
        return Err(Error::PoseFailed("invalid rotation"));
    }
    Ok(pose)
}
