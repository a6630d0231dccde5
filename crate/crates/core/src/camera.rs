//! Pinhole intrinsics, rigid poses and plane homographies.

use nalgebra::{Matrix3, Matrix4, Point2, Point3, Vector3};

use crate::error::{Error, Result};

/// Determinant magnitude below which a homography is treated as singular.
pub const HOMOGRAPHY_DET_FLOOR: f64 = 1e-8;

/// Pinhole camera without distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !cx.is_finite() || !cy.is_finite() {
            return Err(Error::InvalidInput(format!("bad intrinsics fx={fx} fy={fy}")));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// Defaults for a 320x240 webcam with roughly 60 degree horizontal field of view.
    pub fn default_320x240() -> Self {
        Self { fx: 280.0, fy: 280.0, cx: 160.0, cy: 120.0 }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Projects a camera-frame point. Returns `None` for non-positive depth.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Option<Point2<f64>> {
        if p.z <= 0.0 {
            return None;
        }
        Some(Point2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

/// Camera-from-target rigid transform: `x_cam = r * x_target + t`, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub r: Matrix3<f64>,
    pub t: Vector3<f64>,
}

impl Pose {
    /// Builds a pose, rejecting rotations that are not orthonormal with
    /// determinant +1 to within 1e-6.
    pub fn new(r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self> {
        let pose = Self { r, t };
        if !pose.is_valid() {
            return Err(Error::InvalidInput("rotation is not in SO(3)".into()));
        }
        Ok(pose)
    }

    pub fn identity() -> Self {
        Self { r: Matrix3::identity(), t: Vector3::zeros() }
    }

    pub fn is_valid(&self) -> bool {
        let err = self.r.transpose() * self.r - Matrix3::identity();
        err.iter().all(|e| e.abs() <= 1e-6)
            && (self.r.determinant() - 1.0).abs() <= 1e-6
            && self.t.iter().all(|v| v.is_finite())
    }

    #[inline]
    pub fn transform(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.r * p.coords + self.t
    }

    /// 4x4 homogeneous camera-from-target matrix.
    pub fn to_matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.t);
        m
    }

    /// Geodesic angle between the two rotations, radians.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        let rel = self.r.transpose() * other.r;
        ((rel.trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
    }

    /// Camera center expressed in target coordinates.
    pub fn camera_center(&self) -> Vector3<f64> {
        -(self.r.transpose() * self.t)
    }
}

/// Rotation matrix for an axis-angle vector (Rodrigues).
pub fn rotation_from_axis_angle(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = skew(w);
    if theta < 1e-12 {
        return Matrix3::identity() + k;
    }
    let (s, c) = theta.sin_cos();
    Matrix3::identity() + k * (s / theta) + k * k * ((1.0 - c) / (theta * theta))
}

/// Axis-angle vector of a rotation matrix.
pub fn axis_angle_from_rotation(r: &Matrix3<f64>) -> Vector3<f64> {
    nalgebra::Rotation3::from_matrix_unchecked(*r).scaled_axis()
}

#[inline]
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Nearest rotation in the Frobenius sense, with the determinant forced to +1.
pub fn project_to_so3(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut fix = Matrix3::identity();
        fix[(2, 2)] = -1.0;
        r = u * fix * v_t;
    }
    r
}

/// Projective map between the template plane and the image, stored with
/// `h[2][2] = 1` when that entry is nonzero and unit Frobenius norm otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    h: Matrix3<f64>,
}

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularHomography);
        }
        let m = if m[(2, 2)].abs() > 1e-12 * m.norm() {
            m / m[(2, 2)]
        } else {
            let n = m.norm();
            if n == 0.0 {
                return Err(Error::SingularHomography);
            }
            m / n
        };
        if m.determinant().abs() < HOMOGRAPHY_DET_FLOOR {
            return Err(Error::SingularHomography);
        }
        Ok(Self { h: m })
    }

    pub fn identity() -> Self {
        Self { h: Matrix3::identity() }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self { h: Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0) }
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.h
    }

    pub fn inverse(&self) -> Result<Homography> {
        let inv = self.h.try_inverse().ok_or(Error::SingularHomography)?;
        Homography::new(inv)
    }

    pub fn compose(&self, other: &Homography) -> Result<Homography> {
        Homography::new(self.h * other.h)
    }

    /// Applies the map with perspective divide.
    #[inline]
    pub fn apply(&self, p: &Point2<f64>) -> Result<Point2<f64>> {
        let v = self.h * Vector3::new(p.x, p.y, 1.0);
        if v.z.abs() < 1e-12 {
            return Err(Error::SingularProjection);
        }
        Ok(Point2::new(v.x / v.z, v.y / v.z))
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.h;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn homography_normalizes() {
        let h = Homography::new(Matrix3::identity() * 4.0).unwrap();
        assert_eq!(*h.matrix(), Matrix3::identity());
        let z = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        let h = Homography::new(z * 3.0).unwrap();
        assert!((h.matrix().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn homography_rejects_singular() {
        let m = Matrix3::new(1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0);
        assert_eq!(Homography::new(m), Err(Error::SingularHomography));
    }

    #[test]
    fn pose_validation() {
        assert!(Pose::new(Matrix3::identity(), Vector3::zeros()).is_ok());
        assert!(Pose::new(Matrix3::identity() * 1.01, Vector3::zeros()).is_err());
        let reflect = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(reflect, Vector3::zeros()).is_err());
    }

    #[test]
    fn rodrigues_roundtrip() {
        let w = Vector3::new(0.3, -0.2, 1.1);
        let r = rotation_from_axis_angle(&w);
        assert!((axis_angle_from_rotation(&r) - w).norm() < 1e-12);
        assert!(Pose::new(r, Vector3::zeros()).is_ok());
    }

    #[test]
    fn project_to_so3_fixes_reflection() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        let r = project_to_so3(&m);
        assert!(Pose::new(r, Vector3::zeros()).is_ok());
    }

    fn arb_homography() -> impl Strategy<Value = Homography> {
        (
            0.5f64..1.5,
            -0.3f64..0.3,
            -50.0f64..50.0,
            -0.3f64..0.3,
            0.5f64..1.5,
            -50.0f64..50.0,
            -1e-3f64..1e-3,
            -1e-3f64..1e-3,
        )
            .prop_filter_map("invertible", |(a, b, c, d, e, f, g, h)| {
                Homography::new(Matrix3::new(a, b, c, d, e, f, g, h, 1.0)).ok()
            })
    }

    proptest! {
        #[test]
        fn homography_roundtrip(h in arb_homography(), x in 0.0f64..320.0, y in 0.0f64..240.0) {
            let inv = h.inverse().unwrap();
            let p = Point2::new(x, y);
            let q = h.apply(&p).unwrap();
            let back = inv.apply(&q).unwrap();
            let scale = p.coords.norm().max(1.0);
            prop_assert!((back - p).norm() / scale < 1e-6);
        }
    }
}
