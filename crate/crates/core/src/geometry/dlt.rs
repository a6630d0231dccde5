//! Normalized direct linear transform for plane homographies.

use nalgebra::{DMatrix, Matrix3, Point2};

use crate::camera::Homography;
use crate::error::{Error, Result};

use super::PointPair;

// Sine of the smallest angle accepted between two sides of a sample triangle.
const COLLINEAR_SIN: f64 = 1e-6;

fn collinear(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> bool {
    let u = b - a;
    let v = c - a;
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return true;
    }
    (u.x * v.y - u.y * v.x).abs() <= COLLINEAR_SIN * nu * nv
}

/// True if any three of the four points are collinear (or coincide).
pub fn sample_is_degenerate(points: &[Point2<f64>; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES
        .iter()
        .any(|t| collinear(&points[t[0]], &points[t[1]], &points[t[2]]))
}

/// Similarity moving the centroid to the origin and the mean distance to sqrt(2).
fn normalizing_transform(points: impl Iterator<Item = Point2<f64>> + Clone) -> Result<Matrix3<f64>> {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    let (cx, cy) = (sx / n, sy / n);
    let mean_dist = points.map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()).sum::<f64>() / n;
    if !(mean_dist > 1e-12) {
        return Err(Error::Degenerate);
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

/// Estimates `H` with `dst ~ H * src` from at least four correspondences.
pub fn homography_dlt(pairs: &[PointPair]) -> Result<Homography> {
    let n = pairs.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!("homography needs 4 pairs, got {n}")));
    }
    if n == 4 {
        let src = [pairs[0].0, pairs[1].0, pairs[2].0, pairs[3].0];
        let dst = [pairs[0].1, pairs[1].1, pairs[2].1, pairs[3].1];
        if sample_is_degenerate(&src) || sample_is_degenerate(&dst) {
            return Err(Error::Degenerate);
        }
    }
    let t_src = normalizing_transform(pairs.iter().map(|p| p.0))?;
    let t_dst = normalizing_transform(pairs.iter().map(|p| p.1))?;

    // Pad to at least 9 rows so the SVD yields a full right basis.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in pairs.iter().enumerate() {
        let x = t_src[(0, 0)] * s.x + t_src[(0, 2)];
        let y = t_src[(1, 1)] * s.y + t_src[(1, 2)];
        let u = t_dst[(0, 0)] * d.x + t_dst[(0, 2)];
        let v = t_dst[(1, 1)] * d.y + t_dst[(1, 2)];
        let r0 = 2 * i;
        let r1 = r0 + 1;
        a[(r0, 3)] = -x;
        a[(r0, 4)] = -y;
        a[(r0, 5)] = -1.0;
        a[(r0, 6)] = v * x;
        a[(r0, 7)] = v * y;
        a[(r0, 8)] = v;
        a[(r1, 0)] = x;
        a[(r1, 1)] = y;
        a[(r1, 2)] = 1.0;
        a[(r1, 6)] = -u * x;
        a[(r1, 7)] = -u * y;
        a[(r1, 8)] = -u;
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::Degenerate)?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let smallest = order[0];
    let second = order[1];
    let largest = order[order.len() - 1];
    // A second (near) null direction means the system is rank deficient.
    if sv[second] <= 1e-8 * sv[largest] {
        return Err(Error::Degenerate);
    }
    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_dst_inv = t_dst.try_inverse().ok_or(Error::Degenerate)?;
    Homography::new(t_dst_inv * hn * t_src).map_err(|_| Error::Degenerate)
}
