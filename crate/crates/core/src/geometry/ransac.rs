//! RANSAC homography estimation over 4-point minimal samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::Homography;
use crate::error::{Error, Result};

use super::dlt::homography_dlt;
use super::{PointPair, RansacParams};

/// Symmetric transfer error `sqrt(|H s - d|^2 + |H^-1 d - s|^2)`, or `None`
/// when either direction hits the line at infinity.
pub fn symmetric_transfer_error(h: &Homography, h_inv: &Homography, pair: &PointPair) -> Option<f64> {
    let fwd = h.apply(&pair.0).ok()?;
    let bwd = h_inv.apply(&pair.1).ok()?;
    Some(((fwd - pair.1).norm_squared() + (bwd - pair.0).norm_squared()).sqrt())
}

fn inlier_mask(h: &Homography, pairs: &[PointPair], threshold: f64) -> Option<(Vec<bool>, usize)> {
    let h_inv = h.inverse().ok()?;
    let mask: Vec<bool> = pairs
        .iter()
        .map(|p| symmetric_transfer_error(h, &h_inv, p).is_some_and(|e| e < threshold))
        .collect();
    let count = mask.iter().filter(|&&m| m).count();
    Some((mask, count))
}

fn required_iterations(inlier_ratio: f64, confidence: f64, cap: usize) -> usize {
    let p_good = inlier_ratio.powi(4);
    if p_good >= 1.0 {
        return 1;
    }
    if p_good <= 0.0 {
        return cap;
    }
    let n = (1.0 - confidence).ln() / (1.0 - p_good).ln();
    if n.is_finite() {
        (n.ceil() as usize).clamp(1, cap)
    } else {
        cap
    }
}

/// Robust homography `template -> frame` with an inlier mask. The result is
/// the DLT re-fit on the consensus set; identical seeds give identical output.
pub fn ransac_homography(
    pairs: &[PointPair],
    params: &RansacParams,
    rng_seed: u64,
) -> Result<(Homography, Vec<bool>)> {
    let n = pairs.len();
    let failed = |inliers| Error::EstimationFailed { inliers, required: params.min_inliers };
    if n < 4 {
        return Err(failed(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut best: Option<(Homography, Vec<bool>, usize)> = None;
    let mut needed = params.max_iterations;
    let mut iter = 0;
    while iter < needed.min(params.max_iterations) {
        iter += 1;
        let idx = rand::seq::index::sample(&mut rng, n, 4);
        let sample: Vec<PointPair> = idx.iter().map(|i| pairs[i]).collect();
        let Ok(h) = homography_dlt(&sample) else {
            continue;
        };
        let Some((mask, count)) = inlier_mask(&h, pairs, params.inlier_threshold) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| count > b.2) {
            needed = required_iterations(count as f64 / n as f64, params.confidence, params.max_iterations);
            best = Some((h, mask, count));
        }
    }

    let Some((h, mask, count)) = best else {
        return Err(failed(0));
    };
    if count < params.min_inliers.max(4) {
        return Err(failed(count));
    }
    let consensus: Vec<PointPair> = pairs.iter().zip(&mask).filter(|(_, &m)| m).map(|(p, _)| *p).collect();
    if let Ok(refit) = homography_dlt(&consensus) {
        if let Some((refit_mask, refit_count)) = inlier_mask(&refit, pairs, params.inlier_threshold) {
            if refit_count >= params.min_inliers.max(4) {
                return Ok((refit, refit_mask));
            }
        }
    }
    Ok((h, mask))
}
