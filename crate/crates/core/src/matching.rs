//! Exhaustive Hamming matching and the min-distance outlier filter.

use crate::error::{Error, Result};
use crate::features::Descriptor;

/// Default lower bound on the filter threshold, in bits.
pub const DEFAULT_FILTER_FLOOR: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    /// Index into the frame (query) descriptors.
    pub query_index: usize,
    /// Index into the template (train) descriptors.
    pub train_index: usize,
    pub distance: u32,
}

#[inline]
pub fn hamming(a: &Descriptor, b: &Descriptor) -> u32 {
    a.distance(b)
}

/// Best train match for every query descriptor; ties go to the lowest train index.
pub fn match_nn(query: &[Descriptor], train: &[Descriptor]) -> Result<Vec<Match>> {
    if train.is_empty() {
        return Err(Error::InvalidInput("empty train descriptor set".into()));
    }
    Ok(query
        .iter()
        .enumerate()
        .map(|(qi, q)| {
            let mut best = Match { query_index: qi, train_index: 0, distance: u32::MAX };
            for (ti, t) in train.iter().enumerate() {
                let d = hamming(q, t);
                if d < best.distance {
                    best.train_index = ti;
                    best.distance = d;
                }
            }
            best
        })
        .collect())
}

/// Keeps matches with `distance <= max(3 * min_distance, floor)`, preserving order.
pub fn filter_matches(matches: &[Match], floor: u32) -> Vec<Match> {
    let Some(min) = matches.iter().map(|m| m.distance).min() else {
        return Vec::new();
    };
    let threshold = (3 * min).max(floor);
    matches.iter().copied().filter(|m| m.distance <= threshold).collect()
}
