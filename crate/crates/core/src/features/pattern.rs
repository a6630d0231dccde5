//! BRIEF sampling pattern.
//!
//! 256 point pairs `(px, py, qx, qy)` drawn from an isotropic Gaussian with
//! sigma = 31 / 5 pixels around the keypoint, rounded to integers and kept
//! inside a disc of radius 15. The draw uses `ChaCha8Rng` seeded with
//! [`PATTERN_SEED`] and a Box-Muller transform on 53-bit uniforms; pairs with
//! `p == q` are redrawn. [`generate_pattern`] reproduces the table.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PATTERN_SEED: u64 = 0x0B5E_ED5E_ED00_0256;
pub const PATCH_SIZE: usize = 31;
pub const PATTERN_RADIUS: i32 = 15;

pub fn generate_pattern(seed: u64) -> Vec<[i8; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = PATCH_SIZE as f64 / 5.0;
    let mut uniform = move || ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
    let mut gaussian_point = move || loop {
        let u1 = uniform();
        let u2 = uniform();
        let r = (-2.0 * u1.ln()).sqrt() * sigma;
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        let x = (r * c).round() as i32;
        let y = (r * s).round() as i32;
        if x * x + y * y <= PATTERN_RADIUS * PATTERN_RADIUS {
            return (x as i8, y as i8);
        }
    };
    let mut out = Vec::with_capacity(256);
    while out.len() < 256 {
        let p = gaussian_point();
        let q = gaussian_point();
        if p != q {
            out.push([p.0, p.1, q.0, q.1]);
        }
    }
    out
}

/// Generated by [`generate_pattern`] with [`PATTERN_SEED`].
#[rustfmt::skip]
pub const PATTERN: [[i8; 4]; 256] = [
    [-2, 8, 5, 4], [10, 11, -1, -1], [-5, -1, -3, -3], [-4, -9, 6, 0],
    [3, -3, 4, -3], [-3, 0, 9, -7], [8, -3, -8, -3], [4, 3, 0, -3],
    [2, -3, -7, -8], [5, 5, -1, -1], [-8, 1, -6, 0], [-8, -6, 3, 9],
    [3, 9, 3, -9], [-8, 6, -2, -3], [-6, -3, 1, -12], [6, -11, 7, 4],
    [10, -4, 3, -6], [10, 1, 1, -3], [-1, 2, 7, 0], [1, 4, -5, -6],
    [-5, -4, -11, -7], [-2, 3, -3, -1], [-6, -5, -5, 0], [0, -2, 1, 9],
    [2, 4, -3, 1], [2, 3, 6, -11], [-4, -3, -8, -1], [-2, -8, 7, 6],
    [-2, -4, 7, 2], [0, -10, 5, 1], [-7, 9, -7, 3], [7, 10, 3, -1],
    [-3, -9, 2, -2], [-5, -9, 0, -15], [7, -6, 0, -8], [14, -1, 1, -3],
    [2, -10, 4, 0], [-2, 1, -6, -1], [1, -6, 6, 3], [-2, 6, 2, 7],
    [-2, -7, -5, 0], [3, 3, -2, -4], [3, -2, 0, -8], [2, -5, -8, 8],
    [-7, 4, 6, 8], [-12, -6, 0, -6], [3, 1, -3, -4], [-1, -1, 9, -6],
    [-1, 6, 1, -1], [2, 3, -5, -5], [-13, -5, -1, -5], [-3, -4, -1, -2],
    [6, 7, -4, -4], [7, -10, 6, 4], [7, -2, 3, 2], [-2, 5, 0, -10],
    [-8, 3, 5, 3], [-8, 5, 7, 9], [-1, 3, -9, 3], [-3, -10, -2, -6],
    [-11, 9, -3, -3], [-6, -3, 0, -1], [4, 2, 4, 6], [10, 6, 2, -3],
    [-7, 10, 9, 4], [4, -7, -6, 0], [1, -2, -7, -4], [3, 7, 0, 1],
    [1, -2, -1, 2], [-3, 0, -3, -2], [-2, -7, 5, 1], [3, 2, -1, -2],
    [2, 0, -3, -6], [-7, -8, 2, 3], [-7, -4, -3, -11], [-6, 0, 7, -2],
    [0, -7, 9, 2], [-2, -8, 2, 0], [-7, 5, -1, 1], [4, 3, 9, -5],
    [-3, 2, 5, -6], [4, 6, 4, 1], [6, 4, -5, 3], [3, 6, 4, 5],
    [-2, 8, -2, -7], [-8, 1, -2, -3], [9, 1, -1, -6], [3, 6, 8, 3],
    [8, -6, -2, -7], [2, 5, 9, 2], [1, -1, 0, -14], [-6, 4, -3, -3],
    [4, 9, -13, 0], [-2, -5, 1, -6], [-4, 6, -5, 6], [-2, -2, 8, 2],
    [11, 9, 6, 6], [3, 2, -2, 0], [2, 6, 3, -3], [13, 5, -4, 2],
    [4, 3, 5, 1], [4, -3, 3, -11], [6, -1, 4, 5], [-6, 6, 0, 1],
    [1, -2, 1, -3], [3, -2, -3, 2], [1, 5, 0, 2], [5, 9, 9, 1],
    [1, 9, -2, -5], [1, -8, 4, 5], [-8, 7, -3, -1], [8, -4, 7, -1],
    [6, 4, -2, -5], [0, 2, -5, -11], [2, 0, -2, 9], [-12, 2, 1, -8],
    [-1, 6, -5, 3], [1, -7, -9, -7], [-8, 6, 2, -1], [0, -3, -5, 5],
    [5, -11, -5, -6], [7, 4, 3, 14], [-8, 0, -5, 0], [3, -3, 8, -6],
    [-5, 2, -9, -1], [-6, 4, -4, 3], [-6, 1, 4, -3], [-2, -8, -9, -11],
    [0, -4, 10, 1], [-2, -2, -9, -1], [-6, -1, 1, -8], [1, -5, 1, 2],
    [-1, 0, 9, -8], [-5, -4, 7, 0], [4, -7, 7, 3], [1, -13, 11, 5],
    [-3, 6, 7, 5], [5, 2, -6, 9], [8, 4, 2, 2], [0, -5, 6, -9],
    [-4, -13, 7, 1], [-4, -6, -3, 7], [-1, 13, -7, -9], [0, -9, 9, 1],
    [6, 2, -2, -9], [2, 0, 0, -10], [-6, -6, -4, -7], [3, 0, -7, -11],
    [5, 6, 12, -4], [8, 3, -8, -3], [-5, -9, 6, 0], [-1, 2, -10, 7],
    [-6, -3, 7, 2], [-3, 11, 4, 5], [-6, 7, 3, 3], [6, 1, 9, -9],
    [0, -6, 4, -7], [5, 2, -2, 3], [5, -2, 3, -8], [3, -2, 8, 4],
    [-4, -4, 0, 0], [2, -4, 3, -2], [-3, 6, 8, 4], [13, -6, 4, -4],
    [-7, 6, 2, -4], [1, -3, 0, -1], [5, 0, 0, -2], [0, 2, -3, -12],
    [12, -8, -5, 1], [3, -12, -1, 0], [8, 7, -1, 2], [6, -9, -5, -1],
    [-5, 8, 3, 0], [6, -5, 3, 1], [0, 0, 1, -1], [4, 8, 2, 0],
    [-12, -3, 12, 0], [2, -1, 11, 8], [8, -9, 1, -2], [-1, -8, 3, -7],
    [1, 3, -2, 3], [4, 1, -2, -7], [-8, 8, -2, 1], [3, 6, 0, 0],
    [-3, 1, -2, 3], [-7, 4, -7, 5], [6, 0, 7, -6], [-2, 0, -7, -5],
    [5, -6, 10, 5], [-4, -7, 1, -3], [-3, -8, 3, 3], [8, 1, 7, 0],
    [-9, 6, 3, -1], [3, 0, 5, 2], [0, -5, 4, 2], [9, 1, 8, 4],
    [4, -1, -8, 12], [-3, 2, 9, -10], [-3, -7, -4, -1], [-8, 5, -1, 10],
    [-9, 3, 0, 1], [-2, -1, 9, 6], [5, 4, 0, 0], [4, 11, 3, 9],
    [-4, 0, 1, -1], [-2, 7, -1, -5], [2, -3, 5, 1], [2, -6, 2, 8],
    [-1, 2, 3, 2], [1, 2, 1, -11], [3, 6, -3, -2], [-8, 9, 7, -2],
    [-5, -6, 0, 7], [0, -3, 7, 1], [-1, 12, -3, 3], [-1, -11, -4, -2],
    [0, 8, 14, -4], [4, -10, -1, 8], [0, -1, 0, 0], [-2, -3, 8, -1],
    [-1, -5, 6, 4], [-9, 0, 13, -5], [-5, 6, -1, -3], [2, 4, 8, 12],
    [6, -1, -11, 3], [1, 8, 11, -5], [-6, 7, -8, -3], [3, -8, -1, 7],
    [4, -8, -2, 5], [-9, -8, -3, -4], [3, -6, 6, -2], [-12, -5, -6, -8],
    [-2, 5, -3, -1], [5, -14, 3, 3], [6, 5, 4, -4], [12, 4, -3, -10],
    [5, 0, -4, 6], [7, 10, 5, -1], [5, -1, -2, -1], [0, 2, 0, -2],
    [-4, 5, -6, -2], [-1, -8, -1, 2], [-6, -6, 4, -5], [9, 2, -5, -1],
    [2, -3, -11, -2], [8, -2, 6, 6], [-4, 1, 3, -2], [-5, -2, 6, 5],
    [8, 1, 13, -6], [-8, -6, -5, -5], [1, 9, 5, -2], [3, -4, -14, -1],
    [-8, -5, 3, -2], [2, -5, -6, 4], [3, -3, 2, 7], [-3, -4, 1, 4],
];
