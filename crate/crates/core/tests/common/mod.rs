#![allow(dead_code)]

use cns_core::spectral::{forward_transform, Grid3, RealField, SpectralField};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform grid samples in [-1, 1], full spectrum.
pub fn random_real(grid: Grid3, components: usize, seed: u64) -> SpectralField {
    let mut r = rng(seed);
    let values = (0..components * grid.points())
        .map(|_| r.gen_range(-1.0..1.0))
        .collect();
    forward_transform(&RealField::from_values(grid, components, values).unwrap()).unwrap()
}

/// Random field with modes restricted to `|k|_inf <= k_max`.
pub fn random_band_limited(grid: Grid3, components: usize, k_max: i64, seed: u64) -> SpectralField {
    let mut f = random_real(grid, components, seed);
    f.truncate_cube(k_max);
    f
}

/// Random field with modes restricted to the integer ball `|k| <= k_max`.
pub fn random_ball(grid: Grid3, components: usize, k_max: f64, seed: u64) -> SpectralField {
    let f = random_real(grid, components, seed);
    f.map_modes(|i| {
        let k2 = grid.mode_norm_sq(i) as f64;
        num_complex::Complex64::new(if k2 <= k_max * k_max { 1.0 } else { 0.0 }, 0.0)
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn rel_field(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = a.sub(b).unwrap().l2_norm();
    let s = a.l2_norm().max(b.l2_norm());
    if s == 0.0 {
        d
    } else {
        d / s
    }
}
