use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fft::{plan_for, Fft3};
use crate::error::{Error, Result};

/// Uniform collocation grid on the periodic box `[0, L)^3`.
///
/// Mode index `i` along an axis carries the integer wavenumber `k = i` for
/// `i < n/2` and `k = i - n` otherwise, so the Nyquist index `n/2` is
/// represented as `-n/2`. The physical frequency is `xi = k / L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    n: usize,
    length: f64,
}

impl Grid3 {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::param("n", format!("{n} must be a power of two >= 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::param("L", format!("{length} must be positive")));
        }
        Ok(Grid3 { n, length })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn points(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    #[inline]
    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    /// Largest resolved frequency `n / (2L)`.
    pub fn nyquist(&self) -> f64 {
        self.n as f64 / (2.0 * self.length)
    }

    /// Same number of points on a box `L / lambda`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        Grid3::new(self.n, self.length / lambda)
    }

    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Index along one axis for integer wavenumber `k`, if representable.
    pub fn index_of_wavenumber(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k >= -half && k < half {
            Some(k.rem_euclid(self.n as i64) as usize)
        } else {
            None
        }
    }

    #[inline]
    pub fn flat(&self, i0: usize, i1: usize, i2: usize) -> usize {
        (i0 * self.n + i1) * self.n + i2
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let [a, b, c] = self.unflat(idx);
        [self.wavenumber(a), self.wavenumber(b), self.wavenumber(c)]
    }

    /// Frequency vector `k / L` of a flat mode index.
    #[inline]
    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let k = self.mode(idx);
        let inv = 1.0 / self.length;
        [k[0] as f64 * inv, k[1] as f64 * inv, k[2] as f64 * inv]
    }

    /// Frequency used by first-order derivatives: Nyquist components are zeroed
    /// so that odd symbols keep real fields real.
    #[inline]
    pub fn derivative_frequency(&self, idx: usize) -> [f64; 3] {
        let ii = self.unflat(idx);
        let mut xi = self.frequency(idx);
        for a in 0..3 {
            if self.is_nyquist(ii[a]) {
                xi[a] = 0.0;
            }
        }
        xi
    }

    #[inline]
    pub fn frequency_norm_sq(&self, idx: usize) -> f64 {
        let xi = self.frequency(idx);
        xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
    }

    /// Integer `|k|^2`.
    #[inline]
    pub fn mode_norm_sq(&self, idx: usize) -> i64 {
        let k = self.mode(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Flat index of the mode `-k`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let [a, b, c] = self.unflat(idx);
        self.flat((n - a) % n, (n - b) % n, (n - c) % n)
    }

    /// Physical coordinates of a flat grid point.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let [a, b, c] = self.unflat(idx);
        let h = self.spacing();
        [a as f64 * h, b as f64 * h, c as f64 * h]
    }

    /// Minimum-image displacement `x - center` on the torus.
    #[inline]
    pub fn periodic_offset(&self, x: [f64; 3], center: [f64; 3]) -> [f64; 3] {
        let l = self.length;
        let mut d = [0.0; 3];
        for a in 0..3 {
            let mut v = (x[a] - center[a]).rem_euclid(l);
            if v >= 0.5 * l {
                v -= l;
            }
            d[a] = v;
        }
        d
    }

    #[inline]
    pub fn periodic_distance(&self, x: [f64; 3], center: [f64; 3]) -> f64 {
        let d = self.periodic_offset(x, center);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// Wrap a point into the fundamental cell.
    pub fn wrap(&self, x: [f64; 3]) -> [f64; 3] {
        let l = self.length;
        [x[0].rem_euclid(l), x[1].rem_euclid(l), x[2].rem_euclid(l)]
    }

    pub fn fft(&self) -> Arc<Fft3> {
        plan_for(self.n)
    }

    /// Dyadic ladder `2^k / L` from `k_min` to `k_max` inclusive.
    pub fn dyadic_ladder(&self, k_min: i32, k_max: i32) -> Vec<f64> {
        (k_min..=k_max)
            .map(|k| 2f64.powi(k) / self.length)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid3::new(4, 1.0).is_err());
        assert!(Grid3::new(24, 1.0).is_err());
        assert!(Grid3::new(16, 0.0).is_err());
        assert!(Grid3::new(16, f64::NAN).is_err());
        assert!(Grid3::new(16, 2.0).is_ok());
    }

    #[test]
    fn wavenumbers_are_centered() {
        let g = Grid3::new(8, 2.0).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.nyquist(), 2.0);
        for k in -4..4 {
            assert_eq!(g.wavenumber(g.index_of_wavenumber(k).unwrap()), k);
        }
        assert!(g.index_of_wavenumber(4).is_none());
    }

    #[test]
    fn conjugate_index_negates_mode() {
        let g = Grid3::new(8, 1.0).unwrap();
        for idx in [0, 1, 37, 100, 511] {
            let k = g.mode(idx);
            let kc = g.mode(g.conjugate_index(idx));
            for a in 0..3 {
                let expect = if k[a] == -4 { -4 } else { -k[a] };
                assert_eq!(kc[a], expect);
            }
        }
    }

    #[test]
    fn periodic_offset_is_minimum_image() {
        let g = Grid3::new(8, 1.0).unwrap();
        let d = g.periodic_offset([0.95, 0.1, 0.5], [0.05, 0.9, 0.5]);
        assert!((d[0] + 0.1).abs() < 1e-12);
        assert!((d[1] - 0.2).abs() < 1e-12);
        assert_eq!(d[2], 0.0);
    }
}
