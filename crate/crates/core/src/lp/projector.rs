use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use super::profile::BumpProfile;
use crate::error::{Error, Result};
use crate::spectral::{Grid3, SpectralField};

/// Littlewood-Paley projections `P<=N`, `P_N = P<=N - P<=N/2` and
/// `P~_N = P<=2N - P<=N/4` on one grid, with per-`N` symbol caches.
pub struct LpProjector {
    profile: BumpProfile,
    grid: Grid3,
    // keyed by the bit pattern of N; values indexed by flat mode
    leq_cache: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
}

fn check_frequency(n: f64) -> Result<()> {
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::param("N", format!("frequency {n} must be positive")));
    }
    Ok(())
}

impl LpProjector {
    pub fn new(grid: Grid3) -> Self {
        Self::with_profile(grid, BumpProfile::new())
    }

    pub fn with_profile(grid: Grid3, profile: BumpProfile) -> Self {
        LpProjector {
            profile,
            grid,
            leq_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn profile(&self) -> &BumpProfile {
        &self.profile
    }

    /// Symbol `phi(|xi| / N)` over flat mode indices.
    pub fn leq_symbol(&self, n: f64) -> Result<Arc<Vec<f64>>> {
        check_frequency(n)?;
        let key = n.to_bits();
        if let Some(s) = self.leq_cache.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let g = self.grid;
        let l = g.length();
        let mut radial: HashMap<i64, f64> = HashMap::new();
        let sym: Vec<f64> = (0..g.points())
            .map(|i| {
                let k2 = g.mode_norm_sq(i);
                *radial
                    .entry(k2)
                    .or_insert_with(|| self.profile.eval((k2 as f64).sqrt() / (l * n)))
            })
            .collect();
        let sym = Arc::new(sym);
        self.leq_cache.lock().unwrap().insert(key, sym.clone());
        Ok(sym)
    }

    pub fn band_symbol(&self, n: f64) -> Result<Vec<f64>> {
        let a = self.leq_symbol(n)?;
        let b = self.leq_symbol(n / 2.0)?;
        Ok(a.iter().zip(b.iter()).map(|(x, y)| x - y).collect())
    }

    pub fn tilde_symbol(&self, n: f64) -> Result<Vec<f64>> {
        let a = self.leq_symbol(2.0 * n)?;
        let b = self.leq_symbol(n / 4.0)?;
        Ok(a.iter().zip(b.iter()).map(|(x, y)| x - y).collect())
    }

    fn apply(&self, f: &SpectralField, sym: &[f64]) -> Result<SpectralField> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch("projector built for another grid".into()));
        }
        Ok(f.map_modes(|i| Complex64::new(sym[i], 0.0)))
    }

    pub fn project_leq(&self, f: &SpectralField, n: f64) -> Result<SpectralField> {
        let s = self.leq_symbol(n)?;
        self.apply(f, &s)
    }

    pub fn project_greater(&self, f: &SpectralField, n: f64) -> Result<SpectralField> {
        let s = self.leq_symbol(n)?;
        let hi: Vec<f64> = s.iter().map(|v| 1.0 - v).collect();
        self.apply(f, &hi)
    }

    pub fn project_band(&self, f: &SpectralField, n: f64) -> Result<SpectralField> {
        let s = self.band_symbol(n)?;
        self.apply(f, &s)
    }

    pub fn project_tilde(&self, f: &SpectralField, n: f64) -> Result<SpectralField> {
        let s = self.tilde_symbol(n)?;
        self.apply(f, &s)
    }
}

/// Which dyadic projection a check or report refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    Leq,
    Band,
    Tilde,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_symbol_support() {
        let g = Grid3::new(16, 1.0).unwrap();
        let lp = LpProjector::new(g);
        let n = 4.0;
        let s = lp.band_symbol(n).unwrap();
        for i in 0..g.points() {
            let r = g.frequency_norm_sq(i).sqrt();
            if r <= n / 4.0 || r >= n {
                assert_eq!(s[i], 0.0);
            }
        }
        assert!(lp.project_leq(&SpectralField::zeros(g, 1), 0.0).is_err());
    }
}
