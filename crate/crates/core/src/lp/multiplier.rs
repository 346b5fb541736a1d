use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::profile::BumpProfile;
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

type SymbolFn = dyn Fn([f64; 3]) -> Complex64 + Send + Sync;

/// A Fourier multiplier `m(xi)` with a nominal support radius `N` and bound `M`.
#[derive(Clone)]
pub struct MultiplierSymbol {
    eval: Arc<SymbolFn>,
    support_radius: f64,
    bound: f64,
}

impl std::fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiplierSymbol")
            .field("support_radius", &self.support_radius)
            .field("bound", &self.bound)
            .finish()
    }
}

impl MultiplierSymbol {
    pub fn new<F>(support_radius: f64, bound: f64, eval: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> Complex64 + Send + Sync + 'static,
    {
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(Error::param("N", "support radius must be positive"));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::param("M", "bound must be positive"));
        }
        Ok(MultiplierSymbol {
            eval: Arc::new(eval),
            support_radius,
            bound,
        })
    }

    /// The `P<=N` symbol `phi(|xi| / N)`.
    pub fn leq(profile: BumpProfile, n: f64) -> Result<Self> {
        Self::new(n, 1.0, move |xi| {
            let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
            Complex64::new(profile.eval(r / n), 0.0)
        })
    }

    /// `2 pi i xi_j`, the symbol of `d/dx_j`, with unit support radius bookkeeping.
    pub fn derivative(axis: usize, n: f64) -> Result<Self> {
        if axis > 2 {
            return Err(Error::param("axis", "must be 0, 1 or 2"));
        }
        Self::new(n, 2.0 * PI * n, move |xi| Complex64::new(0.0, 2.0 * PI * xi[axis]))
    }

    pub fn eval(&self, xi: [f64; 3]) -> Complex64 {
        (self.eval)(xi)
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Pointwise product symbol `m m'`.
    pub fn compose(&self, other: &MultiplierSymbol) -> MultiplierSymbol {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        MultiplierSymbol {
            eval: Arc::new(move |xi| a(xi) * b(xi)),
            support_radius: self.support_radius.min(other.support_radius),
            bound: self.bound * other.bound,
        }
    }
}

/// `T_m f`: per-mode product, then exact Hermitian symmetrization so that odd
/// symbols lose their unrepresentable Nyquist parts.
pub fn apply_multiplier(m: &MultiplierSymbol, f: &SpectralField) -> Result<SpectralField> {
    let g = *f.grid();
    let sym: Vec<Complex64> = (0..g.points()).map(|i| m.eval(g.frequency(i))).collect();
    if sym.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return Err(Error::NonFinite {
            context: "multiplier symbol on grid spectrum".into(),
        });
    }
    let mut out = f.map_modes(|i| sym[i]);
    out.symmetrize();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{forward_transform, partial, Grid3, RealField};

    #[test]
    fn derivative_symbol_matches_partial() {
        let g = Grid3::new(16, 1.5).unwrap();
        let f = RealField::from_fn(g, 1, |x, o| o[0] = (x[0] * 4.0).sin() * (x[2] * 2.0).cos());
        let s = forward_transform(&f).unwrap();
        for a in 0..3 {
            let m = MultiplierSymbol::derivative(a, 1.0).unwrap();
            let d = apply_multiplier(&m, &s).unwrap();
            let e = partial(&s, a);
            assert!(d.sub(&e).unwrap().l2_norm() <= 1e-12 * e.l2_norm().max(1.0));
        }
    }
}
