use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::Grid3;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Real samples on the collocation grid, component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid3,
    components: usize,
    values: Vec<f64>,
}

/// Fourier coefficients `c_k` with `f(x) = sum_k c_k e^{2 pi i k.x / L}`,
/// component-major and row-major in the mode index.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid3,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl RealField {
    pub fn zeros(grid: Grid3, components: usize) -> Self {
        RealField {
            grid,
            components,
            values: vec![0.0; components * grid.points()],
        }
    }

    pub fn from_values(grid: Grid3, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 || values.len() != components * grid.points() {
            return Err(Error::param(
                "values",
                format!(
                    "expected {} samples for {} component(s), got {}",
                    components * grid.points(),
                    components,
                    values.len()
                ),
            ));
        }
        Ok(RealField {
            grid,
            components,
            values,
        })
    }

    /// Sample `f(x)` at every grid point; `f` writes `components` values.
    pub fn from_fn<F>(grid: Grid3, components: usize, f: F) -> Self
    where
        F: Fn([f64; 3], &mut [f64]) + Sync,
    {
        let pts = grid.points();
        let mut per_point = vec![0.0; components * pts];
        per_point
            .par_chunks_mut(components)
            .enumerate()
            .for_each(|(idx, out)| f(grid.position(idx), out));
        let mut values = vec![0.0; components * pts];
        for idx in 0..pts {
            for c in 0..components {
                values[c * pts + idx] = per_point[idx * components + c];
            }
        }
        RealField {
            grid,
            components,
            values,
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let p = self.grid.points();
        &self.values[c * p..(c + 1) * p]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let p = self.grid.points();
        &mut self.values[c * p..(c + 1) * p]
    }

    /// Squared Euclidean magnitude across components at a grid point.
    #[inline]
    pub fn magnitude_sq_at(&self, idx: usize) -> f64 {
        let p = self.grid.points();
        (0..self.components)
            .map(|c| self.values[c * p + idx].powi(2))
            .sum()
    }

    #[inline]
    pub fn magnitude_at(&self, idx: usize) -> f64 {
        self.magnitude_sq_at(idx).sqrt()
    }

    pub fn vector_at(&self, idx: usize) -> Vec<f64> {
        let p = self.grid.points();
        (0..self.components).map(|c| self.values[c * p + idx]).collect()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.grid.points()).map(|i| self.magnitude_at(i)).collect()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Riemann-sum integral of one component.
    pub fn integral(&self, c: usize) -> f64 {
        let mut acc = CompensatedSum::new();
        for &v in self.component(c) {
            acc.add(v);
        }
        acc.value() * self.grid.cell_volume()
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid3, components: usize) -> Self {
        SpectralField {
            grid,
            components,
            coeffs: vec![Complex64::new(0.0, 0.0); components * grid.points()],
        }
    }

    pub fn from_coeffs(grid: Grid3, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if components == 0 || coeffs.len() != components * grid.points() {
            return Err(Error::param(
                "coeffs",
                format!(
                    "expected {} coefficients, got {}",
                    components * grid.points(),
                    coeffs.len()
                ),
            ));
        }
        Ok(SpectralField {
            grid,
            components,
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let p = self.grid.points();
        &self.coeffs[c * p..(c + 1) * p]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let p = self.grid.points();
        &mut self.coeffs[c * p..(c + 1) * p]
    }

    /// Extract component `c` as a scalar field.
    pub fn component_field(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid,
            components: 1,
            coeffs: self.component(c).to_vec(),
        }
    }

    /// Concatenate fields on the same grid into one multi-component field.
    pub fn stack(parts: &[SpectralField]) -> Result<SpectralField> {
        let first = parts
            .first()
            .ok_or_else(|| Error::param("parts", "nothing to stack"))?;
        let mut coeffs = Vec::new();
        let mut components = 0;
        for p in parts {
            if p.grid != first.grid {
                return Err(Error::GridMismatch("stack".into()));
            }
            components += p.components;
            coeffs.extend_from_slice(&p.coeffs);
        }
        Ok(SpectralField {
            grid: first.grid,
            components,
            coeffs,
        })
    }

    pub fn require_components(&self, expected: usize) -> Result<()> {
        if self.components != expected {
            return Err(Error::ComponentMismatch {
                expected,
                got: self.components,
            });
        }
        Ok(())
    }

    pub fn require_same_shape(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "n={} L={} vs n={} L={}",
                self.grid.n(),
                self.grid.length(),
                other.grid.n(),
                other.grid.length()
            )));
        }
        other.require_components(self.components)
    }

    /// Apply a per-mode multiplier `m(idx)` to every component.
    pub fn map_modes<F>(&self, m: F) -> SpectralField
    where
        F: Fn(usize) -> Complex64 + Sync,
    {
        let p = self.grid.points();
        let mut out = self.clone();
        out.coeffs
            .par_chunks_mut(p)
            .for_each(|comp| comp.iter_mut().enumerate().for_each(|(i, c)| *c *= m(i)));
        out
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.require_same_shape(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.require_same_shape(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b * s);
    }

    /// Real L^2 inner product `int f . g dx = L^3 sum Re(conj(f_k) g_k)`.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.require_same_shape(other)?;
        let mut acc = CompensatedSum::new();
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            acc.add(a.re * b.re + a.im * b.im);
        }
        Ok(acc.value() * self.grid.volume())
    }

    /// Parseval L^2 norm.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for c in &self.coeffs {
            acc.add(c.norm_sqr());
        }
        (acc.value() * self.grid.volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest `|c(-k) - conj(c(k))|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let p = self.grid.points();
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for c in 0..self.components {
            let comp = &self.coeffs[c * p..(c + 1) * p];
            for (i, v) in comp.iter().enumerate() {
                let j = self.grid.conjugate_index(i);
                worst = worst.max((comp[j] - v.conj()).norm());
            }
        }
        worst / scale
    }

    /// Replace `c(k)` by `(c(k) + conj(c(-k))) / 2`; exact Hermitian symmetry.
    pub fn symmetrize(&mut self) {
        let p = self.grid.points();
        let grid = self.grid;
        for c in 0..self.components {
            let comp = &mut self.coeffs[c * p..(c + 1) * p];
            for i in 0..p {
                let j = grid.conjugate_index(i);
                if j < i {
                    continue;
                }
                let a = comp[i];
                let b = comp[j];
                let s = (a + b.conj()) * 0.5;
                comp[i] = s;
                comp[j] = s.conj();
            }
        }
    }

    /// Zero all modes with `|k_a| > k_max` on some axis.
    pub fn truncate_cube(&mut self, k_max: i64) {
        let grid = self.grid;
        let p = grid.points();
        self.coeffs.par_chunks_mut(p).for_each(|comp| {
            for (i, c) in comp.iter_mut().enumerate() {
                let k = grid.mode(i);
                if k[0].abs() > k_max || k[1].abs() > k_max || k[2].abs() > k_max {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        });
    }

    /// Largest `max_a |k_a|` over modes with a nonzero coefficient.
    pub fn spectral_extent(&self) -> i64 {
        let p = self.grid.points();
        let mut ext = 0;
        for c in 0..self.components {
            for (i, v) in self.coeffs[c * p..(c + 1) * p].iter().enumerate() {
                if v.norm_sqr() > 0.0 {
                    let k = self.grid.mode(i);
                    ext = ext.max(k[0].abs().max(k[1].abs()).max(k[2].abs()));
                }
            }
        }
        ext
    }

    /// Same coefficients on the box `L / lambda`, amplitudes times `amplitude`.
    pub fn on_rescaled_grid(&self, lambda: f64, amplitude: f64) -> Result<SpectralField> {
        let grid = self.grid.rescaled(lambda)?;
        Ok(SpectralField {
            grid,
            components: self.components,
            coeffs: self.coeffs.iter().map(|c| c * amplitude).collect(),
        })
    }

    /// Evaluate the trigonometric interpolant at an arbitrary point.
    pub fn evaluate_at(&self, x: [f64; 3]) -> Vec<f64> {
        let grid = self.grid;
        let p = grid.points();
        let n = grid.n();
        let w = 2.0 * std::f64::consts::PI / grid.length();
        // separable phase tables
        let phase = |a: usize| -> Vec<Complex64> {
            (0..n)
                .map(|i| {
                    if grid.is_nyquist(i) {
                        // Nyquist contributes its real cosine part only
                        Complex64::new((w * grid.wavenumber(i) as f64 * x[a]).cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, w * grid.wavenumber(i) as f64 * x[a])
                    }
                })
                .collect()
        };
        let (e0, e1, e2) = (phase(0), phase(1), phase(2));
        (0..self.components)
            .map(|c| {
                let comp = &self.coeffs[c * p..(c + 1) * p];
                let mut acc = CompensatedSum::new();
                for i0 in 0..n {
                    for i1 in 0..n {
                        let e01 = e0[i0] * e1[i1];
                        let base = (i0 * n + i1) * n;
                        for i2 in 0..n {
                            acc.add((comp[base + i2] * e01 * e2[i2]).re);
                        }
                    }
                }
                acc.value()
            })
            .collect()
    }
}

/// Forward transform of real samples; rejects non-finite input.
pub fn forward_transform(f: &RealField) -> Result<SpectralField> {
    if !f.is_finite() {
        return Err(Error::NonFinite {
            context: "forward_transform input".into(),
        });
    }
    let mut out = forward_unchecked(f);
    out.symmetrize();
    Ok(out)
}

pub(crate) fn forward_unchecked(f: &RealField) -> SpectralField {
    let grid = *f.grid();
    let p = grid.points();
    let plan = grid.fft();
    let scale = 1.0 / p as f64;
    let mut coeffs = Vec::with_capacity(f.components() * p);
    for c in 0..f.components() {
        let mut buf: Vec<Complex64> = f
            .component(c)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        plan.forward(&mut buf);
        buf.iter_mut().for_each(|v| *v *= scale);
        coeffs.extend(buf);
    }
    SpectralField {
        grid,
        components: f.components(),
        coeffs,
    }
}

/// Tolerated relative Hermitian defect in [`inverse_transform`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

/// Inverse transform; rejects spectra that do not describe a real field.
pub fn inverse_transform(f: &SpectralField) -> Result<RealField> {
    let defect = f.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { defect });
    }
    Ok(synthesize(f))
}

/// Inverse transform without the symmetry check, real part retained.
pub fn synthesize(f: &SpectralField) -> RealField {
    let grid = *f.grid();
    let p = grid.points();
    let plan = grid.fft();
    let mut values = Vec::with_capacity(f.components() * p);
    for c in 0..f.components() {
        let mut buf = f.component(c).to_vec();
        plan.inverse(&mut buf);
        values.extend(buf.iter().map(|v| v.re));
    }
    RealField {
        grid,
        components: f.components(),
        values,
    }
}

/// Evaluate a field on a finer grid of `m` points per axis on the same box by
/// zero padding. Nyquist modes of the source are dropped.
pub fn synthesize_padded(f: &SpectralField, m: usize) -> Result<RealField> {
    let src = *f.grid();
    let dst = Grid3::new(m, src.length())?;
    if m < src.n() {
        return Err(Error::param("m", "padding target smaller than source grid"));
    }
    let padded = pad_spectrum(f, &dst);
    Ok(synthesize(&padded))
}

pub(crate) fn pad_spectrum(f: &SpectralField, dst: &Grid3) -> SpectralField {
    let src = *f.grid();
    let ps = src.points();
    let pd = dst.points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); f.components() * pd];
    for c in 0..f.components() {
        let s = &f.coeffs[c * ps..(c + 1) * ps];
        let d = &mut coeffs[c * pd..(c + 1) * pd];
        for (i, v) in s.iter().enumerate() {
            let ii = src.unflat(i);
            if ii.iter().any(|&a| src.is_nyquist(a)) {
                continue;
            }
            let k = src.mode(i);
            let j = dst.flat(
                dst.index_of_wavenumber(k[0]).unwrap(),
                dst.index_of_wavenumber(k[1]).unwrap(),
                dst.index_of_wavenumber(k[2]).unwrap(),
            );
            d[j] = *v;
        }
    }
    SpectralField {
        grid: *dst,
        components: f.components(),
        coeffs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid3 {
        Grid3::new(16, 2.0).unwrap()
    }

    #[test]
    fn constant_maps_to_zero_mode() {
        let g = grid();
        let f = RealField::from_fn(g, 1, |_, out| out[0] = 3.5);
        let s = forward_transform(&f).unwrap();
        assert!((s.coeffs()[0] - Complex64::new(3.5, 0.0)).norm() < 1e-14);
        let rest: f64 = s.coeffs()[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(rest < 1e-14);
    }

    #[test]
    fn cosine_has_two_half_modes() {
        let g = grid();
        let l = g.length();
        let f = RealField::from_fn(g, 1, |x, out| out[0] = (2.0 * PI * x[0] / l).cos());
        let s = forward_transform(&f).unwrap();
        let plus = g.flat(1, 0, 0);
        let minus = g.flat(g.n() - 1, 0, 0);
        assert!((s.coeffs()[plus] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((s.coeffs()[minus] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        let others = s
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != plus && *i != minus)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        assert!(others < 1e-14);
    }

    #[test]
    fn non_finite_input_rejected() {
        let g = grid();
        let mut f = RealField::zeros(g, 1);
        f.values_mut()[7] = f64::NAN;
        assert!(matches!(forward_transform(&f), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn broken_symmetry_rejected() {
        let g = grid();
        let mut s = SpectralField::zeros(g, 1);
        s.coeffs_mut()[g.flat(1, 0, 0)] = Complex64::new(1.0, 0.0);
        assert!(matches!(inverse_transform(&s), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn zero_and_constant_spectra() {
        let g = grid();
        let z = inverse_transform(&SpectralField::zeros(g, 3)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        let mut s = SpectralField::zeros(g, 1);
        s.coeffs_mut()[0] = Complex64::new(-2.0, 0.0);
        let f = inverse_transform(&s).unwrap();
        assert!(f.values().iter().all(|&v| (v + 2.0).abs() < 1e-15));
    }

    #[test]
    fn forward_output_is_exactly_hermitian() {
        let g = grid();
        let f = RealField::from_fn(g, 2, |x, out| {
            out[0] = (x[0] * 3.1).sin() * (x[1] + 0.2).exp();
            out[1] = x[2].powi(2);
        });
        let s = forward_transform(&f).unwrap();
        assert_eq!(s.hermitian_defect(), 0.0);
    }

    #[test]
    fn interpolant_matches_grid_values_and_padding() {
        let g = Grid3::new(8, 1.0).unwrap();
        let f = RealField::from_fn(g, 1, |x, out| {
            out[0] = (2.0 * PI * x[0]).sin() + (4.0 * PI * (x[1] + x[2])).cos()
        });
        let s = forward_transform(&f).unwrap();
        let idx = g.flat(3, 5, 1);
        let v = s.evaluate_at(g.position(idx))[0];
        assert!((v - f.values()[idx]).abs() < 1e-12);
        let fine = synthesize_padded(&s, 16).unwrap();
        let fg = *fine.grid();
        let x = fg.position(fg.flat(3, 7, 2));
        let exact = (2.0 * PI * x[0]).sin() + (4.0 * PI * (x[1] + x[2])).cos();
        assert!((fine.values()[fg.flat(3, 7, 2)] - exact).abs() < 1e-12);
    }
}
