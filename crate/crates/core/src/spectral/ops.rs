use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::SpectralField;
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Leray projection `P = I - d d^T / |d|^2` per mode; the zero mode passes through.
pub fn leray_project(u: &SpectralField) -> Result<SpectralField> {
    u.require_components(3)?;
    let grid = *u.grid();
    let p = grid.points();
    let mut out = u.clone();
    let c = out.coeffs_mut();
    let (c0, rest) = c.split_at_mut(p);
    let (c1, c2) = rest.split_at_mut(p);
    c0.par_iter_mut()
        .zip(c1.par_iter_mut())
        .zip(c2.par_iter_mut())
        .enumerate()
        .for_each(|(i, ((a, b), e))| {
            let d = grid.derivative_frequency(i);
            let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if d2 == 0.0 {
                return;
            }
            let dot = (*a * d[0] + *b * d[1] + *e * d[2]) / d2;
            *a -= dot * d[0];
            *b -= dot * d[1];
            *e -= dot * d[2];
        });
    Ok(out)
}

/// Heat semigroup `e^{t Laplacian}`: factor `exp(-4 pi^2 |xi|^2 t)` per mode.
pub fn heat_propagate(u: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("heat time {t} must be finite and >= 0")));
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    let grid = *u.grid();
    Ok(u.map_modes(|i| Complex64::new(heat_factor(grid.frequency_norm_sq(i), t), 0.0)))
}

#[inline]
pub fn heat_factor(xi_sq: f64, t: f64) -> f64 {
    (-4.0 * PI * PI * xi_sq * t).exp()
}

/// Spectral Laplacian, symbol `-4 pi^2 |xi|^2`.
pub fn laplacian(u: &SpectralField) -> SpectralField {
    let grid = *u.grid();
    u.map_modes(|i| Complex64::new(-4.0 * PI * PI * grid.frequency_norm_sq(i), 0.0))
}

/// Inverse Laplacian on mean-zero fields; the zero mode is set to zero.
pub fn inverse_laplacian(u: &SpectralField) -> SpectralField {
    let grid = *u.grid();
    u.map_modes(|i| {
        let s = grid.frequency_norm_sq(i);
        if s == 0.0 {
            ZERO
        } else {
            Complex64::new(-1.0 / (4.0 * PI * PI * s), 0.0)
        }
    })
}

/// Partial derivative along axis `a` of every component.
pub fn partial(u: &SpectralField, a: usize) -> SpectralField {
    let grid = *u.grid();
    u.map_modes(|i| Complex64::new(0.0, TWO_PI * grid.derivative_frequency(i)[a]))
}

/// Gradient of a scalar field.
pub fn gradient(f: &SpectralField) -> Result<SpectralField> {
    f.require_components(1)?;
    SpectralField::stack(&[partial(f, 0), partial(f, 1), partial(f, 2)])
}

/// Divergence of a vector field.
pub fn divergence(u: &SpectralField) -> Result<SpectralField> {
    u.require_components(3)?;
    let grid = *u.grid();
    let p = grid.points();
    let c = u.coeffs();
    let coeffs: Vec<Complex64> = (0..p)
        .into_par_iter()
        .map(|i| {
            let d = grid.derivative_frequency(i);
            Complex64::new(0.0, TWO_PI)
                * (c[i] * d[0] + c[p + i] * d[1] + c[2 * p + i] * d[2])
        })
        .collect();
    SpectralField::from_coeffs(grid, 1, coeffs)
}

/// Curl of a vector field.
pub fn curl(u: &SpectralField) -> Result<SpectralField> {
    u.require_components(3)?;
    let grid = *u.grid();
    let p = grid.points();
    let c = u.coeffs();
    let mut out = vec![ZERO; 3 * p];
    let (o0, rest) = out.split_at_mut(p);
    let (o1, o2) = rest.split_at_mut(p);
    o0.par_iter_mut()
        .zip(o1.par_iter_mut())
        .zip(o2.par_iter_mut())
        .enumerate()
        .for_each(|(i, ((w0, w1), w2))| {
            let d = grid.derivative_frequency(i);
            let ik = |x: f64| Complex64::new(0.0, TWO_PI * x);
            let (a, b, e) = (c[i], c[p + i], c[2 * p + i]);
            *w0 = ik(d[1]) * e - ik(d[2]) * b;
            *w1 = ik(d[2]) * a - ik(d[0]) * e;
            *w2 = ik(d[0]) * b - ik(d[1]) * a;
        });
    SpectralField::from_coeffs(grid, 3, out)
}

/// Velocity from vorticity for a divergence-free, mean-zero field: `u = -Lap^{-1} curl w`.
pub fn biot_savart(w: &SpectralField) -> Result<SpectralField> {
    let c = curl(w)?;
    Ok(inverse_laplacian(&c).scaled(-1.0))
}

/// Jacobian `du_i/dx_j` stored as nine components, index `3 i + j`.
pub fn jacobian(u: &SpectralField) -> Result<SpectralField> {
    u.require_components(3)?;
    let mut parts = Vec::with_capacity(9);
    for i in 0..3 {
        let ui = u.component_field(i);
        for j in 0..3 {
            parts.push(partial(&ui, j));
        }
    }
    SpectralField::stack(&parts)
}

/// `||div u||_2 / ||grad u||_2` (zero for the zero field).
pub fn relative_divergence(u: &SpectralField) -> Result<f64> {
    let d = divergence(u)?.l2_norm();
    let g = jacobian(u)?.l2_norm();
    Ok(if g == 0.0 { 0.0 } else { d / g })
}

/// Integer cutoff of the cubic dealiasing mask for a fraction of Nyquist.
pub fn dealias_cutoff(n: usize, fraction: f64) -> i64 {
    (fraction * (n / 2) as f64 + 1e-9).floor() as i64
}

/// Apply the cubic dealiasing mask `|k_a| <= floor(fraction * n / 2)`.
pub fn dealias(u: &SpectralField, fraction: f64) -> SpectralField {
    let mut out = u.clone();
    out.truncate_cube(dealias_cutoff(u.grid().n(), fraction));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::{forward_transform, inverse_transform, RealField};
    use crate::spectral::grid::Grid3;

    fn shear(g: Grid3) -> SpectralField {
        let l = g.length();
        let f = RealField::from_fn(g, 3, |x, out| {
            out[0] = (2.0 * PI * x[1] / l).sin();
            out[1] = 0.0;
            out[2] = 0.0;
        });
        forward_transform(&f).unwrap()
    }

    #[test]
    fn shear_curl_is_closed_form() {
        let g = Grid3::new(16, 3.0).unwrap();
        let l = g.length();
        let w = inverse_transform(&curl(&shear(g)).unwrap()).unwrap();
        let p = g.points();
        for idx in 0..p {
            let x = g.position(idx);
            let expect = -(2.0 * PI / l) * (2.0 * PI * x[1] / l).cos();
            assert!(w.values()[idx].abs() < 1e-12);
            assert!(w.values()[p + idx].abs() < 1e-12);
            assert!((w.values()[2 * p + idx] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn shear_is_fixed_by_leray() {
        let g = Grid3::new(16, 1.0).unwrap();
        let u = shear(g);
        let v = leray_project(&u).unwrap();
        assert!(v.sub(&u).unwrap().l2_norm() < 1e-14);
    }

    #[test]
    fn scalar_inputs_rejected() {
        let g = Grid3::new(8, 1.0).unwrap();
        let s = SpectralField::zeros(g, 1);
        assert!(leray_project(&s).is_err());
        assert!(curl(&s).is_err());
        assert!(heat_propagate(&s, -1.0).is_err());
    }

    #[test]
    fn heat_scales_single_mode() {
        let g = Grid3::new(8, 2.0).unwrap();
        let mut s = SpectralField::zeros(g, 1);
        let i = g.flat(1, 2, 0);
        let j = g.conjugate_index(i);
        s.coeffs_mut()[i] = Complex64::new(1.0, 0.5);
        s.coeffs_mut()[j] = Complex64::new(1.0, -0.5);
        let t = 0.03;
        let h = heat_propagate(&s, t).unwrap();
        let f = (-4.0 * PI * PI * (0.25 + 1.0) * t).exp();
        assert!((h.coeffs()[i] - Complex64::new(f, 0.5 * f)).norm() < 1e-15);
    }

    #[test]
    fn dealias_cutoffs() {
        assert_eq!(dealias_cutoff(64, 2.0 / 3.0), 21);
        assert_eq!(dealias_cutoff(32, 2.0 / 3.0), 10);
        assert_eq!(dealias_cutoff(32, 1.0), 16);
    }
}
