use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    curl, dealias_cutoff, forward_unchecked, laplacian, leray_project, relative_divergence,
    synthesize, Grid3, RealField, SpectralField,
};

/// Divergence above this relative size is rejected by the public operators.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-8;

/// Physical-space samples of a dealiased vector field.
pub(crate) fn physical_dealiased(u: &SpectralField, fraction: f64) -> (SpectralField, RealField) {
    let mut ud = u.clone();
    ud.truncate_cube(dealias_cutoff(u.grid().n(), fraction));
    let phys = synthesize(&ud);
    (ud, phys)
}

/// Spectrum of the pointwise product of two real sample arrays, masked.
fn product_spectrum(grid: Grid3, a: &[f64], b: &[f64], k_max: i64) -> SpectralField {
    let values: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let f = RealField::from_values(grid, 1, values).expect("sample count matches grid");
    let mut s = forward_unchecked(&f);
    s.symmetrize();
    s.truncate_cube(k_max);
    s
}

/// Symmetric stress `u_i u_j` in the order `00, 01, 02, 11, 12, 22`.
pub(crate) fn stress(phys: &RealField, k_max: i64) -> Vec<SpectralField> {
    let g = *phys.grid();
    let mut out = Vec::with_capacity(6);
    for i in 0..3 {
        for j in i..3 {
            out.push(product_spectrum(g, phys.component(i), phys.component(j), k_max));
        }
    }
    out
}

#[inline]
pub(crate) fn stress_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// `-P div(u (x) u)` plus the grid maximum of `|u|`.
pub(crate) fn nonlinear_eval(u: &SpectralField, fraction: f64) -> (SpectralField, f64) {
    let grid = *u.grid();
    let k_max = dealias_cutoff(grid.n(), fraction);
    let (_, phys) = physical_dealiased(u, fraction);
    let linf = phys.magnitudes().into_iter().fold(0.0, f64::max);
    let t = stress(&phys, k_max);
    let p = grid.points();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut div = SpectralField::zeros(grid, 3);
    {
        let c = div.coeffs_mut();
        for i in 0..3 {
            for idx in 0..p {
                let d = grid.derivative_frequency(idx);
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..3 {
                    acc += t[stress_index(i, j)].coeffs()[idx] * d[j];
                }
                c[i * p + idx] = Complex64::new(0.0, -two_pi) * acc;
            }
        }
    }
    let mut out = leray_project(&div).expect("three components");
    out.truncate_cube(k_max);
    (out, linf)
}

fn check_divergence(u: &SpectralField) -> Result<()> {
    let rel = relative_divergence(u)?;
    if rel > DIVERGENCE_TOLERANCE {
        return Err(Error::NotDivergenceFree { relative: rel });
    }
    Ok(())
}

/// `-P div(u (x) u)` with products formed in physical space on the dealiased field.
pub fn nonlinear_term(u: &SpectralField, fraction: f64) -> Result<SpectralField> {
    u.require_components(3)?;
    check_divergence(u)?;
    Ok(nonlinear_eval(u, fraction).0)
}

/// Full velocity right-hand side `Lap u - P div(u (x) u)`.
pub fn velocity_rhs(u: &SpectralField, fraction: f64) -> Result<SpectralField> {
    let n = nonlinear_term(u, fraction)?;
    laplacian(u).add(&n)
}

/// Zero-mean pressure `p = -Lap^{-1} d_i d_j (u_i u_j)`.
pub fn pressure_field(u: &SpectralField, fraction: f64) -> Result<SpectralField> {
    u.require_components(3)?;
    check_divergence(u)?;
    let grid = *u.grid();
    let k_max = dealias_cutoff(grid.n(), fraction);
    let (_, phys) = physical_dealiased(u, fraction);
    let t = stress(&phys, k_max);
    let p = grid.points();
    let coeffs = (0..p)
        .map(|idx| {
            let d = grid.derivative_frequency(idx);
            let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if d2 == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..3 {
                for j in 0..3 {
                    acc += t[stress_index(i, j)].coeffs()[idx] * (d[i] * d[j]);
                }
            }
            -acc / d2
        })
        .collect();
    SpectralField::from_coeffs(grid, 1, coeffs)
}

/// `(u . grad) u`, dealiased.
pub fn advection(u: &SpectralField, fraction: f64) -> Result<SpectralField> {
    transport(u, u, fraction)
}

/// `(a . grad) b` with products on the dealiased fields.
pub(crate) fn transport(a: &SpectralField, b: &SpectralField, fraction: f64) -> Result<SpectralField> {
    a.require_components(3)?;
    b.require_components(3)?;
    let grid = *a.grid();
    let k_max = dealias_cutoff(grid.n(), fraction);
    let (_, pa) = physical_dealiased(a, fraction);
    let (bd, _) = physical_dealiased(b, fraction);
    let p = grid.points();
    let mut out = Vec::with_capacity(3);
    for i in 0..3 {
        let bi = bd.component_field(i);
        let mut acc = vec![0.0; p];
        for j in 0..3 {
            let dj = synthesize(&crate::spectral::partial(&bi, j));
            for (s, (x, y)) in acc.iter_mut().zip(pa.component(j).iter().zip(dj.values())) {
                *s += x * y;
            }
        }
        let f = RealField::from_values(grid, 1, acc)?;
        let mut s = forward_unchecked(&f);
        s.symmetrize();
        s.truncate_cube(k_max);
        out.push(s);
    }
    SpectralField::stack(&out)
}

/// Momentum residual `du/dt + (u . grad) u - Lap u + grad p` for a supplied `du/dt`.
pub fn momentum_residual(u: &SpectralField, dudt: &SpectralField, fraction: f64) -> Result<SpectralField> {
    let adv = advection(u, fraction)?;
    let p = pressure_field(u, fraction)?;
    let gp = crate::spectral::gradient(&p)?;
    dudt.add(&adv)?.sub(&laplacian(u))?.add(&gp)
}

/// Vorticity right-hand side `Lap w - (u . grad) w + (w . grad) u`.
pub fn vorticity_rhs(u: &SpectralField, w: &SpectralField, fraction: f64) -> Result<SpectralField> {
    u.require_components(3)?;
    w.require_components(3)?;
    let c = curl(u)?;
    let scale = c.l2_norm().max(w.l2_norm());
    if scale > 0.0 && c.sub(w)?.l2_norm() > 1e-8 * scale {
        return Err(Error::Precondition(
            "vorticity does not match the curl of the velocity".into(),
        ));
    }
    vorticity_rhs_unchecked(u, w, fraction)
}

pub(crate) fn vorticity_rhs_unchecked(
    u: &SpectralField,
    w: &SpectralField,
    fraction: f64,
) -> Result<SpectralField> {
    let a = transport(u, w, fraction)?;
    let b = transport(w, u, fraction)?;
    let mut out = laplacian(w).sub(&a)?.add(&b)?;
    out.truncate_cube(dealias_cutoff(u.grid().n(), fraction));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::initial::{shear_flow, taylor_green};

    #[test]
    fn shear_has_no_nonlinearity_or_pressure() {
        let g = Grid3::new(16, 2.0).unwrap();
        let u = shear_flow(g, 1.3, 1);
        let n = nonlinear_term(&u, 2.0 / 3.0).unwrap();
        assert!(n.max_abs() < 1e-15);
        let p = pressure_field(&u, 2.0 / 3.0).unwrap();
        assert!(p.max_abs() < 1e-15);
    }

    #[test]
    fn nonlinearity_is_energy_neutral() {
        let g = Grid3::new(16, 1.0).unwrap();
        let u = taylor_green(g, 1.0);
        let n = nonlinear_term(&u, 2.0 / 3.0).unwrap();
        assert!(n.l2_norm() > 0.0);
        assert!(n.inner(&u).unwrap().abs() < 1e-12 * n.l2_norm() * u.l2_norm());
    }
}
