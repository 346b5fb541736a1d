use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numeric::random_stream;
use crate::spectral::{curl, dealias_cutoff, forward_transform, leray_project, RealField, SpectralField, Grid3};

/// Taylor-Green vortex `a (sin x cos y cos z, -cos x sin y cos z, 0)` in units of `2 pi / L`.
pub fn taylor_green(grid: Grid3, amplitude: f64) -> SpectralField {
    let k = 2.0 * PI / grid.length();
    let f = RealField::from_fn(grid, 3, |x, o| {
        let (sx, cx) = (k * x[0]).sin_cos();
        let (sy, cy) = (k * x[1]).sin_cos();
        let cz = (k * x[2]).cos();
        o[0] = amplitude * sx * cy * cz;
        o[1] = -amplitude * cx * sy * cz;
        o[2] = 0.0;
    });
    forward_transform(&f).expect("finite samples")
}

/// Shear flow `(a sin(2 pi m x_2 / L), 0, 0)`, an exact heat-flow solution.
pub fn shear_flow(grid: Grid3, amplitude: f64, mode: u32) -> SpectralField {
    let k = 2.0 * PI * mode as f64 / grid.length();
    let f = RealField::from_fn(grid, 3, |x, o| {
        o[0] = amplitude * (k * x[1]).sin();
        o[1] = 0.0;
        o[2] = 0.0;
    });
    forward_transform(&f).expect("finite samples")
}

/// Parameters of a random divergence-free field with a Gaussian envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomFieldSpec {
    /// Largest integer wavenumber magnitude of the vector potential.
    pub k_max: f64,
    pub center: [f64; 3],
    /// Envelope width (standard deviation, length units).
    pub width: f64,
    /// Target maximum of `|u|` on the grid.
    pub amplitude: f64,
    pub seed: u64,
}

/// Random band-limited vector potential, Gaussian-windowed, then curled and
/// masked to the dealiasing cube.
pub fn random_enveloped(grid: Grid3, spec: RandomFieldSpec, fraction: f64) -> Result<SpectralField> {
    if !(spec.k_max > 0.0 && spec.width > 0.0 && spec.amplitude >= 0.0) {
        return Err(Error::param("initial_data", "random field needs k_max, width > 0"));
    }
    let mut rng = random_stream(spec.seed, 0);
    let p = grid.points();
    let mut psi = SpectralField::zeros(grid, 3);
    let k2max = spec.k_max * spec.k_max;
    for c in 0..3 {
        let comp = psi.component_mut(c);
        for (i, v) in comp.iter_mut().enumerate() {
            // draw for every mode so the stream position does not depend on k_max
            let re = rng.sample::<f64, _>(StandardNormal);
            let im = rng.sample::<f64, _>(StandardNormal);
            if (grid.mode_norm_sq(i) as f64) <= k2max && grid.mode_norm_sq(i) > 0 {
                *v = Complex64::new(re, im);
            }
        }
    }
    psi.symmetrize();
    let raw = crate::spectral::synthesize(&psi);
    let center = spec.center;
    let w2 = 2.0 * spec.width * spec.width;
    let mut windowed = raw.clone();
    for idx in 0..p {
        let r = grid.periodic_distance(grid.position(idx), center);
        let e = (-r * r / w2).exp();
        for c in 0..3 {
            windowed.values_mut()[c * p + idx] *= e;
        }
    }
    let mut u = curl(&forward_transform(&windowed)?)?;
    u.truncate_cube(dealias_cutoff(grid.n(), fraction));
    let u = leray_project(&u)?;
    let peak = crate::spectral::synthesize(&u)
        .magnitudes()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(if peak > 0.0 { u.scaled(spec.amplitude / peak) } else { u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::relative_divergence;

    #[test]
    fn library_fields_are_divergence_free() {
        let g = Grid3::new(16, 2.0).unwrap();
        assert!(relative_divergence(&taylor_green(g, 1.0)).unwrap() < 1e-14);
        assert!(relative_divergence(&shear_flow(g, 1.0, 2)).unwrap() < 1e-14);
        let spec = RandomFieldSpec {
            k_max: 4.0,
            center: [1.0, 1.0, 1.0],
            width: 0.3,
            amplitude: 2.0,
            seed: 7,
        };
        let u = random_enveloped(g, spec, 2.0 / 3.0).unwrap();
        assert!(relative_divergence(&u).unwrap() < 1e-13);
        let v = random_enveloped(g, spec, 2.0 / 3.0).unwrap();
        assert_eq!(u, v);
    }
}
