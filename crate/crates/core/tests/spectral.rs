mod common;

use std::f64::consts::PI;

use cns_core::spectral::{
    biot_savart, curl, decode_snapshot, divergence, encode_snapshot, forward_transform, gradient,
    heat_propagate, inverse_transform, laplacian, leray_project, lp_norm, relative_divergence,
    synthesize, Grid3, RealField,
};
use cns_core::Error;
use common::{random_band_limited, random_real, rel, rel_field};
use proptest::prelude::*;

fn grid(n: usize) -> Grid3 {
    Grid3::new(n, 2.0 * PI).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leray_is_idempotent_and_kills_gradients(seed in any::<u64>()) {
        let g = grid(16);
        let u = random_real(g, 3, seed);
        let pu = leray_project(&u).unwrap();
        prop_assert!(rel_field(&leray_project(&pu).unwrap(), &pu) <= 1e-12);
        prop_assert!(relative_divergence(&pu).unwrap() <= 1e-12);
        let phi = random_real(g, 1, seed ^ 0x5a5a);
        let grad = gradient(&phi).unwrap();
        prop_assert!(leray_project(&grad).unwrap().l2_norm() <= 1e-12 * grad.l2_norm());
    }

    #[test]
    fn heat_semigroup_composes(seed in any::<u64>(), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let u = random_real(grid(16), 3, seed);
        let two = heat_propagate(&heat_propagate(&u, s).unwrap(), t).unwrap();
        let one = heat_propagate(&u, s + t).unwrap();
        prop_assert!(rel_field(&two, &one) <= 1e-12);
    }

    #[test]
    fn curl_of_gradient_vanishes(seed in any::<u64>()) {
        let phi = random_real(grid(16), 1, seed);
        let grad = gradient(&phi).unwrap();
        prop_assert!(curl(&grad).unwrap().l2_norm() <= 1e-12 * grad.l2_norm());
        prop_assert!(divergence(&curl(&random_real(grid(16), 3, seed)).unwrap()).unwrap().l2_norm() <= 1e-10);
    }

    #[test]
    fn parseval_matches_grid_quadrature(seed in any::<u64>()) {
        let g = grid(16);
        let f = random_real(g, 3, seed);
        let phys = synthesize(&f);
        let grid_sum: f64 = phys.values().iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
        prop_assert!(rel(f.l2_norm().powi(2), grid_sum) <= 1e-12);
    }

    #[test]
    fn biot_savart_inverts_curl(seed in any::<u64>()) {
        let u = leray_project(&random_band_limited(grid(16), 3, 6, seed)).unwrap();
        let mut u0 = u.clone();
        u0.component_mut(0)[0] = 0.0.into();
        u0.component_mut(1)[0] = 0.0.into();
        u0.component_mut(2)[0] = 0.0.into();
        let back = biot_savart(&curl(&u0).unwrap()).unwrap();
        prop_assert!(rel_field(&back, &u0) <= 1e-12);
    }

    #[test]
    fn snapshot_roundtrip_is_bit_exact(seed in any::<u64>(), t in -10.0f64..10.0) {
        let f = random_real(grid(8), 3, seed);
        let bytes = encode_snapshot(t, &f);
        let (t2, f2) = decode_snapshot(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(t.to_bits(), t2.to_bits());
        prop_assert_eq!(f, f2);
    }
}

#[test]
fn forward_and_inverse_roundtrip_grid_values() {
    let g = grid(16);
    let f = RealField::from_fn(g, 2, |x, o| {
        o[0] = (x[0] + 2.0 * x[1]).sin() * x[2].cos();
        o[1] = (3.0 * x[2]).cos() + 0.25;
    });
    let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
    for (a, b) in f.values().iter().zip(back.values()) {
        assert!((a - b).abs() <= 1e-13);
    }
}

#[test]
fn laplacian_of_plane_wave_is_closed_form() {
    let g = grid(16);
    let f = RealField::from_fn(g, 1, |x, o| o[0] = (2.0 * x[0] - 3.0 * x[2]).sin());
    let lap = synthesize(&laplacian(&forward_transform(&f).unwrap()));
    for (a, b) in f.values().iter().zip(lap.values()) {
        assert!((-13.0 * a - b).abs() <= 1e-11);
    }
}

#[test]
fn lp_norms_of_a_constant() {
    let g = Grid3::new(8, 2.0).unwrap();
    let f = RealField::from_fn(g, 1, |_, o| o[0] = 3.0);
    assert!(rel(lp_norm(&f, 2.0).unwrap(), 3.0 * 8f64.sqrt()) <= 1e-14);
    assert!(rel(lp_norm(&f, 3.0).unwrap(), 3.0 * 2.0) <= 1e-14);
    assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 3.0);
}

#[test]
fn non_finite_samples_are_rejected() {
    let g = grid(8);
    let mut v = vec![0.0; g.points()];
    v[5] = f64::NAN;
    let f = RealField::from_values(g, 1, v).unwrap();
    assert!(matches!(forward_transform(&f), Err(Error::NonFinite { .. })));
}
