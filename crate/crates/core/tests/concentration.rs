mod common;

use std::cmp::Ordering;
use std::f64::consts::PI;

use cns_core::concentration::{
    back_propagate_chain, concentration_value, dyadic_frequencies, find_annulus, find_epoch,
    pointwise_derivative_report, prefer, scan_concentrations, strongest_event, sup_norms,
    total_speed, AnnulusSearch, Certificates, ChainWindows, LinkRatios, SurrogateConstants,
};
use cns_core::solver::{rescale_solution, run, shear_flow, taylor_green, SolverConfig, TrajectoryRecord};
use cns_core::spectral::Grid3;
use common::rel;
use proptest::prelude::*;

fn tg(n: usize, length: f64, amplitude: f64, dt: f64, t_end: f64) -> TrajectoryRecord {
    let g = Grid3::new(n, length).unwrap();
    run(&SolverConfig::new(g, dt, t_end), &taylor_green(g, amplitude)).unwrap()
}

#[test]
fn scale_invariant_quantities_survive_rescaling() {
    let traj = tg(16, 2.0 * PI, 2.0, 0.01, 0.1);
    let scaled = rescale_solution(&traj, 2.0).unwrap();
    for (a, b) in traj.diagnostics.iter().zip(&scaled.diagnostics) {
        assert!(rel(a.l3_norm, b.l3_norm) <= 1e-8);
        assert!(rel(b.time, a.time / 4.0) <= 1e-15);
    }
    let g = traj.grid;
    for (i, &n) in dyadic_frequencies(&traj).iter().enumerate().take(4) {
        let t = traj.snapshots[3 + i].0;
        for idx in [0usize, 37, 1000, 2222] {
            let x = g.position(idx);
            let v = concentration_value(&traj, t, x, n).unwrap();
            let w = concentration_value(&scaled, t / 4.0, [x[0] / 2.0, x[1] / 2.0, x[2] / 2.0], 2.0 * n).unwrap();
            assert!(rel(v, w) <= 1e-8, "N {n} idx {idx}: {v} vs {w}");
        }
    }
    let s = total_speed(&traj, 0.02, 0.08).unwrap();
    let s2 = total_speed(&scaled, 0.02 / 4.0, 0.08 / 4.0).unwrap();
    assert!(rel(s.ratio, s2.ratio) <= 1e-8);
    let n = dyadic_frequencies(&traj)[1];
    let d = pointwise_derivative_report(&traj, 0.05, n).unwrap();
    let d2 = pointwise_derivative_report(&scaled, 0.05 / 4.0, 2.0 * n).unwrap();
    for k in 0..3 {
        assert!(rel(d.velocity[k], d2.velocity[k]) <= 1e-8);
        assert!(rel(d.vorticity[k], d2.vorticity[k]) <= 1e-8);
    }
}

#[test]
fn epoch_is_the_exact_argmin_over_dyadic_subintervals() {
    let traj = tg(16, 2.0 * PI, 3.0, 0.01, 0.16);
    let (a, b, subs) = (0.0, 0.16, 8);
    let e = find_epoch(&traj, a, b, subs).unwrap();
    // independent enumeration of the candidate set
    let len = b - a;
    let mut expected = Vec::new();
    let mut parts = 1;
    while parts <= subs {
        let h = len / parts as f64;
        for j in 0..parts {
            let (lo, hi) = (a + j as f64 * h, if j + 1 == parts { b } else { a + (j + 1) as f64 * h });
            let worst = traj
                .indices_in(lo, hi)
                .iter()
                .map(|&i| Certificates::from_norms(&sup_norms(traj.velocity(i)).unwrap(), len).worst())
                .fold(0.0, f64::max);
            expected.push(((lo, hi), worst));
        }
        parts *= 2;
    }
    assert_eq!(e.candidates.len(), expected.len());
    for (c, (iv, w)) in e.candidates.iter().zip(&expected) {
        assert_eq!(c.interval, *iv);
        assert_eq!(c.worst, *w);
    }
    let min = expected.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let first = expected.iter().find(|x| x.1 == min).unwrap();
    assert_eq!(e.interval, first.0);
    assert_eq!(e.certificates.worst(), min);
}

#[test]
fn heat_flow_epoch_is_the_latest_finest_interval() {
    let g = Grid3::new(16, 2.0 * PI).unwrap();
    let traj = run(&SolverConfig::new(g, 0.01, 0.16), &shear_flow(g, 1.0, 1)).unwrap();
    let e = find_epoch(&traj, 0.0, 0.16, 8).unwrap();
    assert!((e.interval.0 - 0.14).abs() <= 1e-12 && (e.interval.1 - 0.16).abs() <= 1e-12);
}

#[test]
fn annulus_is_the_exact_argmin_over_scales() {
    let traj = tg(16, 2.0 * PI, 3.0, 0.01, 0.2);
    let s = AnnulusSearch {
        x0: [PI / 2.0, PI / 2.0, PI / 2.0],
        t0: 0.2,
        t_prime: 0.05,
        r0: 0.3,
        kappa: 2.0,
        n_scales: 3,
    };
    let a = find_annulus(&traj, &s).unwrap();
    assert_eq!(a.candidates.len(), 3);
    for (m, c) in a.candidates.iter().enumerate() {
        assert!(rel(c.inner, 0.3 * 2f64.powi(m as i32)) <= 1e-15);
        assert!(c.integrand >= a.candidates[a.candidates.iter().position(|d| d.inner == a.inner).unwrap()].integrand);
    }
    let min = a.candidates.iter().map(|c| c.integrand).fold(f64::INFINITY, f64::min);
    assert_eq!(a.candidates.iter().find(|c| c.integrand == min).unwrap().inner, a.inner);
    assert!(a.t1 >= 0.2 - 1.5 * 0.05 - 1e-12 && a.t1 <= 0.2 - 0.05 + 1e-12);
    assert!(a.certificates.worst().is_finite());
    let too_big = AnnulusSearch { n_scales: 5, ..s };
    assert!(matches!(find_annulus(&traj, &too_big), Err(cns_core::Error::OutsideBox(_))));
}

#[test]
fn chain_links_satisfy_windows_and_are_maximal() {
    let traj = tg(16, 1.0, 10.0, 0.001, 0.016);
    let ladder = dyadic_frequencies(&traj);
    let last = traj.len() - 1;
    let seed = strongest_event(&traj, &[last], &ladder).unwrap().unwrap();
    let consts = SurrogateConstants::new(2.0, 2.0).unwrap();
    let windows = ChainWindows { time_lo: 0.02, time_hi: 0.05, space: 1.0, freq: 2.0 };
    let report = back_propagate_chain(&traj, &seed, &consts, &windows, 10).unwrap();
    assert!(report.links.len() >= 2, "chain too short: {:?}", report.termination);
    let all = scan_concentrations(&traj, &ladder, report.threshold).unwrap();
    for (i, link) in report.links.iter().enumerate() {
        assert!(link.admissible(&windows));
        let (cur, next) = (&report.events[i], &report.events[i + 1]);
        assert!(next.value >= report.threshold);
        assert_eq!(*link, LinkRatios::between(&traj, cur, next));
        let best = all
            .iter()
            .filter(|e| LinkRatios::between(&traj, cur, e).admissible(&windows))
            .min_by(|a, b| prefer(a, b))
            .unwrap();
        assert_eq!(best, next);
    }
}

#[test]
fn chain_refuses_a_weak_seed() {
    let traj = tg(16, 1.0, 1e-3, 0.001, 0.005);
    let ladder = dyadic_frequencies(&traj);
    let seed = strongest_event(&traj, &[traj.len() - 1], &ladder).unwrap().unwrap();
    let consts = SurrogateConstants::new(2.0, 2.0).unwrap();
    let w = ChainWindows::from_constants(&consts);
    assert!(matches!(
        back_propagate_chain(&traj, &seed, &consts, &w, 3),
        Err(cns_core::Error::Precondition(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn surrogate_constants_iterate_powers(a in 2.0f64..50.0, c0 in 2.0f64..4.0, j in 0u32..4) {
        let c = SurrogateConstants::new(a, c0).unwrap();
        prop_assert!(rel(c.ln_a(j + 1), c.ln_a(j) * c0) <= 1e-12);
        prop_assert!(rel(c.ln_a(0), a.ln()) <= 1e-15);
        prop_assert!(rel(c.threshold(), 1.0 / c.a_j(1)) <= 1e-12);
        let w = ChainWindows::from_constants(&c);
        prop_assert!(w.validate().is_ok());
    }

    #[test]
    fn prefer_is_a_total_order(v in prop::collection::vec((0.0f64..1.0, 0u8..3, 0u8..3), 2..12)) {
        let evs: Vec<_> = v
            .iter()
            .map(|&(value, n, t)| cns_core::concentration::ConcentrationEvent {
                t: t as f64,
                x: [0.0; 3],
                n: (1u32 << n) as f64,
                value,
            })
            .collect();
        for a in &evs {
            prop_assert_eq!(prefer(a, a), Ordering::Equal);
            for b in &evs {
                prop_assert_eq!(prefer(a, b), prefer(b, a).reverse());
            }
        }
    }
}
