use std::f64::consts::PI;

use cns_core::carleman::{
    global_enstrophy_ledger, local_enstrophy_ledger, select_cutoff_radii, CutoffProfile,
    CutoffSearch, EnstrophyLedger, LedgerWindow, MovingCutoff, GLOBAL_SIGNS, LOCAL_SIGNS,
};
use cns_core::solver::{duhamel_split, run, shear_flow, taylor_green, DuhamelSplit, SolverConfig};
use cns_core::spectral::{Grid3, SpectralField};
use cns_core::Error;
use proptest::prelude::*;

fn box2pi(n: usize) -> Grid3 {
    Grid3::new(n, 2.0 * PI).unwrap()
}

fn tg_split(dt: f64, t_end: f64) -> DuhamelSplit {
    let g = box2pi(32);
    let traj = run(&SolverConfig::new(g, dt, t_end), &taylor_green(g, 1.0)).unwrap();
    duhamel_split(&traj, 0.0).unwrap()
}

fn cutoff() -> MovingCutoff {
    MovingCutoff::new([PI; 3], 0.5, 2.8, 0.5, 1.0).unwrap()
}

const WINDOW: LedgerWindow = LedgerWindow { t_lo: 0.0, t_hi: 0.1 };

/// Largest |defect| over the times of `coarse`.
fn defect_ratio(coarse: &EnstrophyLedger, fine: &EnstrophyLedger) -> f64 {
    let mut c = 0.0f64;
    let mut f = 0.0f64;
    for (k, t) in coarse.times.iter().enumerate() {
        let j = fine
            .times
            .iter()
            .position(|s| (s - t).abs() <= 1e-12)
            .expect("coarse time missing from the fine ledger");
        c = c.max(coarse.defect[k].abs());
        f = f.max(fine.defect[j].abs());
    }
    c / f
}

fn assert_signs(l: &EnstrophyLedger, nonnegative: &[&str]) {
    for name in nonnegative {
        assert!(l.term(name).unwrap().iter().all(|&y| y >= 0.0), "{name} negative");
    }
}

#[test]
fn global_ledger_defect_is_second_order() {
    let coarse = global_enstrophy_ledger(&tg_split(0.01, 0.1), &WINDOW).unwrap();
    let fine = global_enstrophy_ledger(&tg_split(0.005, 0.1), &WINDOW).unwrap();
    assert_eq!(coarse.signs, GLOBAL_SIGNS.to_vec());
    assert_signs(&coarse, &["Y1"]);
    assert_signs(&fine, &["Y1"]);
    let ratio = defect_ratio(&coarse, &fine);
    assert!((3.4..=4.6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn local_ledger_defect_is_second_order() {
    let coarse = local_enstrophy_ledger(&tg_split(0.01, 0.1), &cutoff(), &WINDOW).unwrap();
    let fine = local_enstrophy_ledger(&tg_split(0.005, 0.1), &cutoff(), &WINDOW).unwrap();
    assert_eq!(coarse.signs, LOCAL_SIGNS.to_vec());
    assert_signs(&coarse, &["Y1", "Y2"]);
    assert_signs(&fine, &["Y1", "Y2"]);
    let ratio = defect_ratio(&coarse, &fine);
    assert!((3.4..=4.6).contains(&ratio), "ratio {ratio}");
    let rem = coarse.dealias_remainder.as_ref().unwrap();
    assert!(rem.iter().all(|r| r.abs() <= 1e-3 * coarse.max_abs_defect()));
    let track = coarse.cutoff.as_ref().unwrap();
    assert!(track.r_minus.windows(2).all(|w| w[1] > w[0]));
    assert!(track.r_plus.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn heat_flow_has_empty_ledgers() {
    let g = box2pi(16);
    let traj = run(&SolverConfig::new(g, 0.01, 0.05), &shear_flow(g, 0.8, 1)).unwrap();
    let split = duhamel_split(&traj, 0.0).unwrap();
    let w = LedgerWindow { t_lo: 0.0, t_hi: 0.05 };
    let global = global_enstrophy_ledger(&split, &w).unwrap();
    let local = local_enstrophy_ledger(&split, &cutoff(), &w).unwrap();
    for l in [&global, &local] {
        for row in &l.terms {
            assert!(row.iter().all(|y| y.abs() <= 1e-20), "{row:?}");
        }
        assert!(l.energy.iter().all(|e| e.abs() <= 1e-20));
    }
}

#[test]
fn zero_velocity_still_contracts_the_cutoff() {
    let g = box2pi(16);
    let traj = run(&SolverConfig::new(g, 0.01, 0.05), &SpectralField::zeros(g, 3)).unwrap();
    let split = duhamel_split(&traj, 0.0).unwrap();
    let w = LedgerWindow { t_lo: 0.0, t_hi: 0.05 };
    let c = MovingCutoff::new([PI; 3], 0.5, 2.8, 0.4, 2.0).unwrap();
    let l = local_enstrophy_ledger(&split, &c, &w).unwrap();
    let track = l.cutoff.as_ref().unwrap();
    for (k, t) in track.times.iter().enumerate() {
        assert_eq!(track.speed[k], 0.8);
        assert!((track.r_minus[k] - (0.5 + 0.8 * t)).abs() <= 1e-14);
        assert!((track.r_plus[k] - (2.8 - 0.8 * t)).abs() <= 1e-14);
    }
    assert_signs(&l, &["Y2"]);
    assert!(l.term("Y4").unwrap().iter().all(|&y| y == 0.0));
    assert_eq!(l.max_abs_defect(), 0.0);
}

#[test]
fn ledger_errors() {
    let split = tg_split(0.01, 0.02);
    let short = LedgerWindow { t_lo: 0.0, t_hi: 0.01 };
    assert!(matches!(global_enstrophy_ledger(&split, &short), Err(Error::Precondition(_))));
    let w = LedgerWindow { t_lo: 0.0, t_hi: 0.02 };
    let wide = MovingCutoff::new([PI; 3], 0.5, 3.2, 0.5, 1.0).unwrap();
    assert!(matches!(local_enstrophy_ledger(&split, &wide, &w), Err(Error::OutsideBox(_))));
    let thin = MovingCutoff::new([PI; 3], 1.0, 1.01, 0.5, 1.0).unwrap();
    assert!(matches!(local_enstrophy_ledger(&split, &thin, &w), Err(Error::CutoffCollapse { .. })));
    assert!(MovingCutoff::new([PI; 3], 1.0, 0.5, 0.5, 1.0).is_err());
}

#[test]
fn cutoff_selection_is_seeded_and_keeps_the_best_draw() {
    let split = tg_split(0.01, 0.03);
    let w = LedgerWindow { t_lo: 0.0, t_hi: 0.03 };
    let search = CutoffSearch {
        center: [PI; 3],
        r_minus_range: (0.3, 0.8),
        r_plus_range: (2.0, 3.0),
        plateau: 0.4,
        c0: 1.0,
        seed: 11,
        candidates: 4,
    };
    let a = select_cutoff_radii(&split, &w, &search).unwrap();
    let b = select_cutoff_radii(&split, &w, &search).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.drawn, a.candidates[0]);
    let best = a.best.as_ref().unwrap().heat_flux.unwrap();
    for c in &a.candidates {
        if let Some(h) = c.heat_flux {
            assert!(best <= h);
        } else {
            assert!(c.rejection.is_some());
        }
        assert!((0.3..=0.8).contains(&c.r_minus) && (2.0..=3.0).contains(&c.r_plus));
    }
    let other = select_cutoff_radii(&split, &w, &CutoffSearch { seed: 12, ..search }).unwrap();
    assert_ne!(a.drawn, other.drawn);
}

proptest! {
    #[test]
    fn cutoff_profile_is_a_lipschitz_plateau(
        rm in 0.1f64..2.0,
        width in 0.1f64..3.0,
        plateau in 0.05f64..1.0,
        r in 0.0f64..6.0,
        s in 0.0f64..6.0,
    ) {
        let p = CutoffProfile { r_minus: rm, r_plus: rm + width, plateau };
        prop_assert!((p.eval(r) - p.eval(s)).abs() <= (r - s).abs() + 1e-15);
        prop_assert!(p.eval(r) >= 0.0 && p.eval(r) <= plateau);
        if r <= rm || r >= rm + width {
            prop_assert_eq!(p.eval(r), 0.0);
            prop_assert_eq!(p.slope(r), 0.0);
        }
        if r >= rm + plateau && r <= rm + width - plateau {
            prop_assert!((p.eval(r) - plateau).abs() <= 1e-15);
        }
        prop_assert!(p.slope(r) == 0.0 || p.slope(r) == 1.0);
    }
}
