//! Quick property checks on synthetic data, one line per check.

use std::f64::consts::PI;

use cns_core::carleman::{
    carleman_monotonicity_check, weight_first, weight_second, zero_weight, AlphaChoice,
    AnalyticField, CarlemanWeight, FirstWeightParams, HeatFlowField, SecondWeightParams,
};
use cns_core::concentration::{concentration_value, dyadic_frequencies, find_epoch, sup_norms, Certificates};
use cns_core::lp::{bernstein_sweep, LpProjector};
use cns_core::numeric::random_stream;
use cns_core::solver::{energy_inequality, rescale_solution, run, shear_flow, taylor_green, SolverConfig};
use cns_core::spectral::{forward_transform, relative_divergence, Grid3, RealField, SpectralField};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lp,
    Solver,
    Carleman,
    Concentration,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Lp, Suite::Solver, Suite::Carleman, Suite::Concentration];

    pub fn parse(s: &str) -> Result<Vec<Suite>> {
        match s {
            "lp" => Ok(vec![Suite::Lp]),
            "solver" => Ok(vec![Suite::Solver]),
            "carleman" => Ok(vec![Suite::Carleman]),
            "concentration" => Ok(vec![Suite::Concentration]),
            "all" => Ok(Suite::ALL.to_vec()),
            _ => Err(CliError::Validation(format!(
                "unknown suite `{s}` (lp, solver, carleman, concentration, all)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Lp => "lp",
            Suite::Solver => "solver",
            Suite::Carleman => "carleman",
            Suite::Concentration => "concentration",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

impl Check {
    fn at_most(suite: Suite, name: &str, measured: f64, tolerance: f64) -> Self {
        Check {
            suite: suite.name().into(),
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}/{}: {:.3e} (tolerance {:e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

fn rel_field(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = a.sub(b).map(|d| d.l2_norm()).unwrap_or(f64::INFINITY);
    let s = b.l2_norm();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// A real field with uniform random samples in `[-1, 1]`.
fn random_field(grid: Grid3, seed: u64) -> Result<SpectralField> {
    let mut r = random_stream(seed, 0);
    let values: Vec<f64> = (0..grid.points()).map(|_| r.gen_range(-1.0..=1.0)).collect();
    Ok(forward_transform(&RealField::from_values(grid, 1, values)?)?)
}

fn lp_suite(seed: u64) -> Result<Vec<Check>> {
    let s = Suite::Lp;
    let g = Grid3::new(32, 1.0)?;
    let lp = LpProjector::new(g);
    let f = random_field(g, seed)?;
    let n = 8.0;
    let depth = 8;
    let mut sum = lp.project_leq(&f, n / 2f64.powi(depth))?;
    for k in 0..depth {
        sum = sum.add(&lp.project_band(&f, n / 2f64.powi(k))?)?;
    }
    let telescoping = rel_field(&sum, &lp.project_leq(&f, n)?);
    let band = lp.project_band(&f, n)?;
    let tilde = rel_field(&lp.project_band(&lp.project_tilde(&f, n)?, n)?, &band);
    let disjoint = lp.project_band(&lp.project_band(&f, 4.0 * n)?, n)?.l2_norm() / f.l2_norm();
    let smooth = lp.project_leq(&f, 3.0)?;
    let sweep = bernstein_sweep(&smooth, 3.0, 5, 0, 2.0, f64::INFINITY, 0.0)?;
    Ok(vec![
        Check::at_most(s, "telescoping", telescoping, 1e-12),
        Check::at_most(s, "band_equals_band_of_tilde", tilde, 1e-12),
        Check::at_most(s, "disjoint_bands_annihilate", disjoint, 1e-12),
        Check::at_most(s, "bernstein_sweep_spread", sweep.report.sweep_spread.unwrap_or(f64::INFINITY), 1.25),
    ])
}

fn solver_suite() -> Result<Vec<Check>> {
    let s = Suite::Solver;
    let g = Grid3::new(16, 2.0 * PI)?;
    let u0 = shear_flow(g, 0.7, 1);
    let traj = run(&SolverConfig::new(g, 0.02, 1.0).with_stride(10), &u0)?;
    let decay = traj
        .snapshots
        .iter()
        .map(|(t, u)| rel_field(u, &u0.scaled((-t).exp())))
        .fold(0.0, f64::max);
    let tg = run(&SolverConfig::new(g, 0.01, 0.1), &taylor_green(g, 1.0))?;
    let energy = energy_inequality(&tg).worst_relative_increase.max(0.0);
    let mut div = 0.0f64;
    for (_, u) in &tg.snapshots {
        div = div.max(relative_divergence(u)?);
    }
    Ok(vec![
        Check::at_most(s, "shear_exact_decay", decay, 1e-9),
        Check::at_most(s, "energy_inequality", energy, 1e-8),
        Check::at_most(s, "divergence_free", div, 1e-10),
    ])
}

fn fd_error(w: &CarlemanWeight, points: &[(f64, [f64; 3])], ht: f64, hx: f64) -> f64 {
    let d1 = |f: &dyn Fn(f64) -> f64, x: f64, h: f64| (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
    let d2 = |f: &dyn Fn(f64) -> f64, x: f64, h: f64| {
        (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
    };
    let at = |x: [f64; 3], a: usize, v: f64| {
        let mut y = x;
        y[a] = v;
        y
    };
    let mut worst = 0.0f64;
    for &(t, x) in points {
        let mut lap = 0.0;
        let mut grad2 = 0.0;
        let mut lap_f = 0.0;
        for a in 0..3 {
            lap += d2(&|v| w.g(t, at(x, a, v)), x[a], hx);
            grad2 += d1(&|v| w.g(t, at(x, a, v)), x[a], hx).powi(2);
            lap_f += d2(&|v| w.f_closed(t, at(x, a, v)), x[a], hx);
        }
        let f = d1(&|s| w.g(s, x), t, ht) - lap - grad2;
        let lf = d1(&|s| w.f_closed(s, x), t, ht) + lap_f;
        worst = worst.max(rel(f, w.f_closed(t, x))).max(rel(lf, w.lf_closed(t, x)));
    }
    worst
}

fn carleman_suite(seed: u64) -> Result<Vec<Check>> {
    let s = Suite::Carleman;
    let mut r = random_stream(seed, 1);
    let mut dir = || loop {
        let v: [f64; 3] = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            break ([v[0] / n, v[1] / n, v[2] / n], r.gen::<f64>(), r.gen::<f64>());
        }
    };
    let fp = FirstWeightParams {
        horizon: 0.01,
        t0: 0.008,
        c0: 4.0,
        r_minus: 0.4,
        r_plus: 15.0,
        alpha: AlphaChoice::AsPrinted,
    };
    let w1 = weight_first(&fp)?;
    let p1: Vec<(f64, [f64; 3])> = (0..50)
        .map(|_| {
            let (d, a, b) = dir();
            let rad = fp.r_minus + (fp.r_plus - fp.r_minus) * a;
            (fp.t0 * b, [rad * d[0], rad * d[1], rad * d[2]])
        })
        .collect();
    let sp = SecondWeightParams {
        horizon: 1e-3,
        t0: 0.05,
        t1: 0.02,
        radius: 2.1,
        alpha: 1.0,
    };
    let w2 = weight_second(&sp)?;
    let p2: Vec<(f64, [f64; 3])> = (0..50)
        .map(|_| {
            let (d, a, b) = dir();
            let rad = sp.radius * a;
            (-sp.t1 + (sp.t0 + sp.t1) * (0.05 + 0.95 * b), [rad * d[0], rad * d[1], rad * d[2]])
        })
        .collect();
    let sign1 = p1.iter().filter(|(t, x)| !(w1.f_closed(*t, *x) < 0.0)).count() as f64;
    let sign2 = p2.iter().filter(|(t, x)| !(w2.f_closed(*t, *x) <= 0.0)).count() as f64;

    let g = Grid3::new(32, 2.0 * PI)?;
    let center = [PI; 3];
    let kernel = AnalyticField::reversed_heat_kernel(g, center, 0.08);
    let lemma = carleman_monotonicity_check(&kernel, &w2, center, &[0.01, 0.02, 0.03], 1e-4)?;
    let heat = HeatFlowField::new(random_field(g, seed)?, 0.05);
    let flat = carleman_monotonicity_check(&heat, &zero_weight(), center, &[0.0, 0.02], 1e-4)?;
    let worst = |m: f64| (-m).max(0.0);
    Ok(vec![
        Check::at_most(s, "first_weight_fd", fd_error(&w1, &p1, 1e-6, 1e-3), 1e-6),
        Check::at_most(s, "second_weight_fd", fd_error(&w2, &p2, 1e-5, 1e-2), 1e-6),
        Check::at_most(s, "first_weight_f_negative", sign1, 0.0),
        Check::at_most(s, "second_weight_f_nonpositive", sign2, 0.0),
        Check::at_most(s, "lemma_slack_heat_kernel", worst(lemma.min_normalized_slack), 1e-6),
        Check::at_most(s, "lemma_slack_flat_weight", worst(flat.min_normalized_slack), 1e-6),
    ])
}

fn concentration_suite() -> Result<Vec<Check>> {
    let s = Suite::Concentration;
    let g = Grid3::new(16, 2.0 * PI)?;
    let traj = run(&SolverConfig::new(g, 0.01, 0.08), &taylor_green(g, 2.0))?;
    let scaled = rescale_solution(&traj, 2.0)?;
    let l3 = traj
        .diagnostics
        .iter()
        .zip(&scaled.diagnostics)
        .map(|(a, b)| rel(a.l3_norm, b.l3_norm))
        .fold(0.0, f64::max);
    let n = dyadic_frequencies(&traj)[2];
    let x = g.position(123);
    let v = concentration_value(&traj, 0.04, x, n)?;
    let w = concentration_value(&scaled, 0.01, [x[0] / 2.0, x[1] / 2.0, x[2] / 2.0], 2.0 * n)?;
    let e = find_epoch(&traj, 0.0, 0.08, 4)?;
    let mut best = f64::INFINITY;
    for c in &e.candidates {
        let worst = traj
            .indices_in(c.interval.0, c.interval.1)
            .iter()
            .map(|&i| sup_norms(traj.velocity(i)).map(|n| Certificates::from_norms(&n, 0.08).worst()))
            .collect::<cns_core::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        best = best.min(worst);
    }
    Ok(vec![
        Check::at_most(s, "l3_rescaling", l3, 1e-8),
        Check::at_most(s, "concentration_rescaling", rel(v, w), 1e-8),
        Check::at_most(s, "epoch_is_argmin", rel(e.certificates.worst(), best), 0.0),
    ])
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    match suite {
        Suite::Lp => lp_suite(seed),
        Suite::Solver => solver_suite(),
        Suite::Carleman => carleman_suite(seed),
        Suite::Concentration => concentration_suite(),
    }
}
