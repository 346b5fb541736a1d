use std::f64::consts::PI;

use cns_cli::artifacts::json_text;
use cns_cli::pipeline::{annular_mass, pipeline_main_estimate, PipelineParams, PipelineReport, StageStatus};
use cns_cli::config::RunConfig;
use cns_core::concentration::{back_propagate_chain, find_annulus, find_epoch, AnnulusSearch, ChainWindows, SurrogateConstants};
use cns_core::lp::LpProjector;
use cns_core::solver::{random_enveloped, RandomFieldSpec, TrajectoryRecord};
use cns_core::spectral::{heat_propagate, synthesize, Grid3, SpectralField};

fn heat_trajectory(grid: Grid3, u0: &SpectralField, dt: f64, steps: usize) -> TrajectoryRecord {
    TrajectoryRecord {
        grid,
        dt,
        dealias_fraction: 2.0 / 3.0,
        snapshots: (0..=steps)
            .map(|k| {
                let t = k as f64 * dt;
                (t, heat_propagate(u0, t).unwrap())
            })
            .collect(),
        diagnostics: Vec::new(),
    }
}

fn concentrated(grid: Grid3) -> SpectralField {
    let spec = RandomFieldSpec {
        k_max: 6.0,
        center: [PI; 3],
        width: 0.8,
        amplitude: 3.0,
        seed: 5,
    };
    random_enveloped(grid, spec, 2.0 / 3.0).unwrap()
}

fn params() -> PipelineParams {
    let mut c = RunConfig::default();
    c.max_links = 0;
    c.epoch_span = 0.5;
    c.annulus_r0 = 0.1;
    c.annulus_kappa = 2.0;
    c.annulus_scales = 3;
    c.carleman_c0 = 0.1;
    PipelineParams::from_config(&c, None)
}

/// `|P_N u(x)| / N` by an explicit Fourier sum over the band symbol.
fn direct_concentration(traj: &TrajectoryRecord, i: usize, x: [f64; 3], n: f64) -> f64 {
    let g = traj.grid;
    let symbol = LpProjector::new(g).band_symbol(n).unwrap();
    let u = traj.velocity(i);
    let mut v = [0.0; 3];
    for idx in 0..g.points() {
        if symbol[idx] == 0.0 {
            continue;
        }
        let k = g.mode(idx);
        let theta = 2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]) / g.length();
        for (c, vc) in v.iter_mut().enumerate() {
            let a = u.component(c)[idx];
            *vc += symbol[idx] * (a.re * theta.cos() - a.im * theta.sin());
        }
    }
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() / n
}

#[test]
fn zero_trajectory_skips_every_stage() {
    let g = Grid3::new(16, 2.0 * PI).unwrap();
    let traj = heat_trajectory(g, &SpectralField::zeros(g, 3), 0.01, 4);
    let r = pipeline_main_estimate(&traj, &params());
    assert!(r.stages().iter().all(|s| s.1 == StageStatus::Skipped && s.2.is_some()));
    let back: PipelineReport = serde_json::from_str(&json_text(&r, "zero").unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn heat_flow_stages_match_standalone_operations_and_quadrature() {
    let g = Grid3::new(32, 2.0 * PI).unwrap();
    let traj = heat_trajectory(g, &concentrated(g), 0.002, 30);
    let p = params();
    let r = pipeline_main_estimate(&traj, &p);
    let seed = r.seed.output().expect("seed stage");
    let chain = r.chain.output().expect("chain stage");
    let epoch = r.epoch.output().expect("epoch stage");
    assert!(seed.event.value > 0.0 && epoch.certificates.worst() > 0.0);

    let i = traj.index_of_time(seed.event.t).unwrap();
    let direct = direct_concentration(&traj, i, seed.event.x, seed.event.n);
    assert!((direct - seed.event.value).abs() <= 1e-12 * direct);

    let consts = SurrogateConstants::new(p.a, p.c0).unwrap();
    let again = back_propagate_chain(&traj, &seed.event, &consts, &ChainWindows::from_constants(&consts), p.max_links).unwrap();
    assert_eq!(&again, chain);
    let last = chain.events.last().unwrap();
    let a = (last.t - p.epoch_span / (last.n * last.n)).max(0.0);
    assert_eq!(&find_epoch(&traj, a, last.t, p.epoch_subdivisions).unwrap(), epoch);

    let annulus = r.annulus.output().expect("annulus stage");
    let search = AnnulusSearch {
        x0: last.x,
        t0: epoch.interval.1,
        t_prime: 0.5 * (epoch.interval.1 - epoch.interval.0),
        r0: p.annulus_r0,
        kappa: p.annulus_kappa,
        n_scales: p.annulus_scales,
    };
    assert_eq!(&find_annulus(&traj, &search).unwrap(), annulus);

    let mass = r.annular_mass.output().expect("mass stage");
    let u = synthesize(traj.velocity(traj.index_of_time(mass.t).unwrap()));
    let mut direct = 0.0;
    for idx in 0..g.points() {
        let d = g.periodic_distance(g.position(idx), annulus.center);
        if d >= annulus.inner && d <= annulus.outer() {
            let m = u.magnitude_at(idx);
            direct += m * m * m * g.cell_volume();
        }
    }
    assert!((direct - mass.mass).abs() <= 1e-12 * direct);
    assert_eq!(&annular_mass(&traj, mass.t, annulus.center, annulus.inner, annulus.outer()).unwrap(), mass);

    // the stored cadence is far too coarse for the second inequality
    assert_eq!(r.carleman_second.status, StageStatus::Skipped);
    assert!(r.carleman_second.reason.as_ref().unwrap().contains("T/1000"));

    let back: PipelineReport = serde_json::from_str(&json_text(&r, "heat").unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn weak_seed_is_recorded_not_fatal() {
    let g = Grid3::new(16, 2.0 * PI).unwrap();
    let traj = heat_trajectory(g, &concentrated(g).scaled(1e-3), 0.01, 4);
    let r = pipeline_main_estimate(&traj, &params());
    assert_eq!(r.seed.status, StageStatus::Skipped);
    assert!(r.seed.reason.as_ref().unwrap().contains("threshold"));
    assert_eq!(r.chain.reason.as_deref(), Some("needs the seed stage"));
}
