use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use super::integrator::lawson_rk4_step;
use super::nonlinear::nonlinear_eval;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::spectral::{
    curl, lp_norm, read_snapshot, relative_divergence, synthesize, write_snapshot, Grid3,
    SpectralField,
};

/// Per-snapshot diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    /// `1/2 ||u||_2^2`.
    pub energy: f64,
    /// `1/2 ||curl u||_2^2`.
    pub enstrophy: f64,
    pub l3_norm: f64,
    pub linf_norm: f64,
    /// `int_{t_0}^t ||u||_inf`, accumulated step by step.
    pub total_speed_accum: f64,
    /// `int_{t_0}^t ||grad u||_2^2`, accumulated step by step.
    pub dissipation_accum: f64,
}

/// A solver run: time-stamped velocity snapshots plus diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub grid: Grid3,
    pub dt: f64,
    pub dealias_fraction: f64,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub diagnostics: Vec<Diagnostics>,
}

/// Outcome of a run that may have halted early.
#[derive(Debug)]
pub struct RunOutcome {
    pub record: TrajectoryRecord,
    pub halt: Option<Error>,
}

/// `||grad u||_2^2` and its time derivative along `du/dt = r`.
fn dissipation_and_rate(u: &SpectralField, r: &SpectralField) -> (f64, f64) {
    let g = *u.grid();
    let p = g.points();
    let w = 4.0 * PI * PI;
    let mut d = CompensatedSum::new();
    let mut dd = CompensatedSum::new();
    for c in 0..u.components() {
        let (uc, rc) = (u.component(c), r.component(c));
        for i in 0..p {
            let s = w * g.frequency_norm_sq(i);
            d.add(s * uc[i].norm_sqr());
            dd.add(2.0 * s * (uc[i].re * rc[i].re + uc[i].im * rc[i].im));
        }
    }
    (d.value() * g.volume(), dd.value() * g.volume())
}

fn laplacian_plus(u: &SpectralField, n: &SpectralField) -> SpectralField {
    let mut r = crate::spectral::laplacian(u);
    r.axpy(1.0, n);
    r
}

pub(crate) fn snapshot_diagnostics(time: f64, u: &SpectralField) -> Result<Diagnostics> {
    let phys = synthesize(u);
    Ok(Diagnostics {
        time,
        energy: 0.5 * u.l2_norm().powi(2),
        enstrophy: 0.5 * curl(u)?.l2_norm().powi(2),
        l3_norm: lp_norm(&phys, 3.0)?,
        linf_norm: lp_norm(&phys, f64::INFINITY)?,
        total_speed_accum: 0.0,
        dissipation_accum: 0.0,
    })
}

/// Tolerated relative divergence of the initial datum.
pub const INITIAL_DIVERGENCE_TOLERANCE: f64 = 1e-10;

/// Integrate from `initial`, halting (with the last finite state kept) on
/// non-finite values or a CFL breach.
pub fn run_recorded(config: &SolverConfig, initial: &SpectralField) -> Result<RunOutcome> {
    config.validate()?;
    initial.require_components(3)?;
    if *initial.grid() != config.grid {
        return Err(Error::GridMismatch("initial datum vs solver grid".into()));
    }
    let rel = relative_divergence(initial)?;
    if rel > INITIAL_DIVERGENCE_TOLERANCE {
        return Err(Error::NotDivergenceFree { relative: rel });
    }
    let f = config.dealias_fraction;
    let steps = config.steps()?;
    let h = config.dt;
    let spacing = config.grid.spacing();

    let mut u = initial.clone();
    u.truncate_cube(crate::spectral::dealias_cutoff(config.grid.n(), f));
    let mut record = TrajectoryRecord {
        grid: config.grid,
        dt: h,
        dealias_fraction: f,
        snapshots: vec![(config.t_start, u.clone())],
        diagnostics: vec![snapshot_diagnostics(config.t_start, &u)?],
    };
    let rhs = |v: &SpectralField| Ok(nonlinear_eval(v, f).0);
    let (mut n_cur, mut linf_cur) = nonlinear_eval(&u, f);
    let (mut d_cur, mut dd_cur) = dissipation_and_rate(&u, &laplacian_plus(&u, &n_cur));
    let mut speed = CompensatedSum::new();
    let mut dissipation = CompensatedSum::new();

    for step in 1..=steps {
        let t = config.time_of_step(step);
        if !(h * linf_cur <= spacing || h <= spacing * spacing / 4.0) {
            return Ok(RunOutcome {
                record,
                halt: Some(Error::BlowupSuspected {
                    time: config.time_of_step(step - 1),
                    step: step - 1,
                    reason: format!("CFL breach: dt * ||u||_inf = {:.3e} > h", h * linf_cur),
                }),
            });
        }
        let next = lawson_rk4_step(&u, h, Some(n_cur.clone()), &rhs)?;
        if !next.is_finite() {
            return Ok(RunOutcome {
                record,
                halt: Some(Error::BlowupSuspected {
                    time: t,
                    step,
                    reason: "non-finite coefficients".into(),
                }),
            });
        }
        let (n_next, linf_next) = nonlinear_eval(&next, f);
        let (d_next, dd_next) = dissipation_and_rate(&next, &laplacian_plus(&next, &n_next));
        // Hermite-corrected trapezoid, fifth-order local error
        dissipation.add(0.5 * h * (d_cur + d_next) + h * h / 12.0 * (dd_cur - dd_next));
        speed.add(0.5 * h * (linf_cur + linf_next));
        u = next;
        n_cur = n_next;
        linf_cur = linf_next;
        d_cur = d_next;
        dd_cur = dd_next;
        if step % config.snapshot_stride == 0 || step == steps {
            let mut d = snapshot_diagnostics(t, &u)?;
            d.total_speed_accum = speed.value();
            d.dissipation_accum = dissipation.value();
            record.snapshots.push((t, u.clone()));
            record.diagnostics.push(d);
        }
    }
    Ok(RunOutcome { record, halt: None })
}

/// Like [`run_recorded`] but a halt becomes an error.
pub fn run(config: &SolverConfig, initial: &SpectralField) -> Result<TrajectoryRecord> {
    let out = run_recorded(config, initial)?;
    match out.halt {
        Some(e) => Err(e),
        None => Ok(out.record),
    }
}

/// One step from `state`; checks the CFL-type sanity condition.
pub fn step(state: &SpectralField, dt: f64, fraction: f64) -> Result<SpectralField> {
    state.require_components(3)?;
    let (n0, linf) = nonlinear_eval(state, fraction);
    let hgrid = state.grid().spacing();
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    if !(dt * linf <= hgrid || dt <= hgrid * hgrid / 4.0) {
        return Err(Error::Precondition(format!(
            "CFL sanity failed: dt * ||u||_inf = {:.3e} exceeds spacing {:.3e}",
            dt * linf,
            hgrid
        )));
    }
    let rhs = |v: &SpectralField| Ok(nonlinear_eval(v, fraction).0);
    let out = lawson_rk4_step(state, dt, Some(n0), &rhs)?;
    if !out.is_finite() {
        return Err(Error::BlowupSuspected {
            time: dt,
            step: 1,
            reason: "non-finite coefficients".into(),
        });
    }
    Ok(out)
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn first_time(&self) -> f64 {
        self.snapshots.first().map_or(0.0, |s| s.0)
    }

    pub fn last_time(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.0)
    }

    /// Index of the stored snapshot at time `t` (within `1e-9` of the snapshot spacing).
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * self.dt.max(f64::MIN_POSITIVE);
        self.snapshots
            .iter()
            .position(|(s, _)| (s - t).abs() <= tol)
            .ok_or_else(|| Error::param("t", format!("{t} is not a stored snapshot time")))
    }

    pub fn velocity(&self, i: usize) -> &SpectralField {
        &self.snapshots[i].1
    }

    /// Indices of snapshots with `lo <= t <= hi`.
    pub fn indices_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        (0..self.len())
            .filter(|&i| {
                let t = self.snapshots[i].0;
                t >= lo - tol && t <= hi + tol
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.snapshots.iter().all(|(_, u)| u.max_abs() == 0.0)
    }

    /// Write `snap_NNNNNN.cns` files and `diagnostics.csv` into `dir`; returns the paths.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut paths = Vec::new();
        for (i, (t, u)) in self.snapshots.iter().enumerate() {
            let p = dir.join(format!("snap_{i:06}.cns"));
            write_snapshot(&p, *t, u)?;
            paths.push(p);
        }
        let p = dir.join("diagnostics.csv");
        fs::write(&p, diagnostics_csv(&self.diagnostics)).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        })?;
        paths.push(p);
        let p = dir.join("solver.csv");
        let meta = format!(
            "dt,dealias_fraction\n{:.16e},{:.16e}\n",
            self.dt, self.dealias_fraction
        );
        fs::write(&p, meta).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        })?;
        paths.push(p);
        Ok(paths)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "cns"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Format {
                path: dir.to_path_buf(),
                reason: "no snapshot files".into(),
            });
        }
        let mut snapshots = Vec::with_capacity(files.len());
        for f in &files {
            snapshots.push(read_snapshot(f)?);
        }
        let grid = *snapshots[0].1.grid();
        let diag_path = dir.join("diagnostics.csv");
        let text = fs::read_to_string(&diag_path).map_err(io(&diag_path))?;
        let diagnostics = parse_diagnostics_csv(&text, &diag_path)?;
        let meta_path = dir.join("solver.csv");
        let meta = fs::read_to_string(&meta_path).map_err(io(&meta_path))?;
        let vals: Vec<f64> = meta
            .lines()
            .nth(1)
            .unwrap_or("")
            .split(',')
            .filter_map(|s| s.trim().parse().ok())
            .collect();
        if vals.len() != 2 {
            return Err(Error::Format {
                path: meta_path,
                reason: "expected dt,dealias_fraction".into(),
            });
        }
        Ok(TrajectoryRecord {
            grid,
            dt: vals[0],
            dealias_fraction: vals[1],
            snapshots,
            diagnostics,
        })
    }
}

pub const DIAGNOSTICS_HEADER: &str =
    "time,energy,enstrophy,l3_norm,linf_norm,total_speed_accum,dissipation_accum";

pub fn diagnostics_csv(rows: &[Diagnostics]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for d in rows {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            d.time,
            d.energy,
            d.enstrophy,
            d.l3_norm,
            d.linf_norm,
            d.total_speed_accum,
            d.dissipation_accum
        );
    }
    s
}

pub fn parse_diagnostics_csv(text: &str, path: &Path) -> Result<Vec<Diagnostics>> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(DIAGNOSTICS_HEADER) {
        return Err(bad("unexpected diagnostics header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(row, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("row {row}: {e}")))?;
            if v.len() != 7 {
                return Err(bad(format!("row {row}: expected 7 columns")));
            }
            Ok(Diagnostics {
                time: v[0],
                energy: v[1],
                enstrophy: v[2],
                l3_norm: v[3],
                linf_norm: v[4],
                total_speed_accum: v[5],
                dissipation_accum: v[6],
            })
        })
        .collect()
}
