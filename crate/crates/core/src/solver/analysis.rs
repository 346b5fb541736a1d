use serde::{Deserialize, Serialize};

use super::integrator::lawson_rk4_step;
use super::nonlinear::{nonlinear_eval, vorticity_rhs_unchecked};
use super::trajectory::{snapshot_diagnostics, Diagnostics, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::numeric::{is_power_of_two_ratio, trapezoid};
use crate::spectral::{curl, heat_propagate, jacobian, laplacian, SpectralField};

/// `u = u_lin + u_nl` with `u_lin(t) = e^{(t - t_ref) Lap} u(t_ref)` on the
/// stored snapshots with `t >= t_ref`.
#[derive(Clone, Debug)]
pub struct DuhamelSplit {
    pub t_ref: f64,
    pub dealias_fraction: f64,
    pub times: Vec<f64>,
    /// Trajectory indices of `times`.
    pub indices: Vec<usize>,
    pub u_lin: Vec<SpectralField>,
    pub u_nl: Vec<SpectralField>,
    /// `max_t ||u_nl(t)||_2`.
    pub nl_linf_l2: f64,
    /// `int ||grad u_nl||_2^2 dt`, trapezoid over the stored times.
    pub nl_dissipation: f64,
}

impl DuhamelSplit {
    pub fn position_of(&self, t: f64, tol: f64) -> Option<usize> {
        self.times.iter().position(|s| (s - t).abs() <= tol)
    }

    pub fn omega_nl(&self, k: usize) -> Result<SpectralField> {
        curl(&self.u_nl[k])
    }

    pub fn omega_lin(&self, k: usize) -> Result<SpectralField> {
        curl(&self.u_lin[k])
    }
}

pub fn duhamel_split(traj: &TrajectoryRecord, t_ref: f64) -> Result<DuhamelSplit> {
    if traj.is_empty() || t_ref < traj.first_time() || t_ref > traj.last_time() {
        return Err(Error::param("t_ref", format!("{t_ref} outside the stored range")));
    }
    let r = traj.index_of_time(t_ref)?;
    let base = traj.velocity(r).clone();
    let mut times = Vec::new();
    let mut indices = Vec::new();
    let mut u_lin = Vec::new();
    let mut u_nl = Vec::new();
    for i in r..traj.len() {
        let (t, u) = &traj.snapshots[i];
        let lin = heat_propagate(&base, (t - t_ref).max(0.0))?;
        let nl = if i == r {
            SpectralField::zeros(*u.grid(), 3)
        } else {
            u.sub(&lin)?
        };
        times.push(*t);
        indices.push(i);
        u_lin.push(lin);
        u_nl.push(nl);
    }
    let nl_linf_l2 = u_nl.iter().map(|f| f.l2_norm()).fold(0.0, f64::max);
    let grads: Vec<f64> = u_nl
        .iter()
        .map(|f| jacobian(f).map(|j| j.l2_norm().powi(2)))
        .collect::<Result<_>>()?;
    let nl_dissipation = if times.len() > 1 {
        trapezoid(&times, &grads)
    } else {
        0.0
    };
    Ok(DuhamelSplit {
        t_ref,
        dealias_fraction: traj.dealias_fraction,
        times,
        indices,
        u_lin,
        u_nl,
        nl_linf_l2,
        nl_dissipation,
    })
}

/// `u^lambda(t, x) = lambda u(lambda^2 t, lambda x)` on the box `L / lambda`,
/// for `lambda = 2^m`; every stored value is an exact power-of-two rescaling.
pub fn rescale_solution(traj: &TrajectoryRecord, lambda: f64) -> Result<TrajectoryRecord> {
    if is_power_of_two_ratio(lambda).is_none() {
        return Err(Error::param("lambda", format!("{lambda} is not a power of two")));
    }
    let l2 = lambda * lambda;
    let snapshots = traj
        .snapshots
        .iter()
        .map(|(t, u)| Ok((t / l2, u.on_rescaled_grid(lambda, lambda)?)))
        .collect::<Result<Vec<_>>>()?;
    let diagnostics = traj
        .diagnostics
        .iter()
        .zip(&snapshots)
        .map(|(d, (t, u))| {
            let mut nd = snapshot_diagnostics(*t, u)?;
            // ||u^l||_inf = l ||u||_inf, times scale by 1/l^2
            nd.total_speed_accum = d.total_speed_accum / lambda;
            // ||grad u^l||_2^2 = l ||grad u||_2^2
            nd.dissipation_accum = d.dissipation_accum / lambda;
            Ok(nd)
        })
        .collect::<Result<Vec<Diagnostics>>>()?;
    Ok(TrajectoryRecord {
        grid: traj.grid.rescaled(lambda)?,
        dt: traj.dt / l2,
        dealias_fraction: traj.dealias_fraction,
        snapshots,
        diagnostics,
    })
}

/// PDE residual of a stored trajectory with centered time differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// `max_residual / max ||du/dt||_2`.
    pub relative: f64,
}

pub fn residual_check(traj: &TrajectoryRecord) -> Result<ResidualReport> {
    if traj.len() < 3 {
        return Err(Error::param("traj", "residual check needs at least 3 snapshots"));
    }
    let f = traj.dealias_fraction;
    let mut times = Vec::new();
    let mut residuals = Vec::new();
    let mut scale = 0.0f64;
    for i in 1..traj.len() - 1 {
        let (t0, u0) = &traj.snapshots[i - 1];
        let (t1, u1) = &traj.snapshots[i];
        let (t2, u2) = &traj.snapshots[i + 1];
        let (a, b) = (t1 - t0, t2 - t1);
        // three-point derivative, second order on nonuniform spacing
        let c0 = -b / (a * (a + b));
        let c1 = (b - a) / (a * b);
        let c2 = a / (b * (a + b));
        let mut dudt = u0.scaled(c0);
        dudt.axpy(c1, u1);
        dudt.axpy(c2, u2);
        scale = scale.max(dudt.l2_norm());
        let mut r = dudt;
        r.axpy(-1.0, &laplacian(u1));
        r.axpy(-1.0, &nonlinear_eval(u1, f).0);
        times.push(*t1);
        residuals.push(r.l2_norm());
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport {
        times,
        residuals,
        max_residual,
        relative: if scale > 0.0 { max_residual / scale } else { 0.0 },
    })
}

/// Discrete energy law `E(t_k) + int_0^{t_k} ||grad u||^2 <= E(t_0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `max_k (E(t_k) + D_k - E(t_{k-1}) - D_{k-1}) / (E(t_0) (t_k - t_{k-1}))`.
    pub worst_relative_increase: f64,
    pub kinetic_monotone: bool,
}

pub fn energy_inequality(traj: &TrajectoryRecord) -> EnergyReport {
    let d = &traj.diagnostics;
    let e0 = d.first().map_or(0.0, |x| x.energy);
    let mut worst = f64::NEG_INFINITY;
    let mut monotone = true;
    for w in d.windows(2) {
        let lhs = w[1].energy + w[1].dissipation_accum;
        let rhs = w[0].energy + w[0].dissipation_accum;
        let dt = w[1].time - w[0].time;
        if e0 > 0.0 && dt > 0.0 {
            worst = worst.max((lhs - rhs) / (e0 * dt));
        }
        monotone &= w[1].energy <= w[0].energy;
    }
    EnergyReport {
        worst_relative_increase: if worst.is_finite() { worst } else { 0.0 },
        kinetic_monotone: monotone,
    }
}

/// Evolve the vorticity with its own equation from the first snapshot and
/// compare with the curl of the stored velocities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurlCompatibility {
    pub times: Vec<f64>,
    /// `||w_evolved - curl u||_2 / ||curl u||_2` per time.
    pub relative_errors: Vec<f64>,
}

pub fn curl_compatibility(traj: &TrajectoryRecord) -> Result<CurlCompatibility> {
    let f = traj.dealias_fraction;
    let (t0, u0) = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::param("traj", "empty trajectory"))?;
    let mean: Vec<_> = (0..3).map(|c| u0.component(c)[0]).collect();
    let velocity_of = |w: &SpectralField| -> Result<SpectralField> {
        let mut u = crate::spectral::biot_savart(w)?;
        for (c, m) in mean.iter().enumerate() {
            u.component_mut(c)[0] = *m;
        }
        Ok(u)
    };
    let rhs = |w: &SpectralField| -> Result<SpectralField> {
        let u = velocity_of(w)?;
        let full = vorticity_rhs_unchecked(&u, w, f)?;
        Ok(full.sub(&laplacian(w))?)
    };
    let mut w = curl(u0)?;
    let mut t = *t0;
    let mut times = vec![t];
    let mut errs = vec![0.0];
    for (ts, us) in traj.snapshots.iter().skip(1) {
        let steps = ((ts - t) / traj.dt).round().max(1.0) as usize;
        let h = (ts - t) / steps as f64;
        for _ in 0..steps {
            w = lawson_rk4_step(&w, h, None, &rhs)?;
        }
        t = *ts;
        let target = curl(us)?;
        let scale = target.l2_norm();
        let e = w.sub(&target)?.l2_norm();
        times.push(t);
        errs.push(if scale > 0.0 { e / scale } else { e });
    }
    Ok(CurlCompatibility {
        times,
        relative_errors: errs,
    })
}
