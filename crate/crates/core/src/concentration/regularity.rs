use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{derivative_tensor, LpProjector};
use crate::numeric::{trapezoid, CompensatedSum};
use crate::solver::{duhamel_split, TrajectoryRecord};
use crate::spectral::{curl, jacobian, synthesize, SpectralField};

fn grid_max(f: &SpectralField) -> f64 {
    synthesize(f).magnitudes().into_iter().fold(0.0, f64::max)
}

/// `int_I ||u||_inf dt` and its ratio to `|I|^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TotalSpeed {
    pub interval: (f64, f64),
    pub integral: f64,
    pub ratio: f64,
}

/// Uses the per-step accumulated speed when both endpoints are stored
/// snapshots, and the snapshot trapezoid otherwise.
pub fn total_speed(traj: &TrajectoryRecord, a: f64, b: f64) -> Result<TotalSpeed> {
    if !(b > a) {
        return Err(Error::param("I", format!("degenerate interval [{a}, {b}]")));
    }
    let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
    if a < traj.first_time() - tol || b > traj.last_time() + tol {
        return Err(Error::param("I", "interval leaves the trajectory"));
    }
    let integral = match (traj.index_of_time(a), traj.index_of_time(b)) {
        (Ok(i), Ok(j)) if traj.diagnostics.len() == traj.len() => {
            traj.diagnostics[j].total_speed_accum - traj.diagnostics[i].total_speed_accum
        }
        _ => {
            let idx = traj.indices_in(a, b);
            if idx.len() < 2 {
                return Err(Error::param("I", "fewer than two snapshots in the interval"));
            }
            let ts: Vec<f64> = idx.iter().map(|&i| traj.snapshots[i].0).collect();
            let vs: Vec<f64> = idx
                .iter()
                .map(|&i| grid_max(traj.velocity(i)))
                .collect();
            trapezoid(&ts, &vs)
        }
    };
    Ok(TotalSpeed {
        interval: (a, b),
        integral,
        ratio: integral / (b - a).sqrt(),
    })
}

/// Grid sup norms of `u, grad u, w, grad w` at one snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    pub u: f64,
    pub grad_u: f64,
    pub omega: f64,
    pub grad_omega: f64,
}

pub fn sup_norms(u: &SpectralField) -> Result<SupNorms> {
    let w = curl(u)?;
    Ok(SupNorms {
        u: grid_max(u),
        grad_u: grid_max(&jacobian(u)?),
        omega: grid_max(&w),
        grad_omega: grid_max(&jacobian(&w)?),
    })
}

/// Scaled certificates `||grad^j u|| s^{(j+1)/2}`, `||grad^j w|| s^{(j+2)/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub u0: f64,
    pub u1: f64,
    pub omega0: f64,
    pub omega1: f64,
}

impl Certificates {
    pub fn from_norms(n: &SupNorms, s: f64) -> Self {
        Certificates {
            u0: n.u * s.sqrt(),
            u1: n.grad_u * s,
            omega0: n.omega * s,
            omega1: n.grad_omega * s.powf(1.5),
        }
    }

    pub fn worst(&self) -> f64 {
        self.u0.max(self.u1).max(self.omega0).max(self.omega1)
    }

    fn join(&self, o: &Certificates) -> Certificates {
        Certificates {
            u0: self.u0.max(o.u0),
            u1: self.u1.max(o.u1),
            omega0: self.omega0.max(o.omega0),
            omega1: self.omega1.max(o.omega1),
        }
    }

    fn zero() -> Self {
        Certificates {
            u0: 0.0,
            u1: 0.0,
            omega0: 0.0,
            omega1: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochCandidate {
    pub interval: (f64, f64),
    pub worst: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub parent: (f64, f64),
    pub interval: (f64, f64),
    pub certificates: Certificates,
    pub candidates: Vec<EpochCandidate>,
}

/// Among dyadically aligned subintervals of lengths `|I| / 2^k` down to
/// `|I| / subdivisions`, the one minimizing the worst `|I|`-scaled sup-norm
/// certificate over its stored snapshots; ties go to the longer, then earlier.
pub fn find_epoch(traj: &TrajectoryRecord, a: f64, b: f64, subdivisions: usize) -> Result<Epoch> {
    if !(b > a) {
        return Err(Error::param("I", "degenerate interval"));
    }
    if subdivisions == 0 {
        return Err(Error::param("subdivisions", "must be >= 1"));
    }
    let inside = traj.indices_in(a, b);
    if inside.len() < subdivisions {
        return Err(Error::param(
            "subdivisions",
            format!("{} snapshots in I, need {subdivisions}", inside.len()),
        ));
    }
    let len = b - a;
    let norms: Vec<(usize, Certificates)> = inside
        .iter()
        .map(|&i| Ok((i, Certificates::from_norms(&sup_norms(traj.velocity(i))?, len))))
        .collect::<Result<_>>()?;
    let mut candidates = Vec::new();
    let mut best: Option<(EpochCandidate, Certificates)> = None;
    let mut parts = 1usize;
    while parts <= subdivisions {
        let h = len / parts as f64;
        for j in 0..parts {
            let lo = a + j as f64 * h;
            let hi = if j + 1 == parts { b } else { a + (j + 1) as f64 * h };
            let members = traj.indices_in(lo, hi);
            if members.is_empty() {
                continue;
            }
            let cert = norms
                .iter()
                .filter(|(i, _)| members.contains(i))
                .fold(Certificates::zero(), |acc, (_, c)| acc.join(c));
            let cand = EpochCandidate {
                interval: (lo, hi),
                worst: cert.worst(),
            };
            // strict improvement only: earlier candidates are longer or earlier
            if best.as_ref().map_or(true, |(bc, _)| cand.worst < bc.worst) {
                best = Some((cand, cert));
            }
            candidates.push(cand);
        }
        parts *= 2;
    }
    let (chosen, certificates) = best.ok_or_else(|| Error::param("I", "no candidate holds a snapshot"))?;
    Ok(Epoch {
        parent: (a, b),
        interval: chosen.interval,
        certificates,
        candidates,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusCandidate {
    pub inner: f64,
    pub integrand: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub center: [f64; 3],
    pub inner: f64,
    pub ratio: f64,
    pub window: (f64, f64),
    pub t_ref: f64,
    pub t1: f64,
    pub certificates: Certificates,
    pub candidates: Vec<AnnulusCandidate>,
}

impl Annulus {
    pub fn outer(&self) -> f64 {
        self.inner * self.ratio
    }
}

/// Parameters of the annulus search around `(t0, x0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSearch {
    pub x0: [f64; 3],
    pub t0: f64,
    pub t_prime: f64,
    pub r0: f64,
    pub kappa: f64,
    pub n_scales: usize,
}

/// Pigeonhole the scales `R = kappa^m R0` on the amplitude integrand
/// `|grad u_nl(t1)|^2 + sum_{j<=4} |grad^j u_lin(t1)|^3` over
/// `R <= |x - x0| <= kappa R`, with the split taken from the first snapshot at
/// or after `t0 - 2T'` and `t1` minimizing `||grad u_nl||_2` over
/// `[t0 - 3T'/2, t0 - T']`.
pub fn find_annulus(traj: &TrajectoryRecord, s: &AnnulusSearch) -> Result<Annulus> {
    if !(s.kappa >= 2.0) {
        return Err(Error::param("kappa", "must be >= 2"));
    }
    if s.n_scales == 0 || !(s.r0 > 0.0) || !(s.t_prime > 0.0) {
        return Err(Error::param("n_scales", "need n_scales >= 1, R0 > 0, T' > 0"));
    }
    let g = traj.grid;
    let outermost = s.kappa.powi(s.n_scales as i32) * s.r0;
    if outermost > 0.5 * g.length() {
        return Err(Error::OutsideBox(format!(
            "outermost radius {outermost} exceeds half the box {}",
            0.5 * g.length()
        )));
    }
    let ref_idx = traj
        .indices_in(s.t0 - 2.0 * s.t_prime, s.t0)
        .first()
        .copied()
        .ok_or_else(|| Error::param("T'", "no snapshot after t0 - 2T'"))?;
    let t_ref = traj.snapshots[ref_idx].0;
    let split = duhamel_split(traj, t_ref)?;
    let pick: Vec<usize> = (0..split.times.len())
        .filter(|&k| {
            let t = split.times[k];
            t >= s.t0 - 1.5 * s.t_prime - 1e-12 && t <= s.t0 - s.t_prime + 1e-12
        })
        .collect();
    if pick.is_empty() {
        return Err(Error::param("T'", "no snapshot in [t0 - 3T'/2, t0 - T']"));
    }
    let mut k1 = pick[0];
    let mut best = f64::INFINITY;
    for &k in &pick {
        let v = jacobian(&split.u_nl[k])?.l2_norm();
        if v < best {
            best = v;
            k1 = k;
        }
    }
    let t1 = split.times[k1];

    let p = g.points();
    let mut density = synthesize(&jacobian(&split.u_nl[k1])?)
        .values()
        .chunks(p)
        .fold(vec![0.0; p], |mut acc, comp| {
            acc.iter_mut().zip(comp).for_each(|(a, v)| *a += v * v);
            acc
        });
    for j in 0..=4 {
        let mags = synthesize(&derivative_tensor(&split.u_lin[k1], j)?).magnitudes();
        density.iter_mut().zip(mags).for_each(|(d, m)| *d += m.powi(3));
    }
    let dist: Vec<f64> = (0..p).map(|i| g.periodic_distance(g.position(i), s.x0)).collect();
    let dv = g.cell_volume();
    let candidates: Vec<AnnulusCandidate> = (0..s.n_scales)
        .map(|m| {
            let r = s.kappa.powi(m as i32) * s.r0;
            let mut acc = CompensatedSum::new();
            for i in 0..p {
                if dist[i] >= r && dist[i] <= s.kappa * r {
                    acc.add(density[i]);
                }
            }
            AnnulusCandidate {
                inner: r,
                integrand: acc.value() * dv,
            }
        })
        .collect();
    let mut chosen = candidates[0];
    for c in &candidates[1..] {
        if c.integrand < chosen.integrand {
            chosen = *c;
        }
    }
    let (r_in, r_out) = (chosen.inner, chosen.inner * s.kappa);
    let mask: Vec<usize> = (0..p).filter(|&i| dist[i] >= r_in && dist[i] <= r_out).collect();
    let mut cert = Certificates::zero();
    for i in traj.indices_in(s.t0 - s.t_prime, s.t0) {
        let u = traj.velocity(i);
        let w = curl(u)?;
        let fields = [
            synthesize(u),
            synthesize(&jacobian(u)?),
            synthesize(&w),
            synthesize(&jacobian(&w)?),
        ];
        let sup: Vec<f64> = fields
            .iter()
            .map(|f| mask.iter().map(|&i| f.magnitude_at(i)).fold(0.0, f64::max))
            .collect();
        let n = SupNorms {
            u: sup[0],
            grad_u: sup[1],
            omega: sup[2],
            grad_omega: sup[3],
        };
        cert = cert.join(&Certificates::from_norms(&n, s.t_prime));
    }
    Ok(Annulus {
        center: s.x0,
        inner: r_in,
        ratio: s.kappa,
        window: (s.t0 - s.t_prime, s.t0),
        t_ref,
        t1,
        certificates: cert,
        candidates,
    })
}

/// Normalized pointwise bounds for `P_N u` and `P_N w` at one interior snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub t: f64,
    #[serde(rename = "N")]
    pub n: f64,
    /// `max_t ||u(t)||_3`.
    pub a: f64,
    /// `||P_N u||/(A N)`, `||grad P_N u||/(A N^2)`, `||d_t P_N u||/(A^2 N^3)`.
    pub velocity: [f64; 3],
    /// `||P_N w||/(A N^2)`, `||grad P_N w||/(A N^3)`, `||d_t P_N w||/(A^2 N^4)`.
    pub vorticity: [f64; 3],
}

pub fn pointwise_derivative_report(traj: &TrajectoryRecord, t: f64, n: f64) -> Result<DerivativeReport> {
    let i = traj.index_of_time(t)?;
    if i == 0 || i + 1 >= traj.len() {
        return Err(Error::param("t", "time derivative needs an interior snapshot"));
    }
    let a = traj.diagnostics.iter().map(|d| d.l3_norm).fold(0.0, f64::max);
    let lp = LpProjector::new(traj.grid);
    let (t0, t1, t2) = (traj.snapshots[i - 1].0, traj.snapshots[i].0, traj.snapshots[i + 1].0);
    let (ha, hb) = (t1 - t0, t2 - t1);
    let c = [-hb / (ha * (ha + hb)), (hb - ha) / (ha * hb), ha / (hb * (ha + hb))];
    let band = |k: usize| lp.project_band(traj.velocity(k), n);
    let (b0, b1, b2) = (band(i - 1)?, band(i)?, band(i + 1)?);
    let mut dt = b0.scaled(c[0]);
    dt.axpy(c[1], &b1);
    dt.axpy(c[2], &b2);
    let w1 = curl(&b1)?;
    let wdt = curl(&dt)?;
    if a == 0.0 {
        return Ok(DerivativeReport {
            t,
            n,
            a,
            velocity: [0.0; 3],
            vorticity: [0.0; 3],
        });
    }
    let velocity = [
        grid_max(&b1) / (a * n),
        grid_max(&jacobian(&b1)?) / (a * n * n),
        grid_max(&dt) / (a * a * n.powi(3)),
    ];
    let vorticity = [
        grid_max(&w1) / (a * n * n),
        grid_max(&jacobian(&w1)?) / (a * n.powi(3)),
        grid_max(&wdt) / (a * a * n.powi(4)),
    ];
    Ok(DerivativeReport {
        t,
        n,
        a,
        velocity,
        vorticity,
    })
}
