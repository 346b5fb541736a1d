use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::LpProjector;
use crate::solver::TrajectoryRecord;
use crate::spectral::synthesize;

/// A concentration event `(t, x, N)` with value `N^{-1} |P_N u(t, x)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEvent {
    pub t: f64,
    pub x: [f64; 3],
    #[serde(rename = "N")]
    pub n: f64,
    pub value: f64,
}

/// Deterministic ordering: larger value first, then smaller `N`, earlier `t`,
/// lexicographically smaller `x`.
pub fn prefer(a: &ConcentrationEvent, b: &ConcentrationEvent) -> Ordering {
    b.value
        .total_cmp(&a.value)
        .then(a.n.total_cmp(&b.n))
        .then(a.t.total_cmp(&b.t))
        .then(a.x[0].total_cmp(&b.x[0]))
        .then(a.x[1].total_cmp(&b.x[1]))
        .then(a.x[2].total_cmp(&b.x[2]))
}

/// Dyadic frequencies `2^k / L` covering the grid spectrum, `k = 0..=log2(n)`.
pub fn dyadic_frequencies(traj: &TrajectoryRecord) -> Vec<f64> {
    let n = traj.grid.n();
    traj.grid.dyadic_ladder(0, n.trailing_zeros() as i32)
}

/// Evaluate `N^{-1} |P_N u(t, x)|` by spectral interpolation; `x` is wrapped
/// into the box.
pub fn concentration_value(traj: &TrajectoryRecord, t: f64, x: [f64; 3], n: f64) -> Result<f64> {
    let i = traj.index_of_time(t)?;
    let lp = LpProjector::new(traj.grid);
    let band = lp.project_band(traj.velocity(i), n)?;
    let v = band.evaluate_at(traj.grid.wrap(x));
    Ok((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() / n)
}

/// Cache of `|P_N u(t_i)| / N` on the grid, keyed by snapshot and frequency.
pub(crate) struct ValueCache<'a> {
    traj: &'a TrajectoryRecord,
    lp: LpProjector,
    maps: HashMap<(usize, u64), std::sync::Arc<Vec<f64>>>,
}

impl<'a> ValueCache<'a> {
    pub fn new(traj: &'a TrajectoryRecord) -> Self {
        ValueCache {
            traj,
            lp: LpProjector::new(traj.grid),
            maps: HashMap::new(),
        }
    }

    pub fn values(&mut self, i: usize, n: f64) -> Result<std::sync::Arc<Vec<f64>>> {
        if let Some(v) = self.maps.get(&(i, n.to_bits())) {
            return Ok(v.clone());
        }
        let band = self.lp.project_band(self.traj.velocity(i), n)?;
        let phys = synthesize(&band);
        let v: Vec<f64> = phys.magnitudes().into_iter().map(|m| m / n).collect();
        let v = std::sync::Arc::new(v);
        self.maps.insert((i, n.to_bits()), v.clone());
        Ok(v)
    }
}

/// Every grid event with value `>= threshold`, latest time first, then by
/// [`prefer`] within a time.
pub fn scan_concentrations(
    traj: &TrajectoryRecord,
    frequencies: &[f64],
    threshold: f64,
) -> Result<Vec<ConcentrationEvent>> {
    if frequencies.is_empty() {
        return Err(Error::param("N_list", "need at least one frequency"));
    }
    if !(threshold > 0.0) {
        return Err(Error::param("threshold", "must be positive"));
    }
    let g = traj.grid;
    let mut cache = ValueCache::new(traj);
    let mut out = Vec::new();
    for i in 0..traj.len() {
        let t = traj.snapshots[i].0;
        for &n in frequencies {
            let vals = cache.values(i, n)?;
            for (idx, &v) in vals.iter().enumerate() {
                if v >= threshold {
                    out.push(ConcentrationEvent {
                        t,
                        x: g.position(idx),
                        n,
                        value: v,
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| b.t.total_cmp(&a.t).then(prefer(a, b)));
    Ok(out)
}

/// The single strongest grid event over the given snapshots and frequencies.
pub fn strongest_event(
    traj: &TrajectoryRecord,
    indices: &[usize],
    frequencies: &[f64],
) -> Result<Option<ConcentrationEvent>> {
    let g = traj.grid;
    let mut cache = ValueCache::new(traj);
    let mut best: Option<ConcentrationEvent> = None;
    for &i in indices {
        for &n in frequencies {
            let vals = cache.values(i, n)?;
            for (idx, &v) in vals.iter().enumerate() {
                let e = ConcentrationEvent {
                    t: traj.snapshots[i].0,
                    x: g.position(idx),
                    n,
                    value: v,
                };
                if best.as_ref().map_or(true, |b| prefer(&e, b) == Ordering::Less) {
                    best = Some(e);
                }
            }
        }
    }
    Ok(best)
}
