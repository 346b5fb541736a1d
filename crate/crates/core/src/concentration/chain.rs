use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::constants::{ChainWindows, SurrogateConstants};
use super::events::{concentration_value, dyadic_frequencies, prefer, ConcentrationEvent, ValueCache};
use crate::error::{Error, Result};
use crate::solver::TrajectoryRecord;

/// Why a chain stopped growing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainTermination {
    /// The time window reached before the first stored snapshot.
    TrajectoryStart,
    /// No stored snapshot fell inside the time window.
    WindowExhausted,
    /// Candidates existed but none reached the threshold.
    NoSuccessor,
    /// The configured link limit was reached.
    LinkLimit,
}

/// Scale-normalized displacement of one link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkRatios {
    /// `(t_{i-1} - t_i) N_{i-1}^2`.
    pub time: f64,
    /// `|x_i - x_{i-1}| N_{i-1}` in the periodic metric.
    pub space: f64,
    /// `N_i / N_{i-1}`.
    pub freq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub threshold: f64,
    pub windows: ChainWindows,
    /// Seed first, then successors backward in time.
    pub events: Vec<ConcentrationEvent>,
    /// `links[i]` joins `events[i]` to `events[i + 1]`.
    pub links: Vec<LinkRatios>,
    pub termination: ChainTermination,
}

impl LinkRatios {
    pub fn between(traj: &TrajectoryRecord, a: &ConcentrationEvent, b: &ConcentrationEvent) -> Self {
        LinkRatios {
            time: (a.t - b.t) * a.n * a.n,
            space: traj.grid.periodic_distance(b.x, a.x) * a.n,
            freq: b.n / a.n,
        }
    }

    /// The three window predicates.
    pub fn admissible(&self, w: &ChainWindows) -> bool {
        self.time >= w.time_lo
            && self.time <= w.time_hi
            && self.space <= w.space
            && self.freq >= 1.0 / w.freq
            && self.freq <= w.freq
    }
}

/// Greedy backward chain: each successor is the maximal-value grid event in
/// the link windows whose value reaches `1 / A_1`.
pub fn back_propagate_chain(
    traj: &TrajectoryRecord,
    seed: &ConcentrationEvent,
    consts: &SurrogateConstants,
    windows: &ChainWindows,
    max_links: usize,
) -> Result<ChainReport> {
    windows.validate()?;
    let threshold = consts.threshold();
    let seed_value = concentration_value(traj, seed.t, seed.x, seed.n)?;
    if !(seed_value >= threshold) {
        return Err(Error::Precondition(format!(
            "seed value {seed_value:.6e} is below the threshold {threshold:.6e}"
        )));
    }
    let seed = ConcentrationEvent {
        value: seed_value,
        x: traj.grid.wrap(seed.x),
        ..*seed
    };
    let g = traj.grid;
    let ladder = dyadic_frequencies(traj);
    let mut cache = ValueCache::new(traj);
    let mut events = vec![seed];
    let mut links = Vec::new();
    let termination = loop {
        if links.len() >= max_links {
            break ChainTermination::LinkLimit;
        }
        let cur = *events.last().unwrap();
        let inv2 = 1.0 / (cur.n * cur.n);
        let lo = cur.t - windows.time_hi * inv2;
        let hi = cur.t - windows.time_lo * inv2;
        let candidates: Vec<usize> = traj
            .indices_in(lo, hi)
            .into_iter()
            .filter(|&i| {
                let d = cur.t - traj.snapshots[i].0;
                d >= windows.time_lo * inv2 && d <= windows.time_hi * inv2
            })
            .collect();
        if candidates.is_empty() {
            break if hi < traj.first_time() {
                ChainTermination::TrajectoryStart
            } else {
                ChainTermination::WindowExhausted
            };
        }
        let freqs: Vec<f64> = ladder
            .iter()
            .copied()
            .filter(|&n| {
                let r = n / cur.n;
                r >= 1.0 / windows.freq && r <= windows.freq
            })
            .collect();
        let radius = windows.space / cur.n;
        let points: Vec<usize> = (0..g.points())
            .filter(|&idx| g.periodic_distance(g.position(idx), cur.x) <= radius)
            .collect();
        let mut best: Option<ConcentrationEvent> = None;
        for &i in &candidates {
            let t = traj.snapshots[i].0;
            for &n in &freqs {
                let vals = cache.values(i, n)?;
                for &idx in &points {
                    let v = vals[idx];
                    if v < threshold {
                        continue;
                    }
                    let e = ConcentrationEvent {
                        t,
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
        match best {
            Some(e) => {
                links.push(LinkRatios::between(traj, &cur, &e));
                events.push(e);
            }
            None => break ChainTermination::NoSuccessor,
        }
    };
    Ok(ChainReport {
        threshold,
        windows: *windows,
        events,
        links,
        termination,
    })
}
