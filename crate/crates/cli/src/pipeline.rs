use std::collections::BTreeMap;

use cns_core::carleman::{
    first_inequality_report, second_inequality_report, AlphaChoice, FirstInequalityParams,
    FirstInequalityReport, ReversedTrajectoryField, SecondInequalityParams, SecondInequalityReport,
    SUPPORT_TOLERANCE,
};
use cns_core::concentration::{
    back_propagate_chain, concentration_value, dyadic_frequencies, find_annulus, find_epoch,
    strongest_event, Annulus, AnnulusSearch, ChainReport, ChainWindows, ConcentrationEvent, Epoch,
    SurrogateConstants,
};
use cns_core::solver::TrajectoryRecord;
use cns_core::spectral::synthesize;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage<T> {
    pub status: StageStatus,
    pub reason: Option<String>,
    pub output: Option<T>,
}

impl<T> Stage<T> {
    pub fn completed(output: T) -> Self {
        Stage {
            status: StageStatus::Completed,
            reason: None,
            output: Some(output),
        }
    }

    pub fn skipped(reason: impl Into<String>) -> Self {
        Stage {
            status: StageStatus::Skipped,
            reason: Some(reason.into()),
            output: None,
        }
    }

    fn from_result(r: cns_core::Result<T>) -> Self {
        match r {
            Ok(v) => Stage::completed(v),
            Err(e) => Stage::skipped(e.to_string()),
        }
    }

    pub fn output(&self) -> Option<&T> {
        self.output.as_ref()
    }

    /// Run the next stage on this one's output, or skip it naming `name`.
    fn then<U>(&self, name: &str, f: impl FnOnce(&T) -> Stage<U>) -> Stage<U> {
        match &self.output {
            Some(v) => f(v),
            None => Stage::skipped(format!("needs the {name} stage")),
        }
    }
}

/// Where the chain starts, when it is given rather than searched for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub t: f64,
    pub x: [f64; 3],
    pub n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub seed: Option<SeedSpec>,
    pub a: f64,
    pub c0: f64,
    pub max_links: usize,
    /// The epoch search runs over `[t_n - epoch_span / N_n^2, t_n]`.
    pub epoch_span: f64,
    pub epoch_subdivisions: usize,
    pub annulus_r0: f64,
    pub annulus_kappa: f64,
    pub annulus_scales: usize,
    pub carleman_c0: f64,
    pub exponent_coefficient: f64,
}

impl PipelineParams {
    pub fn from_config(c: &RunConfig, seed: Option<SeedSpec>) -> Self {
        PipelineParams {
            seed,
            a: c.chain_a,
            c0: c.chain_c0,
            max_links: c.max_links,
            epoch_span: c.epoch_span,
            epoch_subdivisions: c.epoch_subdivisions,
            annulus_r0: c.annulus_r0,
            annulus_kappa: c.annulus_kappa,
            annulus_scales: c.annulus_scales,
            carleman_c0: c.carleman_c0,
            exponent_coefficient: c.exponent_coefficient,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub event: ConcentrationEvent,
    pub threshold: f64,
    /// `given` or `strongest` (searched over the last snapshot).
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnularMass {
    pub t: f64,
    pub center: [f64; 3],
    pub inner: f64,
    pub outer: f64,
    /// `int_{inner <= |x - center| <= outer} |u(t)|^3` by grid quadrature.
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub params: PipelineParams,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: Stage<SeedRecord>,
    pub chain: Stage<ChainReport>,
    pub epoch: Stage<Epoch>,
    pub carleman_second: Stage<SecondInequalityReport>,
    pub annulus: Stage<Annulus>,
    pub carleman_first: Stage<FirstInequalityReport>,
    pub annular_mass: Stage<AnnularMass>,
}

impl PipelineReport {
    pub fn stages(&self) -> [(&'static str, StageStatus, Option<&str>); 7] {
        [
            ("seed", self.seed.status, self.seed.reason.as_deref()),
            ("chain", self.chain.status, self.chain.reason.as_deref()),
            ("epoch", self.epoch.status, self.epoch.reason.as_deref()),
            ("carleman_second", self.carleman_second.status, self.carleman_second.reason.as_deref()),
            ("annulus", self.annulus.status, self.annulus.reason.as_deref()),
            ("carleman_first", self.carleman_first.status, self.carleman_first.reason.as_deref()),
            ("annular_mass", self.annular_mass.status, self.annular_mass.reason.as_deref()),
        ]
    }
}

/// `t' - t_i` for the stored `t_i <= t'`, ascending.
pub fn reversed_times(traj: &TrajectoryRecord, t_prime: f64) -> Vec<f64> {
    let mut s: Vec<f64> = traj
        .indices_in(traj.first_time(), t_prime)
        .into_iter()
        .map(|i| (t_prime - traj.snapshots[i].0).max(0.0))
        .collect();
    s.sort_by(f64::total_cmp);
    s
}

fn seed_stage(traj: &TrajectoryRecord, p: &PipelineParams, consts: &SurrogateConstants) -> Stage<SeedRecord> {
    if traj.is_empty() {
        return Stage::skipped("trajectory has no snapshots");
    }
    if traj.is_zero() {
        return Stage::skipped("trajectory is identically zero");
    }
    let threshold = consts.threshold();
    let (event, source) = match p.seed {
        Some(s) => match concentration_value(traj, s.t, s.x, s.n) {
            Ok(value) => (
                ConcentrationEvent {
                    t: s.t,
                    x: traj.grid.wrap(s.x),
                    n: s.n,
                    value,
                },
                "given",
            ),
            Err(e) => return Stage::skipped(e.to_string()),
        },
        None => {
            let last = traj.len() - 1;
            match strongest_event(traj, &[last], &dyadic_frequencies(traj)) {
                Ok(Some(e)) => (e, "strongest"),
                Ok(None) => return Stage::skipped("no concentration event on the last snapshot"),
                Err(e) => return Stage::skipped(e.to_string()),
            }
        }
    };
    if !(event.value >= threshold) {
        return Stage::skipped(format!(
            "seed value {:.6e} is below the threshold {threshold:.6e}",
            event.value
        ));
    }
    Stage::completed(SeedRecord {
        event,
        threshold,
        source: source.into(),
    })
}

fn second_params(traj: &TrajectoryRecord, epoch: &Epoch, center: [f64; 3], p: &PipelineParams) -> cns_core::Result<(f64, SecondInequalityParams)> {
    let t_prime = epoch.interval.1;
    let s = reversed_times(traj, t_prime);
    if s.len() < 3 {
        return Err(cns_core::Error::Precondition(format!(
            "only {} stored times at or before t' = {t_prime}",
            s.len()
        )));
    }
    let horizon = s[s.len() - 1];
    let t0 = s[1];
    Ok((
        t_prime,
        SecondInequalityParams {
            center,
            horizon,
            radius: (4000.0 * horizon).sqrt(),
            t0,
            t1: t0,
            c0: p.carleman_c0,
            exponent_coefficient: p.exponent_coefficient,
            times: s,
        },
    ))
}

fn first_params(traj: &TrajectoryRecord, annulus: &Annulus, p: &PipelineParams) -> cns_core::Result<(f64, FirstInequalityParams)> {
    let t_prime = annulus.t1;
    let s = reversed_times(traj, t_prime);
    let r_minus = annulus.inner;
    let admissible = |k: usize| k >= 4 && k % 4 == 0 && r_minus * r_minus >= 4.0 * p.carleman_c0 * s[k];
    let k = (0..s.len()).rev().find(|&k| admissible(k)).ok_or_else(|| {
        cns_core::Error::Precondition(format!(
            "no horizon of 4m stored steps before t' = {t_prime} satisfies r_-^2 >= 4 C0 T (r_- = {r_minus}, C0 = {}, {} stored times)",
            p.carleman_c0,
            s.len()
        ))
    })?;
    Ok((
        t_prime,
        FirstInequalityParams {
            center: annulus.center,
            horizon: s[k],
            c0: p.carleman_c0,
            r_minus,
            r_plus: annulus.outer(),
            times: s[..=k].to_vec(),
            alpha: AlphaChoice::AsPrinted,
        },
    ))
}

pub fn annular_mass(traj: &TrajectoryRecord, t: f64, center: [f64; 3], inner: f64, outer: f64) -> cns_core::Result<AnnularMass> {
    let i = traj.index_of_time(t)?;
    let u = synthesize(traj.velocity(i));
    let g = traj.grid;
    let mut acc = cns_core::numeric::CompensatedSum::new();
    for idx in 0..g.points() {
        let r = g.periodic_distance(g.position(idx), center);
        if r >= inner && r <= outer {
            acc.add(u.magnitude_at(idx).powi(3) * g.cell_volume());
        }
    }
    Ok(AnnularMass {
        t,
        center,
        inner,
        outer,
        mass: acc.value(),
    })
}

/// Run every stage in order. A stage whose preconditions fail is recorded
/// as skipped with the reason, and so are the stages that need its output.
pub fn pipeline_main_estimate(traj: &TrajectoryRecord, p: &PipelineParams) -> PipelineReport {
    let tolerances: BTreeMap<String, f64> = [
        ("lemma_support".to_string(), SUPPORT_TOLERANCE),
        ("snapshot_time_match".to_string(), 1e-9 * traj.dt),
    ]
    .into_iter()
    .collect();
    let base = |seed, chain, epoch, c2, ann, c1, mass| PipelineReport {
        n: traj.grid.n(),
        length: traj.grid.length(),
        dt: traj.dt,
        params: p.clone(),
        tolerances: tolerances.clone(),
        seed,
        chain,
        epoch,
        carleman_second: c2,
        annulus: ann,
        carleman_first: c1,
        annular_mass: mass,
    };
    let consts = match SurrogateConstants::new(p.a, p.c0) {
        Ok(c) => c,
        Err(e) => {
            let r = e.to_string();
            return base(
                Stage::skipped(r.clone()),
                Stage::skipped(r.clone()),
                Stage::skipped(r.clone()),
                Stage::skipped(r.clone()),
                Stage::skipped(r.clone()),
                Stage::skipped(r.clone()),
                Stage::skipped(r),
            );
        }
    };
    let windows = ChainWindows::from_constants(&consts);
    let seed = seed_stage(traj, p, &consts);
    let chain = seed.then("seed", |s| {
        Stage::from_result(back_propagate_chain(traj, &s.event, &consts, &windows, p.max_links))
    });
    let epoch = chain.then("chain", |c| {
        let last = c.events.last().expect("chain holds its seed");
        let a = (last.t - p.epoch_span / (last.n * last.n)).max(traj.first_time());
        if !(last.t > a) {
            return Stage::skipped(format!(
                "the last chain event sits at the first stored time {}, leaving no epoch window",
                last.t
            ));
        }
        Stage::from_result(find_epoch(traj, a, last.t, p.epoch_subdivisions))
    });
    let center = chain.output().and_then(|c| c.events.last()).map(|e| e.x);
    let carleman_second = epoch.then("epoch", |e| {
        Stage::from_result(second_params(traj, e, center.unwrap(), p).and_then(|(t_prime, sp)| {
            let field = ReversedTrajectoryField::new(traj, t_prime)?;
            second_inequality_report(&field, &sp)
        }))
    });
    let annulus = epoch.then("epoch", |e| {
        let search = AnnulusSearch {
            x0: center.unwrap(),
            t0: e.interval.1,
            t_prime: 0.5 * (e.interval.1 - e.interval.0),
            r0: p.annulus_r0,
            kappa: p.annulus_kappa,
            n_scales: p.annulus_scales,
        };
        Stage::from_result(find_annulus(traj, &search))
    });
    let carleman_first = annulus.then("annulus", |a| {
        Stage::from_result(first_params(traj, a, p).and_then(|(t_prime, fp)| {
            let field = ReversedTrajectoryField::new(traj, t_prime)?;
            first_inequality_report(&field, &fp)
        }))
    });
    let annular = epoch.then("epoch", |e| {
        annulus.then("annulus", |a| {
            Stage::from_result(annular_mass(traj, e.interval.1, a.center, a.inner, a.outer()))
        })
    });
    base(seed, chain, epoch, carleman_second, annulus, carleman_first, annular)
}
