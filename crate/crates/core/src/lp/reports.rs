use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::multiplier::{apply_multiplier, MultiplierSymbol};
use super::projector::LpProjector;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::spectral::{heat_propagate, lp_norm, lp_norm_masked, partial, synthesize, Grid3, RealField, SpectralField};

/// Ratio report for one inequality over a sample collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality_id: String,
    pub parameters: BTreeMap<String, f64>,
    pub per_sample_ratios: Vec<f64>,
    pub max_ratio: f64,
    /// max/min of `max_ratio` across a dyadic sweep, when this report summarizes one.
    pub sweep_spread: Option<f64>,
    /// Samples whose ratio exceeded the supplied envelope.
    #[serde(default)]
    pub flagged: Vec<usize>,
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if p.is_nan() || q.is_nan() || p < 1.0 || q < 1.0 {
        return Err(Error::param("p", "exponents must be >= 1"));
    }
    if p > q {
        return Err(Error::param("q", format!("need p <= q, got p = {p}, q = {q}")));
    }
    Ok(())
}

/// `3/p - 3/q` with `1/inf = 0`.
fn gap(p: f64, q: f64) -> f64 {
    3.0 / p - 3.0 / q
}

fn physical(f: &SpectralField) -> RealField {
    synthesize(f)
}

/// `max_i ratio_i` over a collection, ignoring samples with zero denominator.
fn finish(id: &str, parameters: BTreeMap<String, f64>, ratios: Vec<f64>) -> InequalityReport {
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    InequalityReport {
        inequality_id: id.to_string(),
        parameters,
        per_sample_ratios: ratios,
        max_ratio,
        sweep_spread: None,
        flagged: Vec::new(),
    }
}

/// Empirical constant of `||T_m f||_q <= C M N^{3/p-3/q} ||f||_p`.
pub fn multiplier_bound_report(
    m: &MultiplierSymbol,
    p: f64,
    q: f64,
    samples: &[SpectralField],
) -> Result<InequalityReport> {
    check_exponents(p, q)?;
    let n = m.support_radius();
    let mut ratios = Vec::with_capacity(samples.len());
    for f in samples {
        let tf = physical(&apply_multiplier(m, f)?);
        let num = lp_norm(&tf, q)?;
        let den = m.bound() * n.powf(gap(p, q)) * lp_norm(&physical(f), p)?;
        ratios.push(if den > 0.0 { num / den } else { 0.0 });
    }
    let mut params = BTreeMap::new();
    params.insert("N".into(), n);
    params.insert("M".into(), m.bound());
    params.insert("p".into(), p);
    params.insert("q".into(), q);
    Ok(finish("multiplier_global", params, ratios))
}

/// A region of the periodic box, measured in the minimum-image metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Whole,
    Ball { center: [f64; 3], radius: f64 },
    Annulus { center: [f64; 3], inner: f64, outer: f64 },
}

impl Region {
    pub fn contains(&self, grid: &Grid3, x: [f64; 3]) -> bool {
        match *self {
            Region::Whole => true,
            Region::Ball { center, radius } => grid.periodic_distance(x, center) < radius,
            Region::Annulus { center, inner, outer } => {
                let r = grid.periodic_distance(x, center);
                r > inner && r < outer
            }
        }
    }

    /// Open `delta`-neighbourhood.
    pub fn neighbourhood(&self, delta: f64) -> Region {
        match *self {
            Region::Whole => Region::Whole,
            Region::Ball { center, radius } => Region::Ball {
                center,
                radius: radius + delta,
            },
            Region::Annulus { center, inner, outer } => {
                if inner <= delta {
                    Region::Ball {
                        center,
                        radius: outer + delta,
                    }
                } else {
                    Region::Annulus {
                        center,
                        inner: inner - delta,
                        outer: outer + delta,
                    }
                }
            }
        }
    }

    /// Exact Euclidean volume (the region is assumed to fit inside the box).
    pub fn volume(&self, grid: &Grid3) -> f64 {
        let ball = |r: f64| 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
        match *self {
            Region::Whole => grid.volume(),
            Region::Ball { radius, .. } => ball(radius),
            Region::Annulus { inner, outer, .. } => ball(outer) - ball(inner),
        }
    }
}

/// Exponents of the local multiplier bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalExponents {
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
}

/// Ratio of `||T_m f||_{q1(Omega)}` to
/// `M N^{3/p1-3/q1} ||f||_{p1(Omega_{A/N})} + A^{-50} M |Omega|^{1/q1-1/q2} N^{3/p2-3/q2} ||f||_{p2}`.
pub fn local_multiplier_report(
    m: &MultiplierSymbol,
    omega: Region,
    dilation: f64,
    e: LocalExponents,
    samples: &[SpectralField],
    envelope: f64,
) -> Result<InequalityReport> {
    check_exponents(e.p1, e.q1)?;
    check_exponents(e.p2, e.q2)?;
    if e.q2 < e.q1 {
        return Err(Error::param("q2", "need q2 >= q1"));
    }
    if !(dilation >= 1.0) {
        return Err(Error::param("A", "dilation must be >= 1"));
    }
    let n = m.support_radius();
    let wide = omega.neighbourhood(dilation / n);
    let mut ratios = Vec::with_capacity(samples.len());
    let mut local_terms = Vec::with_capacity(samples.len());
    let mut tail_terms = Vec::with_capacity(samples.len());
    for f in samples {
        let grid = *f.grid();
        let tf = physical(&apply_multiplier(m, f)?);
        let ff = physical(f);
        let lhs = lp_norm_masked(&tf, e.q1, |x| omega.contains(&grid, x))?;
        let local = m.bound()
            * n.powf(gap(e.p1, e.q1))
            * lp_norm_masked(&ff, e.p1, |x| wide.contains(&grid, x))?;
        let vol_exp = if e.q1.is_infinite() { 0.0 } else { 1.0 / e.q1 }
            - if e.q2.is_infinite() { 0.0 } else { 1.0 / e.q2 };
        let tail = dilation.powi(-50)
            * m.bound()
            * omega.volume(&grid).powf(vol_exp)
            * n.powf(gap(e.p2, e.q2))
            * lp_norm(&ff, e.p2)?;
        let rhs = local + tail;
        local_terms.push(local);
        tail_terms.push(tail);
        ratios.push(if rhs > 0.0 { lhs / rhs } else { 0.0 });
    }
    let mut params = BTreeMap::new();
    params.insert("N".into(), n);
    params.insert("M".into(), m.bound());
    params.insert("A".into(), dilation);
    params.insert("p1".into(), e.p1);
    params.insert("q1".into(), e.q1);
    params.insert("p2".into(), e.p2);
    params.insert("q2".into(), e.q2);
    params.insert("envelope".into(), envelope);
    params.insert(
        "max_local_term".into(),
        local_terms.iter().copied().fold(0.0, f64::max),
    );
    params.insert(
        "max_tail_term".into(),
        tail_terms.iter().copied().fold(0.0, f64::max),
    );
    let mut r = finish("multiplier_local", params, ratios);
    r.flagged = r
        .per_sample_ratios
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > envelope)
        .map(|(i, _)| i)
        .collect();
    Ok(r)
}

/// `nabla^j f` flattened to `3^j` components per input component.
pub fn derivative_tensor(f: &SpectralField, j: usize) -> Result<SpectralField> {
    let mut cur = f.clone();
    for _ in 0..j {
        let parts: Vec<SpectralField> = (0..cur.components())
            .flat_map(|c| {
                let fc = cur.component_field(c);
                (0..3).map(move |a| partial(&fc, a))
            })
            .collect();
        cur = SpectralField::stack(&parts)?;
    }
    Ok(cur)
}

/// Fraction of the L^2 mass lying outside `|xi| <= radius`.
pub fn spectral_leak(f: &SpectralField, radius: f64) -> f64 {
    let g = *f.grid();
    let p = g.points();
    let r2 = radius * radius * (1.0 + 1e-12);
    let mut outside = CompensatedSum::new();
    let mut total = CompensatedSum::new();
    for c in 0..f.components() {
        for (i, v) in f.component(c).iter().enumerate() {
            let e = v.norm_sqr();
            total.add(e);
            if g.frequency_norm_sq(i % p) > r2 {
                outside.add(e);
            }
        }
    }
    let t = total.value();
    if t == 0.0 {
        0.0
    } else {
        (outside.value() / t).sqrt()
    }
}

/// Tolerated spectral leak before a Bernstein input counts as not band-limited.
pub const SPECTRUM_TOLERANCE: f64 = 1e-12;

/// One Bernstein measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinMeasurement {
    pub n: f64,
    pub j: usize,
    pub p: f64,
    pub q: f64,
    pub heat_time: f64,
    /// `||nabla^j e^{t Lap} P f||_q / (e^{-N^2 t/20} N^{j+3/p-3/q} ||f||_p)`.
    pub ratio: f64,
    /// With `t > 0`: `||P_N e^{t Lap} nabla^j f||_q / ||P_N nabla^j f||_q`.
    pub measured_decay: Option<f64>,
    /// `e^{-N^2 t / 20}`.
    pub reference_decay: f64,
}

/// With `heat_time == 0` this measures `||nabla^j f||_q` for `f` with spectrum in
/// `B(0, N)` (rejecting other inputs); with `heat_time > 0` it measures
/// `||P_N e^{t Lap} nabla^j f||_q` for arbitrary `f`.
pub fn bernstein_report(
    lp: &LpProjector,
    f: &SpectralField,
    n: f64,
    j: usize,
    p: f64,
    q: f64,
    heat_time: f64,
) -> Result<BernsteinMeasurement> {
    check_exponents(p, q)?;
    if j > 2 {
        return Err(Error::param("j", "derivative order must be 0, 1 or 2"));
    }
    if !(heat_time >= 0.0) {
        return Err(Error::param("heat_time", "must be >= 0"));
    }
    let denom_norm = lp_norm(&physical(f), p)?;
    let scale = n.powf(j as f64 + gap(p, q));
    let reference_decay = (-n * n * heat_time / 20.0).exp();
    let (num, measured_decay) = if heat_time == 0.0 {
        let leak = spectral_leak(f, n);
        if leak > SPECTRUM_TOLERANCE {
            return Err(Error::SpectrumEscapes { radius: n, leak });
        }
        let d = derivative_tensor(f, j)?;
        (lp_norm(&physical(&d), q)?, None)
    } else {
        let band = lp.project_band(&derivative_tensor(f, j)?, n)?;
        let before = lp_norm(&physical(&band), q)?;
        let after = lp_norm(&physical(&heat_propagate(&band, heat_time)?), q)?;
        let decay = if before > 0.0 { Some(after / before) } else { None };
        (after, decay)
    };
    let den = reference_decay * scale * denom_norm;
    Ok(BernsteinMeasurement {
        n,
        j,
        p,
        q,
        heat_time,
        ratio: if den > 0.0 { num / den } else { 0.0 },
        measured_decay,
        reference_decay,
    })
}

/// Summary of a dyadic Bernstein sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinSweep {
    pub report: InequalityReport,
    pub measurements: Vec<BernsteinMeasurement>,
    /// Every heat measurement decayed at least as fast as `e^{-N^2 t/20}`.
    pub heat_dominated: bool,
}

/// Run `bernstein_report` on one profile carried to `steps` compatibly rescaled
/// boxes `L / 2^k` with `N_k = 2^k N_0`; the same coefficient array is used on
/// every box, so the profile on box `k` is the dilate `f(2^k x)`.
#[allow(clippy::too_many_arguments)]
pub fn bernstein_sweep(
    f: &SpectralField,
    n0: f64,
    steps: usize,
    j: usize,
    p: f64,
    q: f64,
    heat_time0: f64,
) -> Result<BernsteinSweep> {
    if steps == 0 {
        return Err(Error::param("steps", "need at least one sweep step"));
    }
    let mut measurements = Vec::with_capacity(steps);
    for k in 0..steps {
        let lambda = 2f64.powi(k as i32);
        let fk = f.on_rescaled_grid(lambda, 1.0)?;
        let lp = LpProjector::new(*fk.grid());
        // parabolic scaling keeps N^2 t fixed
        let t = heat_time0 / (lambda * lambda);
        measurements.push(bernstein_report(&lp, &fk, n0 * lambda, j, p, q, t)?);
    }
    let ratios: Vec<f64> = measurements.iter().map(|m| m.ratio).collect();
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let heat_dominated = measurements
        .iter()
        .all(|m| m.measured_decay.map_or(true, |d| d <= m.reference_decay));
    let mut params = BTreeMap::new();
    params.insert("N0".into(), n0);
    params.insert("steps".into(), steps as f64);
    params.insert("j".into(), j as f64);
    params.insert("p".into(), p);
    params.insert("q".into(), q);
    params.insert("heat_time0".into(), heat_time0);
    let mut report = finish("bernstein", params, ratios);
    report.sweep_spread = Some(if min > 0.0 { max / min } else { f64::INFINITY });
    Ok(BernsteinSweep {
        report,
        measurements,
        heat_dominated,
    })
}

/// Spread `max/min` of the empirical constants of several global reports.
pub fn sweep_spread(reports: &[InequalityReport]) -> f64 {
    let max = reports.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let min = reports
        .iter()
        .map(|r| r.max_ratio)
        .fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}
