use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::field::{FieldSample, SpacetimeField};
use super::scaled::{LogSum, ScaledValue};
use super::weights::CarlemanWeight;
use crate::error::{Error, Result};
use crate::spectral::Grid3;

/// Relative size of a field outside the weight's domain (or near the edge
/// of the periodic cell) above which the check refuses to run.
pub const SUPPORT_TOLERANCE: f64 = 1e-10;

/// Per-time comparison of the two sides of the general Carleman inequality
/// `dt int (|grad u|^2 + F|u|^2/2) e^g >= int (LF|u|^2/2 + 2 D^2 g(grad u, grad u) - |Lu|^2/2) e^g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub weight: String,
    pub parameters: BTreeMap<String, f64>,
    pub center: [f64; 3],
    pub fd_step: f64,
    pub times: Vec<f64>,
    /// Five-point time derivative of the weighted energy.
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub slack: Vec<f64>,
    /// `slack / max(|lhs|, |rhs|)`, zero when both sides vanish.
    pub normalized_slack: Vec<f64>,
    pub min_slack: f64,
    pub min_normalized_slack: f64,
    /// Largest relative field size where the weight was not evaluated.
    pub support_leak: f64,
}

pub(crate) struct PointGeometry {
    pub offsets: Vec<[f64; 3]>,
    pub radii: Vec<f64>,
}

impl PointGeometry {
    pub fn new(grid: &Grid3, center: [f64; 3]) -> Self {
        let p = grid.points();
        let mut offsets = Vec::with_capacity(p);
        let mut radii = Vec::with_capacity(p);
        for idx in 0..p {
            let y = grid.periodic_offset(grid.position(idx), center);
            radii.push((y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt());
            offsets.push(y);
        }
        PointGeometry { offsets, radii }
    }
}

pub(crate) fn pointwise(sample: &FieldSample, idx: usize) -> (f64, f64) {
    (
        sample.value.magnitude_sq_at(idx),
        sample.gradient.magnitude_sq_at(idx),
    )
}

/// Fraction of the field's size found where the weight is unusable.
fn support_leak(
    sample: &FieldSample,
    weight: &CarlemanWeight,
    t: f64,
    geo: &PointGeometry,
    grid: &Grid3,
) -> (f64, bool) {
    let edge = 0.45 * grid.length();
    let mut inside = 0.0f64;
    let mut outside = 0.0f64;
    let mut singular = false;
    for (idx, y) in geo.offsets.iter().enumerate() {
        let (u2, g2) = pointwise(sample, idx);
        let m = (u2 + g2).sqrt();
        let near_edge = weight.needs_compact_support() && y.iter().any(|c| c.abs() > edge);
        if !weight.contains(t, *y) || near_edge {
            if m > outside {
                outside = m;
                singular = weight
                    .singular_radius()
                    .is_some_and(|r0| geo.radii[idx] <= r0 + grid.spacing() * (1.0 + 1e-9));
            }
        }
        inside = inside.max(m);
    }
    let scale = inside.max(outside);
    if scale == 0.0 {
        (0.0, false)
    } else {
        (outside / scale, singular)
    }
}

fn weighted_energy(sample: &FieldSample, w: &CarlemanWeight, t: f64, geo: &PointGeometry, dv: f64) -> ScaledValue {
    let mut pos = LogSum::new();
    let mut neg = LogSum::new();
    for (idx, y) in geo.offsets.iter().enumerate() {
        if !w.contains(t, *y) {
            continue;
        }
        let (u2, g2) = pointwise(sample, idx);
        let g = w.g(t, *y);
        pos.add(g2 * dv, g);
        let f = 0.5 * w.f_closed(t, *y) * u2 * dv;
        if f >= 0.0 {
            pos.add(f, g);
        } else {
            neg.add(-f, g);
        }
    }
    pos.value().sub(neg.value())
}

fn right_side(sample: &FieldSample, w: &CarlemanWeight, t: f64, geo: &PointGeometry, dv: f64) -> Result<ScaledValue> {
    let lu = sample
        .lu
        .as_ref()
        .ok_or_else(|| Error::Precondition("field does not provide Lu".into()))?;
    let m = sample.value.components();
    let mut pos = LogSum::new();
    let mut neg = LogSum::new();
    let mut push = |v: f64, g: f64| {
        if v >= 0.0 {
            pos.add(v, g)
        } else {
            neg.add(-v, g)
        }
    };
    for (idx, y) in geo.offsets.iter().enumerate() {
        if !w.contains(t, *y) {
            continue;
        }
        let g = w.g(t, *y);
        let (u2, _) = pointwise(sample, idx);
        let mut hess = 0.0;
        for c in 0..m {
            let v = [
                sample.gradient.component(3 * c)[idx],
                sample.gradient.component(3 * c + 1)[idx],
                sample.gradient.component(3 * c + 2)[idx],
            ];
            hess += w.hessian_quadratic(t, *y, v);
        }
        push(0.5 * w.lf_closed(t, *y) * u2 * dv, g);
        push(2.0 * hess * dv, g);
        push(-0.5 * lu.magnitude_sq_at(idx) * dv, g);
    }
    Ok(pos.value().sub(neg.value()))
}

/// Evaluate both sides of the general Carleman inequality at `times`, the
/// time derivative by a five-point stencil of width `fd_step`.
pub fn carleman_monotonicity_check(
    field: &dyn SpacetimeField,
    weight: &CarlemanWeight,
    center: [f64; 3],
    times: &[f64],
    fd_step: f64,
) -> Result<MonotonicityReport> {
    if !(fd_step > 0.0) {
        return Err(Error::param("fd_step", "must be positive"));
    }
    if times.is_empty() {
        return Err(Error::param("times", "no sample times"));
    }
    let grid = field.grid();
    let geo = PointGeometry::new(&grid, center);
    let dv = grid.cell_volume();
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let mut slack = Vec::new();
    let mut normalized = Vec::new();
    let mut leak = 0.0f64;
    for &t in times {
        let mut q = [ScaledValue::ZERO; 4];
        for (k, off) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
            let s = t + off * fd_step;
            let sample = field.sample(s)?;
            let (l, singular) = support_leak(&sample, weight, s, &geo, &grid);
            if l > SUPPORT_TOLERANCE {
                return Err(Error::Precondition(if singular {
                    format!("field touches the weight's singular locus at t = {s} (relative size {l:.3e})")
                } else {
                    format!("field is not supported inside the weight's domain at t = {s} (relative size {l:.3e})")
                }));
            }
            leak = leak.max(l);
            q[k] = weighted_energy(&sample, weight, s, &geo, dv);
        }
        let d = q[0]
            .sub(q[1].scale(8.0))
            .add(q[2].scale(8.0))
            .sub(q[3])
            .scale(1.0 / (12.0 * fd_step));
        let sample = field.sample(t)?;
        let r = right_side(&sample, weight, t, &geo, dv)?;
        let sl = d.sub(r);
        let scale = d.max_abs(r);
        normalized.push(if scale.is_zero() { 0.0 } else { sl.ratio(scale) });
        lhs.push(d.to_f64());
        rhs.push(r.to_f64());
        slack.push(sl.to_f64());
    }
    Ok(MonotonicityReport {
        weight: weight.label().into(),
        parameters: weight.params.clone(),
        center,
        fd_step,
        times: times.to_vec(),
        min_slack: slack.iter().cloned().fold(f64::INFINITY, f64::min),
        min_normalized_slack: normalized.iter().cloned().fold(f64::INFINITY, f64::min),
        lhs,
        rhs,
        slack,
        normalized_slack: normalized,
        support_leak: leak,
    })
}
