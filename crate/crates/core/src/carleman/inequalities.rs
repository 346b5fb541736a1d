use serde::{Deserialize, Serialize};

use super::field::{FieldSample, Reparameterization, SpacetimeField};
use super::lemma::{pointwise, PointGeometry};
use super::scaled::{scaled_trapezoid, Functional, LogSum, ScaledValue};
use super::weights::AlphaChoice;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Outcome of checking `|Lu| <= |u|/(C0 T) + |grad u|/sqrt(C0 T)` on the
/// integration region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferentialInequalityCheck {
    pub checked: bool,
    /// Largest `|Lu| / (|u|/(C0 T) + |grad u|/sqrt(C0 T))` over points where the
    /// bound is nonzero.
    pub max_ratio: f64,
    /// Points where `Lu != 0` but the bound vanishes.
    pub unbounded_points: usize,
    pub satisfied: bool,
}

impl DifferentialInequalityCheck {
    fn unchecked() -> Self {
        DifferentialInequalityCheck {
            checked: false,
            max_ratio: 0.0,
            unbounded_points: 0,
            satisfied: false,
        }
    }
}

struct LuAccumulator {
    checked: bool,
    max_ratio: f64,
    unbounded: usize,
}

impl LuAccumulator {
    fn new() -> Self {
        LuAccumulator {
            checked: true,
            max_ratio: 0.0,
            unbounded: 0,
        }
    }

    fn visit(&mut self, sample: &FieldSample, idx: usize, c0t: f64) {
        let Some(lu) = &sample.lu else {
            self.checked = false;
            return;
        };
        let (u2, g2) = pointwise(sample, idx);
        let bound = u2.sqrt() / c0t + g2.sqrt() / c0t.sqrt();
        let l = lu.magnitude_at(idx);
        if bound > 0.0 {
            self.max_ratio = self.max_ratio.max(l / bound);
        } else if l > 0.0 {
            self.unbounded += 1;
        }
    }

    fn finish(self) -> DifferentialInequalityCheck {
        if !self.checked {
            return DifferentialInequalityCheck::unchecked();
        }
        DifferentialInequalityCheck {
            checked: true,
            max_ratio: self.max_ratio,
            unbounded_points: self.unbounded,
            satisfied: self.unbounded == 0 && self.max_ratio <= 1.0 + 1e-9,
        }
    }
}

fn validate_times(times: &[f64], marks: &[(&str, f64)]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::param("times", "need at least two quadrature nodes"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("times", "must be strictly increasing"));
    }
    let span = times[times.len() - 1] - times[0];
    for (name, t) in marks {
        if !times.iter().any(|s| (s - t).abs() <= 1e-9 * span.max(t.abs())) {
            return Err(Error::param("times", format!("no quadrature node at {name} = {t}")));
        }
    }
    Ok(())
}

fn upto(times: &[f64], lo: f64, hi: f64) -> Vec<usize> {
    let span = times[times.len() - 1] - times[0];
    let tol = 1e-9 * span.max(hi.abs());
    (0..times.len())
        .filter(|&i| times[i] >= lo - tol && times[i] <= hi + tol)
        .collect()
}

fn integrate(times: &[f64], nodes: &[usize], values: &[ScaledValue]) -> ScaledValue {
    let t: Vec<f64> = nodes.iter().map(|&i| times[i]).collect();
    let v: Vec<ScaledValue> = nodes.iter().map(|&i| values[i]).collect();
    scaled_trapezoid(&t, &v)
}

fn reparameterization(field: &dyn SpacetimeField, center: [f64; 3]) -> Option<Reparameterization> {
    field
        .reversal_origin()
        .map(|t_prime| Reparameterization { t_prime, center })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstInequalityParams {
    pub center: [f64; 3],
    pub horizon: f64,
    pub c0: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    /// Quadrature nodes on `[0, T]`, including `T/4`.
    pub times: Vec<f64>,
    pub alpha: AlphaChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstInequalityReport {
    pub params: FirstInequalityParams,
    pub reparameterization: Option<Reparameterization>,
    /// `int int_A e^{2|x|^2/C0 T}(|u|^2/T + |grad u|^2)`.
    pub x: Functional,
    /// `int_{r_- <= |x| <= r_+} |u(0)|^2`.
    pub y: Functional,
    /// `int_0^{T/4} int_{10 r_- <= |x| <= r_+/2} (|u|^2/T + |grad u|^2)`.
    pub lhs: Functional,
    /// `C0^2 e^{-r_- r_+/4 C0 T}(X + e^{2 r_+^2/C0 T} Y)`.
    pub bound: Functional,
    pub slack: Functional,
    /// `r_- r_+ / (4 C0 T)`, the exponent used in the bound.
    pub gain_exponent: f64,
    /// `alpha T r_- / 2` for the selected `alpha`.
    pub alpha_gain_exponent: f64,
    pub alpha_value: f64,
    pub alpha_label: String,
    pub lu_check: DifferentialInequalityCheck,
}

pub fn first_inequality_report(
    field: &dyn SpacetimeField,
    p: &FirstInequalityParams,
) -> Result<FirstInequalityReport> {
    for (name, v) in [("horizon", p.horizon), ("c0", p.c0), ("r_minus", p.r_minus)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, "must be positive and finite"));
        }
    }
    if p.r_plus <= p.r_minus {
        return Err(Error::param("r_plus", "must exceed r_minus"));
    }
    let grid = field.grid();
    if p.r_plus > 0.5 * grid.length() {
        return Err(Error::OutsideBox(format!(
            "annulus outer radius {} exceeds half the box {}",
            p.r_plus,
            0.5 * grid.length()
        )));
    }
    let c0t = p.c0 * p.horizon;
    if p.r_minus * p.r_minus < 4.0 * c0t {
        return Err(Error::Precondition(format!(
            "r_minus^2 = {} is below 4 C0 T = {}",
            p.r_minus * p.r_minus,
            4.0 * c0t
        )));
    }
    validate_times(&p.times, &[("0", 0.0), ("T/4", 0.25 * p.horizon), ("T", p.horizon)])?;
    let times = &p.times;
    if times[0] < -1e-12 * p.horizon || times[times.len() - 1] > p.horizon * (1.0 + 1e-12) {
        return Err(Error::param("times", "nodes must lie in [0, T]"));
    }

    let geo = PointGeometry::new(&grid, p.center);
    let dv = grid.cell_volume();
    let mut x_t = Vec::with_capacity(times.len());
    let mut l_t = Vec::with_capacity(times.len());
    let mut y0 = ScaledValue::ZERO;
    let mut lu = LuAccumulator::new();
    for (k, &t) in times.iter().enumerate() {
        let s = field.sample(t)?;
        let mut xs = LogSum::new();
        let mut ls = CompensatedSum::new();
        let mut ys = CompensatedSum::new();
        for (idx, &r) in geo.radii.iter().enumerate() {
            if r < p.r_minus || r > p.r_plus {
                continue;
            }
            let (u2, g2) = pointwise(&s, idx);
            let e = u2 / p.horizon + g2;
            xs.add(e * dv, 2.0 * r * r / c0t);
            if r >= 10.0 * p.r_minus && r <= 0.5 * p.r_plus {
                ls.add(e * dv);
            }
            if k == 0 {
                ys.add(u2 * dv);
            }
            lu.visit(&s, idx, c0t);
        }
        x_t.push(xs.value());
        l_t.push(ScaledValue::from_f64(ls.value()));
        if k == 0 {
            y0 = ScaledValue::from_f64(ys.value());
        }
    }
    let all: Vec<usize> = (0..times.len()).collect();
    let x = integrate(times, &all, &x_t);
    let lhs = integrate(times, &upto(times, 0.0, 0.25 * p.horizon), &l_t);
    let gain = p.r_minus * p.r_plus / (4.0 * c0t);
    let bound = x
        .add(y0.mul_exp(2.0 * p.r_plus * p.r_plus / c0t))
        .mul_exp(-gain)
        .scale(p.c0 * p.c0);
    let alpha = match p.alpha {
        AlphaChoice::AsPrinted => p.r_plus / (2.0 * c0t * p.horizon),
        AlphaChoice::Alternate => p.r_plus / (2.0 * c0t),
        AlphaChoice::Explicit(a) => a,
    };
    Ok(FirstInequalityReport {
        params: p.clone(),
        reparameterization: reparameterization(field, p.center),
        x: x.into(),
        y: y0.into(),
        lhs: lhs.into(),
        slack: bound.sub(lhs).into(),
        bound: bound.into(),
        gain_exponent: gain,
        alpha_gain_exponent: alpha * p.horizon * p.r_minus / 2.0,
        alpha_value: alpha,
        alpha_label: p.alpha.label().into(),
        lu_check: lu.finish(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondInequalityParams {
    pub center: [f64; 3],
    pub horizon: f64,
    pub radius: f64,
    pub t0: f64,
    pub t1: f64,
    pub c0: f64,
    /// Surrogate coefficient `k` in the `(e t0/t1)^{k r^2/t0}` factor.
    pub exponent_coefficient: f64,
    /// Quadrature nodes on `[0, T]`, including `t0` and `2 t0`.
    pub times: Vec<f64>,
}

pub const DEFAULT_EXPONENT_COEFFICIENT: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondInequalityReport {
    pub params: SecondInequalityParams,
    pub reparameterization: Option<Reparameterization>,
    /// `int_0^T int_{|x| <= r} (|u|^2/T + |grad u|^2)`.
    pub x: Functional,
    /// `int_{|x| <= r} |u(0)|^2 t1^{-3/2} e^{-|x|^2/4 t1}`.
    pub y: Functional,
    /// `int_{t0}^{2 t0} int_{|x| <= r/2} (|u|^2/T + |grad u|^2) e^{-|x|^2/4t}`.
    pub z: Functional,
    /// `e^{-r^2/500 t0} X`.
    pub bound_x: Functional,
    /// `t0^{3/2} (e t0/t1)^{k r^2/t0} Y`.
    pub bound_y: Functional,
    pub bound: Functional,
    pub slack: Functional,
    /// `k r^2 / t0`.
    pub surrogate_exponent: f64,
    pub lu_check: DifferentialInequalityCheck,
}

pub fn second_inequality_report(
    field: &dyn SpacetimeField,
    p: &SecondInequalityParams,
) -> Result<SecondInequalityReport> {
    for (name, v) in [
        ("horizon", p.horizon),
        ("radius", p.radius),
        ("c0", p.c0),
        ("exponent_coefficient", p.exponent_coefficient),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, "must be positive and finite"));
        }
    }
    if p.radius * p.radius < 4000.0 * p.horizon {
        return Err(Error::Precondition(format!(
            "r^2 = {} is below 4000 T = {}",
            p.radius * p.radius,
            4000.0 * p.horizon
        )));
    }
    if !(p.t1 > 0.0 && p.t1 <= p.t0 && p.t0 < p.horizon / 1000.0) {
        return Err(Error::Precondition(format!(
            "need 0 < t1 <= t0 < T/1000, got t1 = {}, t0 = {}, T = {}",
            p.t1, p.t0, p.horizon
        )));
    }
    let grid = field.grid();
    if p.radius > 0.5 * grid.length() {
        return Err(Error::OutsideBox(format!(
            "cylinder radius {} exceeds half the box {}",
            p.radius,
            0.5 * grid.length()
        )));
    }
    validate_times(
        &p.times,
        &[("0", 0.0), ("t0", p.t0), ("2 t0", 2.0 * p.t0), ("T", p.horizon)],
    )?;
    let times = &p.times;
    let geo = PointGeometry::new(&grid, p.center);
    let dv = grid.cell_volume();
    let c0t = p.c0 * p.horizon;
    let z_nodes = upto(times, p.t0, 2.0 * p.t0);
    let mut x_t = Vec::with_capacity(times.len());
    let mut z_t = vec![ScaledValue::ZERO; times.len()];
    let mut y0 = ScaledValue::ZERO;
    let mut lu = LuAccumulator::new();
    for (k, &t) in times.iter().enumerate() {
        let s = field.sample(t)?;
        let in_z = z_nodes.contains(&k);
        let mut xs = CompensatedSum::new();
        let mut zs = LogSum::new();
        let mut ys = LogSum::new();
        for (idx, &r) in geo.radii.iter().enumerate() {
            if r > p.radius {
                continue;
            }
            let (u2, g2) = pointwise(&s, idx);
            let e = u2 / p.horizon + g2;
            xs.add(e * dv);
            if in_z && r <= 0.5 * p.radius {
                zs.add(e * dv, -r * r / (4.0 * t));
            }
            if k == 0 {
                ys.add(u2 * dv, -r * r / (4.0 * p.t1));
            }
            lu.visit(&s, idx, c0t);
        }
        x_t.push(ScaledValue::from_f64(xs.value()));
        if in_z {
            z_t[k] = zs.value();
        }
        if k == 0 {
            y0 = ys.value().mul_exp(-1.5 * p.t1.ln());
        }
    }
    let all: Vec<usize> = (0..times.len()).collect();
    let x = integrate(times, &all, &x_t);
    let z = integrate(times, &z_nodes, &z_t);
    let expo = p.exponent_coefficient * p.radius * p.radius / p.t0;
    let bound_x = x.mul_exp(-p.radius * p.radius / (500.0 * p.t0));
    let bound_y = y0.mul_exp(1.5 * p.t0.ln() + expo * (1.0 + (p.t0 / p.t1).ln()));
    let bound = bound_x.add(bound_y);
    Ok(SecondInequalityReport {
        params: p.clone(),
        reparameterization: reparameterization(field, p.center),
        x: x.into(),
        y: y0.into(),
        z: z.into(),
        bound_x: bound_x.into(),
        bound_y: bound_y.into(),
        slack: bound.sub(z).into(),
        bound: bound.into(),
        surrogate_exponent: expo,
        lu_check: lu.finish(),
    })
}
