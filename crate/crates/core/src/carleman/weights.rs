use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which `alpha` the first weight uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AlphaChoice {
    /// `r_+ / (2 C0 T^2)`.
    AsPrinted,
    /// `r_+ / (2 C0 T)`.
    Alternate,
    Explicit(f64),
}

impl AlphaChoice {
    pub fn label(&self) -> &'static str {
        match self {
            AlphaChoice::AsPrinted => "r_plus/(2 C0 T^2)",
            AlphaChoice::Alternate => "r_plus/(2 C0 T)",
            AlphaChoice::Explicit(_) => "explicit",
        }
    }
}

/// Parameters of `g = alpha (T0 - t)|x| + |x|^2/(C0 T)` on
/// `[0, T0] x {r_- <= |x| <= r_+}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstWeightParams {
    pub horizon: f64,
    pub t0: f64,
    pub c0: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub alpha: AlphaChoice,
}

/// Parameters of `g = -|x|^2/4s - (3/2) log s - alpha log(s/(T0+t1)) + alpha s/(T0+t1)`
/// with `s = t + t1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondWeightParams {
    pub horizon: f64,
    pub t0: f64,
    pub t1: f64,
    pub radius: f64,
    pub alpha: f64,
}

impl SecondWeightParams {
    /// `alpha = r^2 / (400 t0)`.
    pub fn scaled_alpha(radius: f64, t0: f64) -> f64 {
        radius * radius / (400.0 * t0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightKind {
    First {
        alpha: f64,
        c0t: f64,
        t0: f64,
        r_minus: f64,
        r_plus: f64,
    },
    Second {
        alpha: f64,
        t0: f64,
        t1: f64,
    },
    Zero,
}

/// A Carleman weight `g(t, x)` with its derivatives and the closed forms of
/// `F = dt g - Lap g - |grad g|^2` and `LF = (dt + Lap) F`. The point `x` is
/// always an offset from the weight's centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanWeight {
    pub kind: WeightKind,
    pub alpha_choice: Option<AlphaChoice>,
    pub params: BTreeMap<String, f64>,
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

pub fn weight_first(p: &FirstWeightParams) -> Result<CarlemanWeight> {
    positive("horizon", p.horizon)?;
    positive("t0", p.t0)?;
    positive("c0", p.c0)?;
    positive("r_minus", p.r_minus)?;
    if p.t0 > p.horizon {
        return Err(Error::param("t0", "must not exceed the horizon"));
    }
    if p.r_plus <= p.r_minus {
        return Err(Error::param("r_plus", "must exceed r_minus"));
    }
    if p.r_minus * p.r_minus < 4.0 * p.c0 * p.horizon {
        return Err(Error::Precondition(format!(
            "r_minus^2 = {} is below 4 C0 T = {}",
            p.r_minus * p.r_minus,
            4.0 * p.c0 * p.horizon
        )));
    }
    let alpha = match p.alpha {
        AlphaChoice::AsPrinted => p.r_plus / (2.0 * p.c0 * p.horizon * p.horizon),
        AlphaChoice::Alternate => p.r_plus / (2.0 * p.c0 * p.horizon),
        AlphaChoice::Explicit(a) => {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::param("alpha", "must be finite and non-negative"));
            }
            a
        }
    };
    let params = BTreeMap::from([
        ("T".to_string(), p.horizon),
        ("T0".to_string(), p.t0),
        ("C0".to_string(), p.c0),
        ("r_minus".to_string(), p.r_minus),
        ("r_plus".to_string(), p.r_plus),
        ("alpha".to_string(), alpha),
    ]);
    Ok(CarlemanWeight {
        kind: WeightKind::First {
            alpha,
            c0t: p.c0 * p.horizon,
            t0: p.t0,
            r_minus: p.r_minus,
            r_plus: p.r_plus,
        },
        alpha_choice: Some(p.alpha),
        params,
    })
}

pub fn weight_second(p: &SecondWeightParams) -> Result<CarlemanWeight> {
    positive("horizon", p.horizon)?;
    positive("t0", p.t0)?;
    positive("t1", p.t1)?;
    positive("radius", p.radius)?;
    if !(p.alpha >= 0.0 && p.alpha.is_finite()) {
        return Err(Error::param("alpha", "must be finite and non-negative"));
    }
    if p.radius * p.radius < 4000.0 * p.horizon {
        return Err(Error::Precondition(format!(
            "r^2 = {} is below 4000 T = {}",
            p.radius * p.radius,
            4000.0 * p.horizon
        )));
    }
    let params = BTreeMap::from([
        ("T".to_string(), p.horizon),
        ("T0".to_string(), p.t0),
        ("t1".to_string(), p.t1),
        ("r".to_string(), p.radius),
        ("alpha".to_string(), p.alpha),
    ]);
    Ok(CarlemanWeight {
        kind: WeightKind::Second {
            alpha: p.alpha,
            t0: p.t0,
            t1: p.t1,
        },
        alpha_choice: None,
        params,
    })
}

/// `g = 0`.
pub fn zero_weight() -> CarlemanWeight {
    CarlemanWeight {
        kind: WeightKind::Zero,
        alpha_choice: None,
        params: BTreeMap::new(),
    }
}

impl CarlemanWeight {
    pub fn label(&self) -> &'static str {
        match self.kind {
            WeightKind::First { .. } => "first",
            WeightKind::Second { .. } => "second",
            WeightKind::Zero => "zero",
        }
    }

    /// Whether `(t, x)` lies where the weight is defined and smooth.
    pub fn contains(&self, t: f64, x: [f64; 3]) -> bool {
        match self.kind {
            WeightKind::First {
                t0,
                r_minus,
                r_plus,
                ..
            } => {
                let r = norm(x);
                (0.0..=t0).contains(&t) && r >= r_minus && r <= r_plus
            }
            WeightKind::Second { t1, .. } => t + t1 > 0.0,
            WeightKind::Zero => true,
        }
    }

    /// Radius of the singular locus around the centre, if any.
    pub fn singular_radius(&self) -> Option<f64> {
        match self.kind {
            WeightKind::First { .. } => Some(0.0),
            _ => None,
        }
    }

    /// Whether integration by parts needs the field to vanish at the edge of
    /// the periodic cell (the weight is not periodic).
    pub fn needs_compact_support(&self) -> bool {
        !matches!(self.kind, WeightKind::Zero)
    }

    pub fn g(&self, t: f64, x: [f64; 3]) -> f64 {
        match self.kind {
            WeightKind::First { alpha, c0t, t0, .. } => {
                let r = norm(x);
                alpha * (t0 - t) * r + r * r / c0t
            }
            WeightKind::Second { alpha, t0, t1 } => {
                let s = t + t1;
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                -r2 / (4.0 * s) - 1.5 * s.ln() - alpha * (s / (t0 + t1)).ln() + alpha * s / (t0 + t1)
            }
            WeightKind::Zero => 0.0,
        }
    }

    pub fn dt_g(&self, t: f64, x: [f64; 3]) -> f64 {
        match self.kind {
            WeightKind::First { alpha, .. } => -alpha * norm(x),
            WeightKind::Second { alpha, t0, t1 } => {
                let s = t + t1;
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                r2 / (4.0 * s * s) - 1.5 / s - alpha / s + alpha / (t0 + t1)
            }
            WeightKind::Zero => 0.0,
        }
    }

    pub fn grad_g(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        match self.kind {
            WeightKind::First { alpha, c0t, t0, .. } => {
                let r = norm(x);
                let a = alpha * (t0 - t) / r + 2.0 / c0t;
                [a * x[0], a * x[1], a * x[2]]
            }
            WeightKind::Second { t1, .. } => {
                let s = t + t1;
                [-x[0] / (2.0 * s), -x[1] / (2.0 * s), -x[2] / (2.0 * s)]
            }
            WeightKind::Zero => [0.0; 3],
        }
    }

    pub fn laplacian_g(&self, t: f64, x: [f64; 3]) -> f64 {
        match self.kind {
            WeightKind::First { alpha, c0t, t0, .. } => 2.0 * alpha * (t0 - t) / norm(x) + 6.0 / c0t,
            WeightKind::Second { t1, .. } => -1.5 / (t + t1),
            WeightKind::Zero => 0.0,
        }
    }

    /// `D^2 g (v, v)`.
    pub fn hessian_quadratic(&self, t: f64, x: [f64; 3], v: [f64; 3]) -> f64 {
        let vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        match self.kind {
            WeightKind::First { alpha, c0t, t0, .. } => {
                let r = norm(x);
                let xv = (x[0] * v[0] + x[1] * v[1] + x[2] * v[2]) / r;
                alpha * (t0 - t) * (vv - xv * xv) / r + 2.0 * vv / c0t
            }
            WeightKind::Second { t1, .. } => -vv / (2.0 * (t + t1)),
            WeightKind::Zero => 0.0,
        }
    }

    pub fn f_closed(&self, t: f64, x: [f64; 3]) -> f64 {
        match self.kind {
            WeightKind::First { alpha, c0t, t0, .. } => {
                let r = norm(x);
                let tau = t0 - t;
                -alpha * r - 2.0 * alpha * tau / r - 6.0 / c0t - alpha * alpha * tau * tau
                    - 4.0 * alpha * tau * r / c0t
                    - 4.0 * r * r / (c0t * c0t)
            }
            WeightKind::Second { alpha, t0, t1 } => alpha / (t0 + t1) - alpha / (t + t1),
            WeightKind::Zero => 0.0,
        }
    }

    pub fn lf_closed(&self, t: f64, x: [f64; 3]) -> f64 {
        match self.kind {
            WeightKind::First { alpha, c0t, t0, .. } => {
                let r = norm(x);
                let tau = t0 - t;
                2.0 * alpha * alpha * tau + 4.0 * alpha * r / c0t
                    - 8.0 * alpha * tau / (c0t * r)
                    - 24.0 / (c0t * c0t)
            }
            WeightKind::Second { alpha, t1, .. } => {
                let s = t + t1;
                alpha / (s * s)
            }
            WeightKind::Zero => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first() -> CarlemanWeight {
        weight_first(&FirstWeightParams {
            horizon: 1.0,
            t0: 0.8,
            c0: 4.0,
            r_minus: 4.0,
            r_plus: 100.0,
            alpha: AlphaChoice::AsPrinted,
        })
        .unwrap()
    }

    #[test]
    fn first_weight_rejects_small_inner_radius() {
        let e = weight_first(&FirstWeightParams {
            horizon: 1.0,
            t0: 1.0,
            c0: 4.0,
            r_minus: 3.9,
            r_plus: 100.0,
            alpha: AlphaChoice::AsPrinted,
        });
        assert!(matches!(e, Err(Error::Precondition(_))));
    }

    #[test]
    fn first_weight_f_is_the_defining_combination() {
        let w = first();
        let x = [3.0, -2.0, 4.5];
        let gg = w.grad_g(0.3, x);
        let direct = w.dt_g(0.3, x) - w.laplacian_g(0.3, x) - (gg[0] * gg[0] + gg[1] * gg[1] + gg[2] * gg[2]);
        assert!((direct - w.f_closed(0.3, x)).abs() < 1e-12 * direct.abs());
    }

    #[test]
    fn second_weight_lf_value() {
        let w = weight_second(&SecondWeightParams {
            horizon: 1e-3,
            t0: 0.5,
            t1: 0.5,
            radius: 3.0,
            alpha: 1.0,
        })
        .unwrap();
        assert!((w.lf_closed(1.5, [0.1, 0.2, 0.3]) - 0.25).abs() < 1e-15);
        assert!(w.f_closed(0.5, [1.0, 0.0, 0.0]).abs() < 1e-15);
    }
}
