use serde::{Deserialize, Serialize};

/// `mantissa * e^{log_scale}`, for quantities whose size escapes `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledValue {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl ScaledValue {
    pub const ZERO: ScaledValue = ScaledValue {
        mantissa: 0.0,
        log_scale: 0.0,
    };

    pub fn from_f64(x: f64) -> Self {
        ScaledValue {
            mantissa: x,
            log_scale: 0.0,
        }
        .normalized()
    }

    /// `sign * e^{ln_abs}`.
    pub fn from_log(ln_abs: f64, sign: f64) -> Self {
        if sign == 0.0 || ln_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        ScaledValue {
            mantissa: sign.signum(),
            log_scale: ln_abs,
        }
    }

    fn normalized(self) -> Self {
        if self.mantissa == 0.0 || !self.mantissa.is_finite() {
            return ScaledValue {
                mantissa: self.mantissa,
                log_scale: if self.mantissa == 0.0 { 0.0 } else { self.log_scale },
            };
        }
        let l = self.mantissa.abs().ln();
        ScaledValue {
            mantissa: self.mantissa.signum(),
            log_scale: self.log_scale + l,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    pub fn sign(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    /// `ln |value|`, `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.mantissa == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mantissa.abs().ln() + self.log_scale
        }
    }

    /// Linear value; `inf` or `0` outside the `f64` range.
    pub fn to_f64(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa * self.log_scale.exp()
        }
    }

    pub fn add(self, other: ScaledValue) -> ScaledValue {
        if other.is_zero() {
            return self;
        }
        if self.is_zero() {
            return other;
        }
        let s = self.log_scale.max(other.log_scale);
        let m = self.mantissa * (self.log_scale - s).exp() + other.mantissa * (other.log_scale - s).exp();
        ScaledValue {
            mantissa: m,
            log_scale: s,
        }
        .normalized()
    }

    pub fn sub(self, other: ScaledValue) -> ScaledValue {
        self.add(other.scale(-1.0))
    }

    pub fn scale(self, s: f64) -> ScaledValue {
        ScaledValue {
            mantissa: self.mantissa * s,
            log_scale: self.log_scale,
        }
        .normalized()
    }

    /// Multiply by `e^{e}`.
    pub fn mul_exp(self, e: f64) -> ScaledValue {
        if self.is_zero() {
            return self;
        }
        ScaledValue {
            mantissa: self.mantissa,
            log_scale: self.log_scale + e,
        }
    }

    pub fn max_abs(self, other: ScaledValue) -> ScaledValue {
        if self.ln_abs() >= other.ln_abs() {
            ScaledValue::from_log(self.ln_abs(), 1.0)
        } else {
            ScaledValue::from_log(other.ln_abs(), 1.0)
        }
    }

    /// `self / other` as a plain float (`other` nonzero).
    pub fn ratio(self, other: ScaledValue) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.sign() * other.sign() * (self.ln_abs() - other.ln_abs()).exp()
    }
}

/// Compensated sum of terms `a e^{g}` with a running exponent shift, so that
/// no individual `e^{g}` is ever formed.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    shift: f64,
    sum: f64,
    comp: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            shift: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }

    pub fn add(&mut self, a: f64, g: f64) {
        if a == 0.0 {
            return;
        }
        if g > self.shift {
            if self.shift.is_finite() {
                let f = (self.shift - g).exp();
                self.sum *= f;
                self.comp *= f;
            }
            self.shift = g;
        }
        let x = a * (g - self.shift).exp();
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> ScaledValue {
        if !self.shift.is_finite() {
            return ScaledValue::ZERO;
        }
        ScaledValue {
            mantissa: self.sum + self.comp,
            log_scale: self.shift,
        }
        .normalized()
    }
}

/// A reported functional in linear and logarithmic form. `linear` is absent
/// when the value overflows, `ln_abs` when it is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub sign: i8,
    pub linear: Option<f64>,
    pub ln_abs: Option<f64>,
}

impl From<ScaledValue> for Functional {
    fn from(v: ScaledValue) -> Self {
        let lin = v.to_f64();
        let l = v.ln_abs();
        Functional {
            sign: v.sign() as i8,
            linear: lin.is_finite().then_some(lin),
            ln_abs: l.is_finite().then_some(l),
        }
    }
}

impl Functional {
    pub fn scaled(&self) -> ScaledValue {
        match self.ln_abs {
            Some(l) => ScaledValue::from_log(l, self.sign as f64),
            None => ScaledValue::ZERO,
        }
    }
}

/// Trapezoid rule over `times` for scaled integrands.
pub fn scaled_trapezoid(times: &[f64], values: &[ScaledValue]) -> ScaledValue {
    let mut acc = ScaledValue::ZERO;
    for i in 1..times.len().min(values.len()) {
        let h = 0.5 * (times[i] - times[i - 1]);
        acc = acc.add(values[i - 1].add(values[i]).scale(h));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_matches_direct_sum_in_range() {
        let mut s = LogSum::new();
        let mut direct = 0.0;
        for i in 0..50 {
            let g = (i as f64 * 0.37).sin() * 5.0;
            let a = 1.0 + i as f64;
            s.add(a, g);
            direct += a * g.exp();
        }
        assert!((s.value().to_f64() - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn log_sum_survives_overflowing_exponents() {
        let mut s = LogSum::new();
        s.add(2.0, 1000.0);
        s.add(3.0, 1000.0);
        assert!((s.value().ln_abs() - (1000.0 + 5f64.ln())).abs() < 1e-12);
        let f = Functional::from(s.value());
        assert!(f.linear.is_none());
    }

    #[test]
    fn scaled_arithmetic() {
        let a = ScaledValue::from_f64(3.0);
        let b = ScaledValue::from_f64(-5.0);
        assert!((a.add(b).to_f64() + 2.0).abs() < 1e-15);
        assert!((a.sub(a).to_f64()).abs() < 1e-15);
        assert!((b.ratio(a) + 5.0 / 3.0).abs() < 1e-15);
    }
}
