use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude ladder `A_j = A^{c0^j}`, kept in the log domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConstants {
    pub a: f64,
    pub c0: f64,
}

impl SurrogateConstants {
    pub fn new(a: f64, c0: f64) -> Result<Self> {
        if !(a >= 2.0 && a.is_finite()) {
            return Err(Error::param("A", "must be finite and >= 2"));
        }
        if !(c0 >= 2.0 && c0.is_finite()) {
            return Err(Error::param("c0", "must be finite and >= 2"));
        }
        Ok(SurrogateConstants { a, c0 })
    }

    /// `ln A_j = c0^j ln A`.
    pub fn ln_a(&self, j: u32) -> f64 {
        self.c0.powi(j as i32) * self.a.ln()
    }

    /// `A_j`; may be `inf` for large `j`.
    pub fn a_j(&self, j: u32) -> f64 {
        self.ln_a(j).exp()
    }

    /// Concentration threshold `1 / A_1`.
    pub fn threshold(&self) -> f64 {
        (-self.ln_a(1)).exp()
    }
}

/// Search windows for one back-propagation link from `(t1, x1, N1)`:
/// `time_lo / N1^2 <= t1 - t2 <= time_hi / N1^2`, `|x2 - x1| <= space / N1`,
/// `N2 in [N1 / freq, freq N1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainWindows {
    pub time_lo: f64,
    pub time_hi: f64,
    pub space: f64,
    pub freq: f64,
}

impl ChainWindows {
    /// `(A_3^{-1}, A_3, A_4, A_2)`.
    pub fn from_constants(c: &SurrogateConstants) -> Self {
        ChainWindows {
            time_lo: 1.0 / c.a_j(3),
            time_hi: c.a_j(3),
            space: c.a_j(4),
            freq: c.a_j(2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_lo > 0.0 && self.time_hi >= self.time_lo) {
            return Err(Error::param("windows", "need 0 < time_lo <= time_hi"));
        }
        if !(self.space > 0.0 && self.freq >= 1.0) {
            return Err(Error::param("windows", "need space > 0 and freq >= 1"));
        }
        Ok(())
    }
}
