use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Grid3;

/// Time-stepping parameters; the viscosity is fixed at one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: Grid3,
    pub dt: f64,
    pub t_end: f64,
    pub dealias_fraction: f64,
    pub snapshot_stride: usize,
    #[serde(default)]
    pub t_start: f64,
}

impl SolverConfig {
    pub fn new(grid: Grid3, dt: f64, t_end: f64) -> Self {
        SolverConfig {
            grid,
            dt,
            t_end,
            dealias_fraction: 2.0 / 3.0,
            snapshot_stride: 1,
            t_start: 0.0,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_dealias(mut self, fraction: f64) -> Self {
        self.dealias_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 2.0 / 3.0 + 1e-12) {
            return Err(Error::param("dealias_fraction", "must lie in (0, 2/3]"));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::param("snapshot_stride", "must be >= 1"));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.t_start && self.t_start.is_finite()) {
            return Err(Error::param("t_end", "must be finite and >= t_start"));
        }
        self.steps().map(|_| ())
    }

    /// Number of steps; the horizon must be an integer multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        let span = self.t_end - self.t_start;
        let s = (span / self.dt).round();
        if (s * self.dt - span).abs() > 1e-9 * span.abs().max(self.dt) {
            return Err(Error::param(
                "dt",
                format!("horizon {span} is not a multiple of dt = {}", self.dt),
            ));
        }
        Ok(s as usize)
    }

    pub fn time_of_step(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }
}
