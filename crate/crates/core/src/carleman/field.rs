use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{transport, TrajectoryRecord};
use crate::spectral::{curl, heat_propagate, partial, synthesize, Grid3, RealField, SpectralField};

/// A field and its spatial gradient on the grid at one time. `gradient`
/// has `3 m` components, index `3 c + a` for `d_a u_c`. `lu` is
/// `(dt + Lap) u` when the source knows it.
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub value: RealField,
    pub gradient: RealField,
    pub lu: Option<RealField>,
}

/// How a reported field relates to the stored solution:
/// `v(s, y) = omega(t_prime - s, center + y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reparameterization {
    pub t_prime: f64,
    pub center: [f64; 3],
}

/// A field that can be sampled on a grid at chosen times.
pub trait SpacetimeField: Sync {
    fn grid(&self) -> Grid3;
    fn components(&self) -> usize;
    fn sample(&self, t: f64) -> Result<FieldSample>;
    /// Time origin of a reversed-trajectory field.
    fn reversal_origin(&self) -> Option<f64> {
        None
    }
}

fn spectral_gradient(u: &SpectralField) -> Result<RealField> {
    let mut parts = Vec::with_capacity(3 * u.components());
    for c in 0..u.components() {
        let uc = u.component_field(c);
        for a in 0..3 {
            parts.push(partial(&uc, a));
        }
    }
    Ok(synthesize(&SpectralField::stack(&parts)?))
}

/// Backward heat flow `u(t) = e^{(tau - t) Lap} f` for `t <= tau`, which
/// solves `(dt + Lap) u = 0` exactly.
#[derive(Clone, Debug)]
pub struct HeatFlowField {
    pub data: SpectralField,
    pub tau: f64,
}

impl HeatFlowField {
    pub fn new(data: SpectralField, tau: f64) -> Self {
        HeatFlowField { data, tau }
    }
}

impl SpacetimeField for HeatFlowField {
    fn grid(&self) -> Grid3 {
        *self.data.grid()
    }

    fn components(&self) -> usize {
        self.data.components()
    }

    fn sample(&self, t: f64) -> Result<FieldSample> {
        if t > self.tau {
            return Err(Error::param("t", format!("{t} beyond the heat flow endpoint {}", self.tau)));
        }
        let u = heat_propagate(&self.data, self.tau - t)?;
        let grid = self.grid();
        Ok(FieldSample {
            value: synthesize(&u),
            gradient: spectral_gradient(&u)?,
            lu: Some(RealField::zeros(grid, self.components())),
        })
    }
}

type PointFn = dyn Fn(f64, [f64; 3], &mut [f64], &mut [f64], &mut [f64]) + Send + Sync;

/// A field given in closed form. The closure receives the time, the periodic
/// offset of the grid point from `center`, and fills the value, gradient and
/// `Lu` slices.
pub struct AnalyticField {
    grid: Grid3,
    components: usize,
    center: [f64; 3],
    has_lu: bool,
    f: Box<PointFn>,
}

impl AnalyticField {
    pub fn new<F>(grid: Grid3, components: usize, center: [f64; 3], has_lu: bool, f: F) -> Self
    where
        F: Fn(f64, [f64; 3], &mut [f64], &mut [f64], &mut [f64]) + Send + Sync + 'static,
    {
        AnalyticField {
            grid,
            components,
            center,
            has_lu,
            f: Box::new(f),
        }
    }

    /// `u(t, y) = (tau - t)^{-3/2} exp(-|y|^2 / 4(tau - t))`, a scalar
    /// solution of the backward heat equation.
    pub fn reversed_heat_kernel(grid: Grid3, center: [f64; 3], tau: f64) -> Self {
        AnalyticField::new(grid, 1, center, true, move |t, y, v, g, lu| {
            let s = tau - t;
            let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
            let u = s.powf(-1.5) * (-r2 / (4.0 * s)).exp();
            v[0] = u;
            for a in 0..3 {
                g[a] = -y[a] / (2.0 * s) * u;
            }
            lu[0] = 0.0;
        })
    }
}

impl SpacetimeField for AnalyticField {
    fn grid(&self) -> Grid3 {
        self.grid
    }

    fn components(&self) -> usize {
        self.components
    }

    fn sample(&self, t: f64) -> Result<FieldSample> {
        let m = self.components;
        let p = self.grid.points();
        let mut value = vec![0.0; m * p];
        let mut gradient = vec![0.0; 3 * m * p];
        let mut lu = vec![0.0; m * p];
        let mut v = vec![0.0; m];
        let mut g = vec![0.0; 3 * m];
        let mut l = vec![0.0; m];
        for idx in 0..p {
            let y = self.grid.periodic_offset(self.grid.position(idx), self.center);
            (self.f)(t, y, &mut v, &mut g, &mut l);
            for c in 0..m {
                value[c * p + idx] = v[c];
                lu[c * p + idx] = l[c];
            }
            for k in 0..3 * m {
                gradient[k * p + idx] = g[k];
            }
        }
        Ok(FieldSample {
            value: RealField::from_values(self.grid, m, value)?,
            gradient: RealField::from_values(self.grid, 3 * m, gradient)?,
            lu: if self.has_lu {
                Some(RealField::from_values(self.grid, m, lu)?)
            } else {
                None
            },
        })
    }
}

/// Time-reversed vorticity `v(s) = omega(t_prime - s)` of a stored
/// trajectory; `Lv = (u . grad) omega - (omega . grad) u` with the solver's
/// dealiased products. Only stored times can be sampled.
pub struct ReversedTrajectoryField<'a> {
    traj: &'a TrajectoryRecord,
    t_prime: f64,
}

impl<'a> ReversedTrajectoryField<'a> {
    pub fn new(traj: &'a TrajectoryRecord, t_prime: f64) -> Result<Self> {
        traj.index_of_time(t_prime)?;
        Ok(ReversedTrajectoryField { traj, t_prime })
    }

    pub fn t_prime(&self) -> f64 {
        self.t_prime
    }
}

impl SpacetimeField for ReversedTrajectoryField<'_> {
    fn grid(&self) -> Grid3 {
        self.traj.grid
    }

    fn components(&self) -> usize {
        3
    }

    fn sample(&self, s: f64) -> Result<FieldSample> {
        let i = self.traj.index_of_time(self.t_prime - s)?;
        let u = self.traj.velocity(i);
        let w = curl(u)?;
        let f = self.traj.dealias_fraction;
        let lu = transport(u, &w, f)?.sub(&transport(&w, u, f)?)?;
        Ok(FieldSample {
            value: synthesize(&w),
            gradient: spectral_gradient(&w)?,
            lu: Some(synthesize(&lu)),
        })
    }

    fn reversal_origin(&self) -> Option<f64> {
        Some(self.t_prime)
    }
}
