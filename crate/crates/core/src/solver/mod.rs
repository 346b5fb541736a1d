//! Integrating-factor RK4 solver for the incompressible Navier-Stokes
//! equations with unit viscosity, and trajectory-level checks.

mod analysis;
mod config;
mod initial;
mod integrator;
mod nonlinear;
mod trajectory;

pub use analysis::{
    curl_compatibility, duhamel_split, energy_inequality, rescale_solution, residual_check,
    CurlCompatibility, DuhamelSplit, EnergyReport, ResidualReport,
};
pub use config::SolverConfig;
pub use initial::{random_enveloped, shear_flow, taylor_green, RandomFieldSpec};
pub use integrator::lawson_rk4_step;
pub use nonlinear::{
    advection, momentum_residual, nonlinear_term, pressure_field, velocity_rhs, vorticity_rhs,
    DIVERGENCE_TOLERANCE,
};
pub(crate) use nonlinear::transport;
pub use trajectory::{
    diagnostics_csv, parse_diagnostics_csv, run, run_recorded, step, Diagnostics, RunOutcome,
    TrajectoryRecord, DIAGNOSTICS_HEADER, INITIAL_DIVERGENCE_TOLERANCE,
};
