//! Littlewood-Paley projections, Fourier multipliers, and empirical
//! constants for multiplier and Bernstein inequalities.

mod multiplier;
mod profile;
mod projector;
mod reports;

pub use multiplier::{apply_multiplier, MultiplierSymbol};
pub use profile::BumpProfile;
pub use projector::{LpProjector, Projection};
pub use reports::{
    bernstein_report, bernstein_sweep, derivative_tensor, local_multiplier_report,
    multiplier_bound_report, spectral_leak, sweep_spread, BernsteinMeasurement, BernsteinSweep,
    InequalityReport, LocalExponents, Region, SPECTRUM_TOLERANCE,
};
