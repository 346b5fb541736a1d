//! Pseudo-spectral incompressible Navier-Stokes on a periodic box, with
//! Littlewood-Paley projections, concentration tracking, Carleman weight
//! checks and enstrophy ledgers.

pub mod carleman;
pub mod concentration;
pub mod error;
pub mod numeric;
pub mod solver;
pub mod lp;
pub mod spectral;

pub use error::{Error, Result};
