//! Periodic-box fields, transforms and spectral operators.

mod fft;
mod field;
mod grid;
mod norms;
mod ops;
mod snapshot;

pub use fft::Fft3;
pub use field::{
    forward_transform, inverse_transform, synthesize, synthesize_padded, RealField,
    SpectralField, HERMITIAN_TOLERANCE,
};
pub(crate) use field::forward_unchecked;
pub use grid::Grid3;
pub use norms::{lp_norm, lp_norm_masked};
pub use ops::{
    biot_savart, curl, dealias, dealias_cutoff, divergence, gradient, heat_factor,
    heat_propagate, inverse_laplacian, jacobian, laplacian, leray_project, partial,
    relative_divergence,
};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot};
