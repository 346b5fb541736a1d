use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by field construction, operators, the solver and the
/// diagnostic reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("expected a field with {expected} component(s), got {got}")]
    ComponentMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("spectrum is not Hermitian (max defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("field is not divergence-free (relative divergence {relative:.3e})")]
    NotDivergenceFree { relative: f64 },

    #[error("spectrum escapes B(0, {radius}) (mass fraction {leak:.3e} outside)")]
    SpectrumEscapes { radius: f64, leak: f64 },

    #[error("blowup suspected at t = {time} (step {step}): {reason}")]
    BlowupSuspected { time: f64, step: usize, reason: String },

    #[error("moving cutoff collapsed at t = {time} (R- = {r_minus}, R+ = {r_plus})")]
    CutoffCollapse { time: f64, r_minus: f64, r_plus: f64 },

    #[error("region leaves the periodic box: {0}")]
    OutsideBox(String),

    #[error("{0}")]
    Precondition(String),

    #[error("malformed snapshot {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the solver halting rather than by bad input.
    pub fn is_solver_halt(&self) -> bool {
        matches!(self, Error::BlowupSuspected { .. } | Error::CutoffCollapse { .. })
    }
}
