//! Carleman weights, quadrature checks of the Carleman inequalities and the
//! global and local enstrophy ledgers.

mod field;
mod inequalities;
mod ledger;
mod lemma;
mod scaled;
mod weights;

pub use field::{
    AnalyticField, FieldSample, HeatFlowField, Reparameterization, ReversedTrajectoryField,
    SpacetimeField,
};
pub use inequalities::{
    first_inequality_report, second_inequality_report, DifferentialInequalityCheck,
    FirstInequalityParams, FirstInequalityReport, SecondInequalityParams, SecondInequalityReport,
    DEFAULT_EXPONENT_COEFFICIENT,
};
pub use ledger::{
    global_enstrophy_ledger, local_enstrophy_ledger, select_cutoff_radii, CutoffCandidate,
    CutoffProfile, CutoffSearch, CutoffSelection, CutoffTrack, EnstrophyLedger, LedgerVariant,
    LedgerWindow, MovingCutoff, GLOBAL_SIGNS, GLOBAL_TERMS, LOCAL_SIGNS, LOCAL_TERMS,
};
pub use lemma::{carleman_monotonicity_check, MonotonicityReport, SUPPORT_TOLERANCE};
pub use scaled::{scaled_trapezoid, Functional, LogSum, ScaledValue};
pub use weights::{
    weight_first, weight_second, zero_weight, AlphaChoice, CarlemanWeight, FirstWeightParams,
    SecondWeightParams, WeightKind,
};
