//! Concentration events, back-propagation chains, and the regularity
//! finders for epochs and annuli.

mod chain;
mod constants;
mod events;
mod regularity;

pub use chain::{back_propagate_chain, ChainReport, ChainTermination, LinkRatios};
pub use constants::{ChainWindows, SurrogateConstants};
pub use events::{
    concentration_value, dyadic_frequencies, prefer, scan_concentrations, strongest_event,
    ConcentrationEvent,
};
pub use regularity::{
    find_annulus, find_epoch, pointwise_derivative_report, sup_norms, total_speed, Annulus,
    AnnulusCandidate, AnnulusSearch, Certificates, DerivativeReport, Epoch, EpochCandidate,
    SupNorms, TotalSpeed,
};
