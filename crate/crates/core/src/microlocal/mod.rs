//! FBI transforms on the line, decay-rate fitting, and analytic wave-front
//! detection.

mod datum;
mod fbi;
mod profile;

pub use datum::{Datum1D, Interpolation};
pub use fbi::{fbi_transform, generalized_fbi, FbiOptions, FbiQuery, FbiValue};
pub use profile::{
    analyticity_test, decay_profile, default_mu_grid, geometric_grid, AnalyticityVerdict, DecayProfile, DirectionProfile,
    ProfileOptions, Thresholds, WfClass, DEFAULT_DIRECTIONS,
};

pub(crate) use profile::{fit_selection, linear_fit};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MicrolocalError {
    #[error("invalid datum: {0}")]
    InvalidDatum(String),
    #[error("unknown preset `{0}` (expected gaussian, lorentzian, abs, step or file:<path>)")]
    UnknownPreset(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("FBI quadrature not stable under panel halving (change {delta:e}, allowed {allowed:e})")]
    NonConvergent { delta: f64, allowed: f64 },
    #[error("FBI magnitude overflows for μ·(Im z)² = {0}")]
    Overflow(f64),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("cannot read datum file: {0}")]
    Io(String),
}
