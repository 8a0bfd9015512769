//! Frozen-coefficient instability experiments: Sobolev and Gevrey norms,
//! exact growing modes of the linearised system, and the ratio of the
//! solution size on a shrinking region to a power of the data norm.

mod growth;
mod modal;
mod norms;

pub use growth::{
    growth_experiment, nonlinear_spot_check, GrowthConfig, GrowthRegion, GrowthReport, GrowthRow, GrowthVerdict,
    NormKind, RadiusRule, SpotCheck,
};
pub use modal::{modal_linear_solution, modal_mode, ModalField, ModalMode};
pub use norms::{
    gevrey_norm, gevrey_norm_series, log_factorial, sobolev_norm, sobolev_norm_on_grid, tapered_window, GevreyNorm,
    NormSpec,
};

use thiserror::Error;

use crate::gasdyn::GasError;
use crate::quad::QuadError;
use crate::series::CkError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IllposednessError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sample grid is not uniform (spacing deviates at index {0})")]
    NonUniformGrid(usize),
    #[error("sample count {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("derivative of order {0} unavailable")]
    DerivativeUnavailable(usize),
    #[error("region for k = {k} has radius {r:e}, too small to integrate over")]
    DegenerateRegion { k: u32, r: f64 },
    #[error(transparent)]
    Gas(#[from] GasError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Ck(#[from] CkError),
}
