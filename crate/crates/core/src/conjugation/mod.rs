//! Conjugation of the steady system into weighted divergence form near an
//! elliptic point, and numerical checks of the resulting integral identities
//! and FBI decay estimate on series-manufactured solutions.
//!
//! Conventions: `S` holds eigenvectors of `A(u)` in its columns, so
//! `A = S·D·S⁻¹` and the characteristic variable is `w = S⁻¹u`. The conjugated
//! quantity is `v = B·w`, with flux `f = B·D·w`.

mod cutoff;
mod estimate;
mod fields;
mod identities;
mod pipeline;

pub use cutoff::CutoffSpec;
pub use estimate::{
    est_basic_check, fit_decay, ComponentDecay, DecayFlag, EstBasicConfig, EstBasicReport, EST_BASIC_EPS_MIN,
};
pub use pipeline::{
    run_pipeline, CoefficientResiduals, IdentityChecks, PipelineConfig, PipelineReport, PIPELINE_TOL,
};
pub use fields::{
    constant_data, diagonalizer_fields, solve_b, solve_zeta, CharacteristicPair, ConjugatorField, Diagonalizer, FieldSample,
    Fields,
};
pub use identities::{
    boundary_integrals, conservation_residual, pointwise_residuals, u_recovery_integrals, BoundaryIntegralReport,
    ConservationReport, PointwiseResiduals, URecoveryReport,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::microlocal::MicrolocalError;
use crate::gasdyn::{FlowClass, GasError, GasModel, DEFAULT_SONIC_TOL};
use crate::quad::QuadError;
use crate::series::{CkError, SeriesError, SeriesSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConjugationError {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("expansion point is {0:?}, not elliptic")]
    NotElliptic(FlowClass),
    #[error("eigenvalues of A(u) collide inside the frame near (t, x) = ({t}, {x}); shrink the frame")]
    FrameTooLarge { t: f64, x: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Ck(#[from] CkError),
    #[error(transparent)]
    Gas(#[from] GasError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Microlocal(#[from] MicrolocalError),
}

/// Spacetime neighbourhood of the expansion point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemFrame {
    pub t0: f64,
    pub x0: f64,
    pub t1: f64,
    pub r0: f64,
    /// Cutoff radius.
    pub radius: f64,
    /// Declared constant bounding `T1 − T0 ≤ c̄′·R²`.
    pub cbar_prime: f64,
    #[serde(skip, default)]
    pub model: GasModel,
}

impl ProblemFrame {
    pub fn new(
        t0: f64,
        x0: f64,
        t1: f64,
        r0: f64,
        radius: f64,
        cbar_prime: f64,
        model: GasModel,
    ) -> Result<Self, ConjugationError> {
        let frame = ProblemFrame {
            t0,
            x0,
            t1,
            r0,
            radius,
            cbar_prime,
            model,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<(), ConjugationError> {
        let bad = |m: String| Err(ConjugationError::InvalidFrame(m));
        let all = [self.t0, self.x0, self.t1, self.r0, self.radius, self.cbar_prime];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter".into());
        }
        if self.t1 <= self.t0 {
            return bad(format!("T1 = {} must exceed T0 = {}", self.t1, self.t0));
        }
        if self.radius <= 0.0 || self.radius >= 0.5 * self.r0 {
            return bad(format!("need 0 < R < r0/2, got R = {}, r0 = {}", self.radius, self.r0));
        }
        let limit = self.cbar_prime * self.radius * self.radius;
        if self.t1 - self.t0 > limit * (1.0 + 1e-12) {
            return bad(format!("T1 − T0 = {} exceeds c̄′R² = {}", self.t1 - self.t0, limit));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Refuses expansion points that are not elliptic.
    pub fn require_elliptic(&self, solution: &SeriesSolution) -> Result<(), ConjugationError> {
        match self.model.classify(&solution.base_state(), DEFAULT_SONIC_TOL)? {
            FlowClass::Elliptic => Ok(()),
            other => Err(ConjugationError::NotElliptic(other)),
        }
    }

    /// Regular sample grid over `[T0, T1] × [x0 − R, x0 + R]`.
    pub fn sample_grid(&self, nt: usize, nx: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(nt * nx);
        for i in 0..nt {
            let t = self.t0 + self.duration() * i as f64 / (nt.max(2) - 1) as f64;
            for j in 0..nx {
                let x = self.x0 - self.radius + 2.0 * self.radius * j as f64 / (nx.max(2) - 1) as f64;
                out.push((t, x));
            }
        }
        out
    }
}
