use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    boundary_integrals, conservation_residual, constant_data, est_basic_check, pointwise_residuals,
    u_recovery_integrals, ConjugationError, CutoffSpec, EstBasicConfig, EstBasicReport, Fields, PointwiseResiduals,
    ProblemFrame,
};
use crate::gasdyn::GasModel;
use crate::mat2::{CMat2, Mat2};
use crate::series::{ck_solve, residual, BivariateSeries};

/// Largest residual or defect the pipeline accepts.
pub const PIPELINE_TOL: f64 = 1e-8;

/// End-to-end run configuration. Missing keys take the defaults of the
/// manufactured run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    #[serde(rename = "T0")]
    pub t0: f64,
    pub x0: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    pub r0: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    pub cbar_prime: f64,
    pub gamma: f64,
    pub c0: f64,
    /// Taylor coefficients of `u1(T0, ·)` in powers of `x − x0`.
    pub data_u1: Vec<f64>,
    pub data_u2: Vec<f64>,
    /// Initial value of `B` on `T = T0` (constant matrix, real entries).
    pub b_data: [[f64; 2]; 2],
    pub mu_grid: Vec<f64>,
    /// Points `z` as `[re, im]`.
    pub z_grid: Vec<[f64; 2]>,
    pub quad_tol: f64,
    /// Sample grid `[nt, nx]` for pointwise residuals.
    pub grid: [usize; 2],
    pub cutoff_order: usize,
    pub est_basic: EstBasicConfig,
    /// Accepted for run bookkeeping; nothing here is random.
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            t0: 0.0,
            x0: 0.0,
            t1: 0.12,
            r0: 1.1,
            radius: 0.5,
            degree: 12,
            cbar_prime: 0.5,
            gamma: 1.4,
            c0: 1.0,
            data_u1: vec![0.0, 0.1],
            data_u2: vec![0.3, 0.2],
            b_data: [[1.0, 0.0], [0.0, 1.0]],
            mu_grid: vec![16.0],
            z_grid: vec![[0.0, -0.05]],
            quad_tol: 1e-14,
            grid: [9, 33],
            cutoff_order: CutoffSpec::DEFAULT_ORDER,
            est_basic: EstBasicConfig::default(),
            seed: None,
        }
    }
}

impl PipelineConfig {
    /// Constant state `u = (u1, u2)` with otherwise default settings.
    pub fn constant_state(u1: f64, u2: f64) -> Self {
        PipelineConfig {
            data_u1: vec![u1],
            data_u2: vec![u2],
            ..Default::default()
        }
    }

    pub fn model(&self) -> Result<GasModel, ConjugationError> {
        Ok(GasModel::new(self.gamma, self.c0)?)
    }

    pub fn frame(&self) -> Result<ProblemFrame, ConjugationError> {
        ProblemFrame::new(self.t0, self.x0, self.t1, self.r0, self.radius, self.cbar_prime, self.model()?)
    }

    pub fn cutoff(&self) -> CutoffSpec {
        CutoffSpec::new(self.x0, self.radius).with_order(self.cutoff_order)
    }

    fn validate(&self) -> Result<(), ConjugationError> {
        let bad = |m: &str| Err(ConjugationError::InvalidFrame(m.into()));
        if self.degree < 1 {
            return bad("N must be at least 1");
        }
        if self.data_u1.is_empty() || self.data_u2.is_empty() {
            return bad("initial data needs at least one coefficient per component");
        }
        if self.mu_grid.iter().any(|m| !(*m >= 1.0 && m.is_finite())) {
            return bad("every μ must be ≥ 1");
        }
        if self.grid[0] < 2 || self.grid[1] < 2 {
            return bad("sample grid needs at least 2 points per axis");
        }
        if !(self.quad_tol > 0.0) {
            return bad("quad_tol must be positive");
        }
        Ok(())
    }

    /// Solves for `u` and builds every conjugation field.
    pub fn build_fields(&self) -> Result<Fields, ConjugationError> {
        self.validate()?;
        let model = self.model()?;
        let frame = self.frame()?;
        let c = |v: &f64| Complex64::new(*v, 0.0);
        let d1: Vec<Complex64> = self.data_u1.iter().map(c).collect();
        let d2: Vec<Complex64> = self.data_u2.iter().map(c).collect();
        let sol = ck_solve(&d1, &d2, &model, self.t0, self.x0, self.degree)?;
        frame.require_elliptic(&sol)?;
        Fields::build(&sol, &frame, &constant_data(&CMat2::from_real(self.b_data)))
    }
}

/// Identity checks at one `(μ, z)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityChecks {
    pub mu: f64,
    pub z: Complex64,
    pub conservation_defect: f64,
    pub boundary_defect: f64,
    pub u_recovery_defect: f64,
    pub boundary: super::BoundaryIntegralReport,
    pub u_recovery: super::URecoveryReport,
}

/// Residuals of the series equations, coefficient-wise through degree `N − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientResiduals {
    pub ck: f64,
    pub diagonalizer: f64,
    pub zeta_transport: f64,
    pub zeta_initial: f64,
    pub zeta_first_order: f64,
    pub conjugator: f64,
    pub inverse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub eigenvalues_at_expansion_point: [Complex64; 2],
    pub coefficient_residuals: CoefficientResiduals,
    pub pointwise_residuals: PointwiseResiduals,
    pub identities: Vec<IdentityChecks>,
    pub est_basic: EstBasicReport,
    /// Largest of every residual and defect above.
    pub max_defect: f64,
    pub passes: bool,
}

fn smat_max_through(m: &Mat2<BivariateSeries>, d: usize) -> f64 {
    m.entries().map(|s| s.max_abs_through(d)).fold(0.0, f64::max)
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, ConjugationError> {
    let fields = cfg.build_fields()?;
    let n1 = cfg.degree - 1;
    let ck_res = residual(&fields.solution)?;
    let coefficient_residuals = CoefficientResiduals {
        ck: ck_res.iter().map(|s| s.max_abs_through(n1)).fold(0.0, f64::max),
        diagonalizer: smat_max_through(&fields.diag.residual_series(), n1),
        zeta_transport: fields
            .zeta
            .transport_residual(&fields.diag.lambda)
            .iter()
            .map(|s| s.max_abs_through(n1))
            .fold(0.0, f64::max),
        zeta_initial: fields.zeta.initial_defect(),
        zeta_first_order: fields.zeta.first_order_defect(&fields.diag.lambda),
        conjugator: smat_max_through(&fields.conjugator.residual(&fields.diag), n1),
        inverse: fields.diag.inverse_defect(),
    };
    let pointwise = pointwise_residuals(&fields, cfg.grid[0], cfg.grid[1]);
    let chi = cfg.cutoff();
    let mut identities = Vec::new();
    for &mu in &cfg.mu_grid {
        for &[re, im] in &cfg.z_grid {
            let z = Complex64::new(re, im);
            let cons = conservation_residual(&fields, mu, z, cfg.grid[0], cfg.grid[1]);
            let boundary = boundary_integrals(&fields, &chi, mu, z, cfg.quad_tol)?;
            let u_recovery = u_recovery_integrals(&fields, &chi, mu, z, cfg.quad_tol)?;
            identities.push(IdentityChecks {
                mu,
                z,
                conservation_defect: cons.max_defect(),
                boundary_defect: boundary.defect[0].max(boundary.defect[1]),
                u_recovery_defect: u_recovery.defect[0].max(u_recovery.defect[1]),
                boundary,
                u_recovery,
            });
        }
    }
    let est_basic = est_basic_check(&fields, &chi, &cfg.est_basic)?;
    let c = &coefficient_residuals;
    let p = &pointwise;
    let max_defect = [
        c.ck,
        c.diagonalizer,
        c.zeta_transport,
        c.zeta_initial,
        c.zeta_first_order,
        c.conjugator,
        c.inverse,
        p.ck,
        p.diagonalizer,
        p.zeta,
        p.conjugator,
    ]
    .into_iter()
    .chain(
        identities
            .iter()
            .flat_map(|i| [i.conservation_defect, i.boundary_defect, i.u_recovery_defect]),
    )
    .fold(0.0, f64::max);
    let lam = fields.sample(cfg.t0, cfg.x0).lambda;
    Ok(PipelineReport {
        config: cfg.clone(),
        eigenvalues_at_expansion_point: lam,
        coefficient_residuals,
        pointwise_residuals: pointwise,
        identities,
        passes: max_defect <= PIPELINE_TOL && est_basic.passes(),
        est_basic,
        max_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes() {
        let r = run_pipeline(&PipelineConfig::default()).unwrap();
        assert!(r.max_defect <= PIPELINE_TOL, "{}", r.max_defect);
        assert!(r.passes);
    }

    #[test]
    fn constant_state_has_rounding_residuals() {
        let r = run_pipeline(&PipelineConfig::constant_state(0.0, 0.3)).unwrap();
        assert!(r.max_defect <= 1e-12, "{}", r.max_defect);
        assert!(r.est_basic.passes());
    }

    #[test]
    fn hyperbolic_point_is_refused() {
        let err = run_pipeline(&PipelineConfig::constant_state(0.0, 1.2)).unwrap_err();
        assert!(matches!(err, ConjugationError::NotElliptic(_)), "{err}");
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let e = serde_json::from_str::<PipelineConfig>(r#"{"T0": 0.0, "bogus": 1}"#);
        assert!(e.is_err());
        let c: PipelineConfig = serde_json::from_str(r#"{"N": 6}"#).unwrap();
        assert_eq!(c.degree, 6);
        assert_eq!(c.radius, 0.5);
    }
}
