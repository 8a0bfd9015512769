use num_complex::Complex64;
use serde::Serialize;

use super::IllposednessError;
use crate::eigen::{eigenvalues, eigenvector};
use crate::gasdyn::{FlowState, GasModel};
use crate::mat2::CMat2;

/// Growing eigen-direction of the frozen flux matrix `A(u*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModalMode {
    pub base: [f64; 2],
    pub flux: [[f64; 2]; 2],
    /// Eigenvalue with the larger imaginary part.
    pub lambda_plus: Complex64,
    pub w_plus: [Complex64; 2],
    /// `Im λ+`; zero for a hyperbolic base state.
    pub growth_rate: f64,
    /// `false` when the spectrum is real, so no mode grows.
    pub growing: bool,
}

pub fn modal_mode(base: FlowState, model: &GasModel) -> Result<ModalMode, IllposednessError> {
    let a = model.flux_matrix(&base)?;
    let ac = CMat2::from_real(a.m);
    let (lp, _, _) = eigenvalues(&ac);
    Ok(ModalMode {
        base: [base.u1, base.u2],
        flux: a.m,
        lambda_plus: lp,
        w_plus: eigenvector(&ac, lp),
        growth_rate: lp.im.max(0.0),
        growing: lp.im > 0.0,
    })
}

impl ModalMode {
    /// `a·e^{ik(x − λ+ t)}·w+`.
    pub fn value(&self, k: f64, a: f64, t: f64, x: f64) -> [Complex64; 2] {
        let phase = (Complex64::i() * k * (x - self.lambda_plus * t)).exp() * a;
        [self.w_plus[0] * phase, self.w_plus[1] * phase]
    }

    /// `|∂_t v + A ∂_x v| / (k |v|)` for the mode, independent of `(t, x)`.
    pub fn relative_residual(&self) -> f64 {
        let a = CMat2::from_real(self.flux);
        let aw = a.apply(&self.w_plus);
        let r = [aw[0] - self.lambda_plus * self.w_plus[0], aw[1] - self.lambda_plus * self.w_plus[1]];
        (r[0].norm_sqr() + r[1].norm_sqr()).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalField {
    pub mode: ModalMode,
    pub k: u32,
    pub amplitude: f64,
    pub t: f64,
    pub xs: Vec<f64>,
    pub values: Vec<[Complex64; 2]>,
    /// `e^{k·Im λ+·t}`.
    pub amplitude_factor: f64,
}

/// Exact solution of `∂_t v + A(u*)∂_x v = 0` with data `a·e^{ikx}·w+`,
/// sampled at time `t` on `xs`.
pub fn modal_linear_solution(
    base: FlowState,
    model: &GasModel,
    k: u32,
    amplitude: f64,
    t: f64,
    xs: &[f64],
) -> Result<ModalField, IllposednessError> {
    if k == 0 || !(amplitude > 0.0) || !t.is_finite() {
        return Err(IllposednessError::InvalidParameter(format!(
            "need k ≥ 1, a > 0, finite t (k = {k}, a = {amplitude}, t = {t})"
        )));
    }
    let mode = modal_mode(base, model)?;
    let kf = k as f64;
    Ok(ModalField {
        k,
        amplitude,
        t,
        xs: xs.to_vec(),
        values: xs.iter().map(|&x| mode.value(kf, amplitude, t, x)).collect(),
        amplitude_factor: (kf * mode.lambda_plus.im * t).exp(),
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: [Complex64; 2]) -> f64 {
        (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
    }

    #[test]
    fn rest_state_grows_like_e_to_the_kt() {
        let m = GasModel::default();
        let f = modal_linear_solution(FlowState::new(0.0, 0.0), &m, 16, 1.0, 0.25, &[0.0, 0.3]).unwrap();
        assert!((f.mode.lambda_plus - Complex64::i()).norm() < 1e-15);
        assert!((f.amplitude_factor - 54.598150033144236).abs() < 1e-9);
        assert!((norm(f.values[1]) - 54.598150033144236).abs() < 1e-9);
    }

    #[test]
    fn initial_time_reproduces_data() {
        let m = GasModel::default();
        let f = modal_linear_solution(FlowState::new(0.1, 0.4), &m, 5, 0.7, 0.0, &[0.2]).unwrap();
        let e = (Complex64::i() * 1.0).exp() * 0.7;
        for j in 0..2 {
            assert_eq!(f.values[0][j], f.mode.w_plus[j] * e);
        }
    }

    #[test]
    fn growth_exponent_for_a_moving_state() {
        let m = GasModel::new(1.4, 1.0).unwrap();
        let mode = modal_mode(FlowState::new(0.0, 0.5), &m).unwrap();
        // c² = 1 − 0.2·0.25 = 0.95 and λ² = −(c² − u2²)/c².
        let expect = ((0.95f64 - 0.25) / 0.95).sqrt();
        assert!((mode.growth_rate - expect).abs() < 1e-14);
        assert!(mode.relative_residual() < 1e-14);
        // Local sound speed 1 at |u| = 0.5 needs c0² = 1.05.
        let unit = GasModel::new(1.4, 1.05f64.sqrt()).unwrap();
        let mode = modal_mode(FlowState::new(0.0, 0.5), &unit).unwrap();
        assert!((mode.growth_rate - 0.75f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_state_is_flagged() {
        let mode = modal_mode(FlowState::new(0.0, 1.2), &GasModel::default()).unwrap();
        assert!(!mode.growing);
        assert_eq!(mode.growth_rate, 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let m = GasModel::default();
        assert!(modal_linear_solution(FlowState::new(0.0, 0.0), &m, 0, 1.0, 0.1, &[0.0]).is_err());
        assert!(modal_linear_solution(FlowState::new(0.0, 0.0), &m, 2, 0.0, 0.1, &[0.0]).is_err());
    }
}
