//! Cauchy–Kovalevskaya power-series solutions of `∂_T u + A(u) ∂_x u = 0`.
//!
//! The time coefficients are produced one order at a time: the `τ^m` row of
//! `−A(u) ∂_x u` only involves rows `≤ m` of `u`, so
//! `u[m+1][n] = (−A(u) ∂_x u)[m][n] / (m + 1)`. `A(u)` is assembled in series
//! arithmetic; `c²` is polynomial in `u` under the polytropic closure and the
//! denominators are inverted by series division about their constant term.

use num_complex::Complex64;
use thiserror::Error;

use super::{BivariateSeries, SeriesError};
use crate::gasdyn::{FlowClass, FlowState, GasError, GasModel, DEFAULT_SONIC_TOL};
use crate::mat2::Mat2;

/// Coefficient magnitude above which a solution is flagged as likely
/// evaluated outside its radius of convergence.
pub const GROWTH_WARNING: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CkError {
    #[error(transparent)]
    Gas(#[from] GasError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("expansion point is sonic; the system changes type there")]
    Sonic,
    #[error("initial data must be real at the expansion point, got ({0}, {1})")]
    ComplexBaseState(Complex64, Complex64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution {
    pub u1: BivariateSeries,
    pub u2: BivariateSeries,
    pub model: GasModel,
    /// Set when some coefficient exceeds [`GROWTH_WARNING`].
    pub growth_warning: bool,
}

impl SeriesSolution {
    pub fn degree(&self) -> usize {
        self.u1.degree()
    }

    pub fn t0(&self) -> f64 {
        self.u1.t0()
    }

    pub fn x0(&self) -> f64 {
        self.u1.x0()
    }

    pub fn base_state(&self) -> FlowState {
        FlowState::new(self.u1.constant_term().re, self.u2.constant_term().re)
    }

    pub fn truncate(&self, degree: usize) -> Self {
        SeriesSolution {
            u1: self.u1.truncate(degree),
            u2: self.u2.truncate(degree),
            ..self.clone()
        }
    }

    pub fn evaluate(&self, t: f64, x: f64) -> [Complex64; 2] {
        [self.u1.evaluate(t, x), self.u2.evaluate(t, x)]
    }
}

/// `A(u)` with series entries.
pub fn flux_matrix_series(
    model: &GasModel,
    u1: &BivariateSeries,
    u2: &BivariateSeries,
) -> Result<Mat2<BivariateSeries>, SeriesError> {
    let (t0, x0, n) = (u1.t0(), u1.x0(), u1.degree().min(u2.degree()));
    let u1sq = u1 * u1;
    let u2sq = u2 * u2;
    let c2 = (&u1sq + &u2sq)
        .scale_re(-0.5 * (model.gamma() - 1.0))
        .add_scalar(Complex64::new(model.c0() * model.c0(), 0.0));
    let den = &c2 - &u1sq;
    let a11 = (u1 * u2).scale_re(-2.0).divide(&den)?;
    let a12 = (&c2 - &u2sq).divide(&den)?;
    Ok(Mat2::new(
        a11,
        a12,
        BivariateSeries::constant(t0, x0, n, Complex64::new(-1.0, 0.0)),
        BivariateSeries::zeros(t0, x0, n),
    ))
}

fn check_base_state(model: &GasModel, data_u1: &[Complex64], data_u2: &[Complex64]) -> Result<(), CkError> {
    let z = Complex64::new(0.0, 0.0);
    let (a, b) = (
        data_u1.first().copied().unwrap_or(z),
        data_u2.first().copied().unwrap_or(z),
    );
    if a.im != 0.0 || b.im != 0.0 {
        return Err(CkError::ComplexBaseState(a, b));
    }
    let state = FlowState::new(a.re, b.re);
    model.flux_matrix(&state)?;
    if model.classify(&state, DEFAULT_SONIC_TOL)? == FlowClass::Sonic {
        return Err(CkError::Sonic);
    }
    Ok(())
}

/// Solves the Cauchy problem with data `u(T0, x) = Σ data[n] (x − x0)^n`
/// through total degree `degree`.
pub fn ck_solve(
    data_u1: &[Complex64],
    data_u2: &[Complex64],
    model: &GasModel,
    t0: f64,
    x0: f64,
    degree: usize,
) -> Result<SeriesSolution, CkError> {
    check_base_state(model, data_u1, data_u2)?;
    let mut u = [
        BivariateSeries::from_x_coeffs(t0, x0, degree, data_u1),
        BivariateSeries::from_x_coeffs(t0, x0, degree, data_u2),
    ];
    for m in 0..degree {
        let a = flux_matrix_series(model, &u[0], &u[1])?;
        let ux = [u[0].d_dx(), u[1].d_dx()];
        let rhs = a.apply(&ux);
        let inv = 1.0 / (m + 1) as f64;
        for (comp, f) in u.iter_mut().zip(&rhs) {
            for n in 0..degree - m {
                comp.set_coeff(m + 1, n, -f.coeff(m, n) * inv);
            }
        }
    }
    let growth_warning = u.iter().any(|s| s.max_abs_coeff() > GROWTH_WARNING);
    if growth_warning {
        log::warn!("series coefficients exceed {GROWTH_WARNING:e}; radius of convergence is likely small");
    }
    let [u1, u2] = u;
    Ok(SeriesSolution {
        u1,
        u2,
        model: *model,
        growth_warning,
    })
}

/// `∂_T u + A(u) ∂_x u` in series arithmetic (degree `N − 1`).
pub fn residual(solution: &SeriesSolution) -> Result<[BivariateSeries; 2], SeriesError> {
    let a = flux_matrix_series(&solution.model, &solution.u1, &solution.u2)?;
    let ux = [solution.u1.d_dx(), solution.u2.d_dx()];
    let [f1, f2] = a.apply(&ux);
    Ok([&solution.u1.d_dt() + &f1, &solution.u2.d_dt() + &f2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn air() -> GasModel {
        GasModel::new(1.4, 1.0).unwrap()
    }

    #[test]
    fn constant_data_stays_constant() {
        let sol = ck_solve(&[c(0.1)], &[c(0.2)], &air(), 0.0, 0.0, 8).unwrap();
        for (m, n, v) in sol.u1.terms().chain(sol.u2.terms()) {
            if m + n > 0 {
                assert_eq!(v, c(0.0));
            }
        }
        let r = residual(&sol).unwrap();
        assert!(r.iter().all(|s| s.max_abs_coeff() == 0.0));
    }

    #[test]
    fn residual_vanishes_through_degree() {
        let sol = ck_solve(&[c(0.0)], &[c(0.3), c(0.1)], &air(), 0.0, 0.0, 8).unwrap();
        let r = residual(&sol).unwrap();
        assert_eq!(r[0].degree(), 7);
        for s in &r {
            assert!(s.max_abs_coeff() <= 1e-10, "{}", s.max_abs_coeff());
        }
        assert!(sol.u1.is_real() && sol.u2.is_real());
        assert!(!sol.growth_warning);
    }

    #[test]
    fn truncation_consistency_is_exact() {
        let d1 = [c(0.05), c(-0.02), c(0.01)];
        let d2 = [c(0.3), c(0.1), c(0.0), c(0.03)];
        let hi = ck_solve(&d1, &d2, &air(), 0.5, -1.0, 8).unwrap();
        let lo = ck_solve(&d1, &d2, &air(), 0.5, -1.0, 4).unwrap();
        assert_eq!(hi.truncate(4), lo);
    }

    #[test]
    fn non_solution_has_residual() {
        let model = air();
        let u1 = BivariateSeries::var_t(0.0, 0.0, 3);
        let u2 = BivariateSeries::zeros(0.0, 0.0, 3);
        let sol = SeriesSolution {
            u1,
            u2,
            model,
            growth_warning: false,
        };
        let r = residual(&sol).unwrap();
        assert_eq!(r[0].constant_term(), c(1.0));
        assert_eq!(r[1].constant_term(), c(0.0));
    }

    #[test]
    fn rejects_bad_base_states() {
        let m = air();
        let q = m.sonic_speed();
        assert!(matches!(ck_solve(&[c(0.0)], &[c(q)], &m, 0.0, 0.0, 4), Err(CkError::Sonic)));
        assert!(matches!(
            ck_solve(&[c(q)], &[c(0.0)], &m, 0.0, 0.0, 4),
            Err(CkError::Gas(GasError::DegenerateDirection { .. }))
        ));
        assert!(matches!(
            ck_solve(&[c(3.0)], &[c(0.0)], &m, 0.0, 0.0, 4),
            Err(CkError::Gas(GasError::VacuumLimit { .. }))
        ));
    }

    #[test]
    fn hyperbolic_data_is_accepted() {
        let sol = ck_solve(&[c(0.2)], &[c(1.1), c(0.05)], &air(), 0.0, 0.0, 6).unwrap();
        let r = residual(&sol).unwrap();
        assert!(r.iter().all(|s| s.max_abs_coeff() < 1e-10));
    }
}
