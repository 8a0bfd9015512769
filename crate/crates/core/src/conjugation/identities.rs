use num_complex::Complex64;
use serde::Serialize;

use super::fields::{flux_matrix_at, FieldSample, Fields};
use super::{ConjugationError, CutoffSpec};
use crate::mat2::CMat2;
use crate::quad::{integrate_line_vec, integrate_rect_vec, GaussRule, QuadResult};

fn weight(sample: &FieldSample, i: usize, mu: f64, z: Complex64) -> Complex64 {
    let d = sample.zeta[i] - z;
    (-(d * d) * mu).exp()
}

fn norm2(v: [Complex64; 2]) -> f64 {
    v[0].norm().max(v[1].norm())
}

/// Largest pointwise residuals of each field equation over the frame grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseResiduals {
    /// `∂_T u + A(u)∂_x u`.
    pub ck: f64,
    /// `A(u)·S − S·D`.
    pub diagonalizer: f64,
    /// `∂_t ζ_i + λ_i ∂_x ζ_i`.
    pub zeta: f64,
    /// The conjugator equation.
    pub conjugator: f64,
    pub samples: usize,
}

pub fn pointwise_residuals(fields: &Fields, nt: usize, nx: usize) -> PointwiseResiduals {
    let grid = fields.frame.sample_grid(nt, nx);
    let mut out = PointwiseResiduals {
        ck: 0.0,
        diagonalizer: 0.0,
        zeta: 0.0,
        conjugator: 0.0,
        samples: grid.len(),
    };
    for (t, x) in grid {
        let p = fields.sample(t, x);
        let a = flux_matrix_at(fields.model(), p.u);
        let au = a.apply(&p.u_x);
        out.ck = out.ck.max(norm2([p.u_t[0] + au[0], p.u_t[1] + au[1]]));
        out.diagonalizer = out.diagonalizer.max((a * p.s - p.s * p.d()).max_abs());
        for i in 0..2 {
            out.zeta = out.zeta.max((p.zeta_t[i] + p.lambda[i] * p.zeta_x[i]).norm());
        }
        let d = p.d();
        let r = p.b_t + p.b_x * d + p.b * p.d_x() + p.b * p.s_inv_t * p.s + p.b * d * p.s_inv_x * p.s;
        out.conjugator = out.conjugator.max(r.max_abs());
    }
    out
}

/// Pointwise defect of the weighted conservation law
/// `∂_T(v_i E_i) + ∂_x(f_i E_i) = (f_i − λ_i v_i) ∂_x E_i`, `E_i = e^{−μ(ζ_i − z)²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationReport {
    pub mu: f64,
    pub z: Complex64,
    pub defect: [f64; 2],
    /// Largest `|v_i E_i| + |f_i E_i|` on the grid.
    pub scale: [f64; 2],
    pub samples: usize,
}

impl ConservationReport {
    pub fn max_defect(&self) -> f64 {
        self.defect[0].max(self.defect[1])
    }
}

pub fn conservation_residual(fields: &Fields, mu: f64, z: Complex64, nt: usize, nx: usize) -> ConservationReport {
    let grid = fields.frame.sample_grid(nt, nx);
    let mut defect = [0.0f64; 2];
    let mut scale = [0.0f64; 2];
    for &(t, x) in &grid {
        let p = fields.sample(t, x);
        let (v, f, v_t, f_x) = (p.v(), p.f(), p.v_t(), p.f_x());
        for i in 0..2 {
            let e = weight(&p, i, mu, z);
            let transport = p.zeta_t[i] + p.lambda[i] * p.zeta_x[i];
            let d = e * (v_t[i] + f_x[i]) + v[i] * e * (p.zeta[i] - z) * (-2.0 * mu) * transport;
            defect[i] = defect[i].max(d.norm());
            scale[i] = scale[i].max((v[i] * e).norm() + (f[i] * e).norm());
        }
    }
    ConservationReport {
        mu,
        z,
        defect,
        scale,
        samples: grid.len(),
    }
}

/// Terms of the integrated conservation law on `[T0, T1]`:
/// `∫_{T0} v E χ = I + II + K` with `I = ∫_{T1} v E χ`,
/// `II = −∫∫ f E χ′` and `K = −∫∫ (f − λv) ∂_x E χ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryIntegralReport {
    pub mu: f64,
    pub z: Complex64,
    pub initial: [Complex64; 2],
    pub i: [Complex64; 2],
    pub ii: [Complex64; 2],
    pub coupling: [Complex64; 2],
    /// `II` restricted to `[T0, T0 + s]`, for increasing `s`.
    pub iii: Vec<(f64, [Complex64; 2])>,
    pub defect: [f64; 2],
    /// Quadrature error estimate summed over all terms.
    pub quadrature_error: f64,
    /// Smallest sampled `Re (ζ_i − z)²` over `[T0, T1] × supp χ′`.
    pub band_quadratic_min: [f64; 2],
}

fn values(r: &[QuadResult; 2]) -> [Complex64; 2] {
    [r[0].value, r[1].value]
}

fn errors(r: &[QuadResult]) -> f64 {
    r.iter().map(|q| q.error).sum()
}

fn support_intervals(chi: &CutoffSpec) -> Vec<(f64, f64)> {
    chi.breakpoints().windows(2).map(|w| (w[0], w[1])).collect()
}

fn band_intervals(chi: &CutoffSpec) -> Vec<(f64, f64)> {
    chi.derivative_bands().iter().map(|b| (b[0], b[1])).collect()
}

fn slice_integral(fields: &Fields, chi: &CutoffSpec, t: f64, mu: f64, z: Complex64, tol: f64) -> Result<[QuadResult; 2], ConjugationError> {
    Ok(integrate_line_vec(
        |x| {
            let p = fields.sample(t, x);
            let v = p.v();
            let c = chi.value(x);
            [0, 1].map(|i| v[i] * weight(&p, i, mu, z) * c)
        },
        &support_intervals(chi),
        tol,
    )?)
}

fn flux_integral(
    fields: &Fields,
    chi: &CutoffSpec,
    span: f64,
    mu: f64,
    z: Complex64,
    tol: f64,
) -> Result<[QuadResult; 2], ConjugationError> {
    let t0 = fields.frame.t0;
    Ok(integrate_rect_vec(
        |t, x| {
            let p = fields.sample(t, x);
            let f = p.f();
            let c = chi.derivative(x);
            [0, 1].map(|i| -f[i] * weight(&p, i, mu, z) * c)
        },
        (t0, t0 + span),
        &band_intervals(chi),
        tol,
    )?)
}

pub fn boundary_integrals(
    fields: &Fields,
    chi: &CutoffSpec,
    mu: f64,
    z: Complex64,
    tol: f64,
) -> Result<BoundaryIntegralReport, ConjugationError> {
    let frame = &fields.frame;
    let initial = slice_integral(fields, chi, frame.t0, mu, z, tol)?;
    let i = slice_integral(fields, chi, frame.t1, mu, z, tol)?;
    let ii = flux_integral(fields, chi, frame.duration(), mu, z, tol)?;
    let coupling = integrate_rect_vec(
        |t, x| {
            let p = fields.sample(t, x);
            let (v, f) = (p.v(), p.f());
            let c = chi.value(x);
            [0, 1].map(|i| {
                let e_x = weight(&p, i, mu, z) * (p.zeta[i] - z) * (-2.0 * mu) * p.zeta_x[i];
                -(f[i] - p.lambda[i] * v[i]) * e_x * c
            })
        },
        (frame.t0, frame.t1),
        &support_intervals(chi),
        tol,
    )?;
    let mut iii = Vec::new();
    let mut err = errors(&initial) + errors(&i) + errors(&ii) + errors(&coupling);
    for frac in [0.25, 0.5] {
        let s = frac * frame.duration();
        let r = flux_integral(fields, chi, s, mu, z, tol)?;
        err += errors(&r);
        iii.push((s, values(&r)));
    }
    iii.push((frame.duration(), values(&ii)));

    let mut band_quadratic_min = [f64::INFINITY; 2];
    let rule = GaussRule::new(8);
    for [a, b] in chi.derivative_bands() {
        for (t, _) in rule.mapped(frame.t0, frame.t1).chain([(frame.t0, 0.0), (frame.t1, 0.0)]) {
            for (x, _) in rule.mapped(a, b).chain([(a, 0.0), (b, 0.0)]) {
                let p = fields.sample(t, x);
                for k in 0..2 {
                    let d = p.zeta[k] - z;
                    band_quadratic_min[k] = band_quadratic_min[k].min((d * d).re);
                }
            }
        }
    }

    let lhs = values(&initial);
    let (iv, iiv, kv) = (values(&i), values(&ii), values(&coupling));
    let defect = [0, 1].map(|k| (lhs[k] - (iv[k] + iiv[k] + kv[k])).norm());
    Ok(BoundaryIntegralReport {
        mu,
        z,
        initial: lhs,
        i: iv,
        ii: iiv,
        coupling: kv,
        iii,
        defect,
        quadrature_error: err,
        band_quadratic_min,
    })
}

/// Terms of the integrated equation for `u` itself with weight
/// `G = e^{−(μ/2)(x − z)²}`: `∫_{T0} uGχ = i + ii + iii` with
/// `i = ∫_{T1} uGχ`, `ii = −∫∫ S·D·w G χ′` and
/// `iii = −∫∫ [∂_x(S·D) + S·D·∂_x S⁻¹·S − μ(x − z) S·D] w G χ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct URecoveryReport {
    pub mu: f64,
    pub z: Complex64,
    pub initial: [Complex64; 2],
    pub i: [Complex64; 2],
    pub ii: [Complex64; 2],
    pub iii: [Complex64; 2],
    pub defect: [f64; 2],
    pub quadrature_error: f64,
    /// Sampled `∫ sup_x (|∂_x(SD)| + |SD·∂_x S⁻¹·S| + μ|x − z|·|SD|) dT`,
    /// with `|·|` the sum of entry moduli.
    pub iii_bound_factor: f64,
}

fn sd_terms(p: &FieldSample) -> (CMat2, CMat2) {
    let d = p.d();
    let sd = p.s * d;
    let sd_x = p.s_x * d + p.s * p.d_x();
    (sd, sd_x + sd * p.s_inv_x * p.s)
}

pub fn u_recovery_integrals(
    fields: &Fields,
    chi: &CutoffSpec,
    mu: f64,
    z: Complex64,
    tol: f64,
) -> Result<URecoveryReport, ConjugationError> {
    let frame = &fields.frame;
    let g = |x: f64| (-(x - z) * (x - z) * (0.5 * mu)).exp();
    let slice = |t: f64| {
        integrate_line_vec(
            |x| {
                let p = fields.sample(t, x);
                let k = g(x) * chi.value(x);
                [p.u[0] * k, p.u[1] * k]
            },
            &support_intervals(chi),
            tol,
        )
    };
    let initial = slice(frame.t0)?;
    let i = slice(frame.t1)?;
    let ii = integrate_rect_vec(
        |t, x| {
            let p = fields.sample(t, x);
            let (sd, _) = sd_terms(&p);
            let r = sd.apply(&p.w());
            let k = -g(x) * chi.derivative(x);
            [r[0] * k, r[1] * k]
        },
        (frame.t0, frame.t1),
        &band_intervals(chi),
        tol,
    )?;
    let iii = integrate_rect_vec(
        |t, x| {
            let p = fields.sample(t, x);
            let (sd, rest) = sd_terms(&p);
            let m = rest - sd.scale((x - z) * mu);
            let r = m.apply(&p.w());
            let k = -g(x) * chi.value(x);
            [r[0] * k, r[1] * k]
        },
        (frame.t0, frame.t1),
        &support_intervals(chi),
        tol,
    )?;

    let rule = GaussRule::new(16);
    let b = chi.breakpoints();
    let xs: Vec<f64> = (0..=200).map(|j| b[0] + (b[3] - b[0]) * j as f64 / 200.0).collect();
    let mut factor = 0.0;
    for (t, w) in rule.mapped(frame.t0, frame.t1) {
        let mut sup: f64 = 0.0;
        for &x in &xs {
            let p = fields.sample(t, x);
            let (sd, rest) = sd_terms(&p);
            let sd_x = p.s_x * p.d() + p.s * p.d_x();
            let coupling = rest - sd_x;
            sup = sup.max(sd_x.sum_abs() + coupling.sum_abs() + mu * (x - z).norm() * sd.sum_abs());
        }
        factor += w * sup;
    }

    let (lhs, iv, iiv, iiiv) = (values(&initial), values(&i), values(&ii), values(&iii));
    Ok(URecoveryReport {
        mu,
        z,
        initial: lhs,
        i: iv,
        ii: iiv,
        iii: iiiv,
        defect: [0, 1].map(|k| (lhs[k] - (iv[k] + iiv[k] + iiiv[k])).norm()),
        quadrature_error: errors(&initial) + errors(&i) + errors(&ii) + errors(&iii),
        iii_bound_factor: factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugation::fields::constant_data;
    use crate::conjugation::ProblemFrame;
    use crate::gasdyn::GasModel;
    use crate::series::ck_solve;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn frame() -> ProblemFrame {
        ProblemFrame::new(0.0, 0.0, 0.08, 0.9, 0.4, 0.5, GasModel::default()).unwrap()
    }

    fn fields(d1: &[Complex64], d2: &[Complex64], n: usize) -> Fields {
        let sol = ck_solve(d1, d2, &GasModel::default(), 0.0, 0.0, n).unwrap();
        Fields::build(&sol, &frame(), &constant_data(&CMat2::identity())).unwrap()
    }

    #[test]
    fn constant_setup_has_no_defect() {
        let f = fields(&[c(0.0)], &[c(0.2)], 6);
        let r = conservation_residual(&f, 16.0, Complex64::new(0.0, -0.05), 5, 9);
        assert!(r.max_defect() < 1e-14, "{:?}", r.defect);
        let p = pointwise_residuals(&f, 5, 9);
        assert!(p.ck < 1e-15 && p.diagonalizer < 1e-14 && p.zeta < 1e-15 && p.conjugator < 1e-14, "{p:?}");
    }

    #[test]
    fn zero_field_gives_zero_integrals() {
        // u ≡ 0 is the rest state; every integrand carries a factor of u.
        let f = fields(&[c(0.0)], &[c(0.0)], 4);
        let chi = CutoffSpec::new(0.0, 0.4);
        let r = boundary_integrals(&f, &chi, 16.0, Complex64::new(0.0, -0.05), 1e-12).unwrap();
        for v in r.initial.iter().chain(&r.i).chain(&r.ii).chain(&r.coupling) {
            assert_eq!(v.norm(), 0.0);
        }
    }

    #[test]
    fn constant_setup_matches_gaussian_closed_form() {
        let f = fields(&[c(0.0)], &[c(0.2)], 6);
        let chi = CutoffSpec::new(0.0, 0.4);
        let mu = 1024.0;
        let z = Complex64::new(0.0, -0.05);
        let r = boundary_integrals(&f, &chi, mu, z, 1e-13).unwrap();
        let w = f.sample(0.0, 0.0).w();
        let gauss = (std::f64::consts::PI / mu).sqrt();
        for k in 0..2 {
            let exact = w[k] * gauss;
            assert!((r.initial[k] - exact).norm() <= 1e-8 * exact.norm(), "{k}: {} vs {exact}", r.initial[k]);
            assert!((r.i[k] - exact).norm() <= 1e-8 * exact.norm(), "{k}: {} vs {exact}", r.i[k]);
            // The T1 weight reaches e^{μ·0.13²} ≈ 3e7 before cancelling.
            assert!(r.defect[k] < 1e-8, "{}", r.defect[k]);
        }
    }

    #[test]
    fn constant_state_recovery_terms_cancel() {
        let f = fields(&[c(0.1)], &[c(0.2)], 6);
        let chi = CutoffSpec::new(0.0, 0.4);
        let z = Complex64::new(0.02, -0.05);
        let r = u_recovery_integrals(&f, &chi, 16.0, z, 1e-13).unwrap();
        for k in 0..2 {
            assert!((r.initial[k] - r.i[k]).norm() < 1e-14);
            assert!(r.ii[k].norm() > 1e-4);
            assert!((r.ii[k] + r.iii[k]).norm() < 1e-12);
            assert!(r.defect[k] < 1e-12);
        }
    }

    #[test]
    fn bound_factor_grows_at_most_linearly() {
        let f = fields(&[c(0.0)], &[c(0.3), c(0.1)], 8);
        let chi = CutoffSpec::new(0.0, 0.4);
        let z = Complex64::new(0.0, -0.05);
        let a = u_recovery_integrals(&f, &chi, 16.0, z, 1e-12).unwrap();
        let b = u_recovery_integrals(&f, &chi, 32.0, z, 1e-12).unwrap();
        assert!(b.iii_bound_factor <= 2.0 * a.iii_bound_factor * (1.0 + 1e-12));
        assert!(b.iii_bound_factor > a.iii_bound_factor);
    }
}
