use num_complex::Complex64;

use super::{ConjugationError, ProblemFrame};
use crate::eigen::eigen_decompose_with_tol;
use crate::gasdyn::GasModel;
use crate::mat2::{CMat2, Mat2};
use crate::series::{flux_matrix_series, BivariateSeries, SeriesSolution};

type SMat = Mat2<BivariateSeries>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const COLLISION_TOL: f64 = 1e-10;


fn smat_eval(m: &SMat, t: f64, x: f64) -> CMat2 {
    m.map(|s| s.evaluate(t, x))
}

fn smat_dt(m: &SMat) -> SMat {
    m.map(|s| s.d_dt())
}

fn smat_dx(m: &SMat) -> SMat {
    m.map(|s| s.d_dx())
}

fn diag_of(l: &[Complex64; 2]) -> CMat2 {
    Mat2::diag(l[0], l[1], ZERO)
}

/// `A(u)` at a complex state.
pub(crate) fn flux_matrix_at(model: &GasModel, u: [Complex64; 2]) -> CMat2 {
    let c2 = model.c0() * model.c0() - 0.5 * (model.gamma() - 1.0) * (u[0] * u[0] + u[1] * u[1]);
    let den = c2 - u[0] * u[0];
    Mat2::new(
        -(u[0] * u[1] * 2.0) / den,
        (c2 - u[1] * u[1]) / den,
        Complex64::new(-1.0, 0.0),
        ZERO,
    )
}

/// Series-valued `S`, `S⁻¹`, `D` with `A·S = S·D`.
#[derive(Debug, Clone)]
pub struct Diagonalizer {
    pub s: SMat,
    pub s_inv: SMat,
    pub d: SMat,
    /// `[λ+, λ−]`; `λ+` has positive imaginary part at an elliptic point.
    pub lambda: [BivariateSeries; 2],
    /// Column scalings: column `j` of `S` is `κ_j·(−λ_j, 1)`.
    pub kappa: [Complex64; 2],
    a: SMat,
}

impl Diagonalizer {
    pub fn flux(&self) -> &SMat {
        &self.a
    }

    /// `A·S − S·D` in series arithmetic.
    pub fn residual_series(&self) -> SMat {
        self.a.mul_ref(&self.s).sub_ref(&self.s.mul_ref(&self.d))
    }

    /// `S·S⁻¹ − I` in series arithmetic.
    pub fn inverse_defect(&self) -> f64 {
        let p = self.s.mul_ref(&self.s_inv);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut e = p.m[i][j].clone();
                if i == j {
                    e = e.add_scalar(Complex64::new(-1.0, 0.0));
                }
                worst = worst.max(e.max_abs_coeff());
            }
        }
        worst
    }
}

/// Builds `S`, `S⁻¹`, `D` from a series solution and checks that the
/// spectrum stays simple over the frame.
pub fn diagonalizer_fields(solution: &SeriesSolution, frame: &ProblemFrame) -> Result<Diagonalizer, ConjugationError> {
    let (t0, x0) = (solution.t0(), solution.x0());
    let a = flux_matrix_series(&solution.model, &solution.u1, &solution.u2)?;
    let tr = a.m[0][0].clone();
    let det = a.m[0][1].clone();
    let disc = &(&tr * &tr) - &det.scale_re(4.0);
    let disc0 = disc.constant_term();
    if disc0.norm() <= COLLISION_TOL * (1.0 + tr.constant_term().norm_sqr()) {
        return Err(ConjugationError::FrameTooLarge { t: t0, x: x0 });
    }
    let mut root0 = disc0.sqrt();
    if root0.im < 0.0 || (root0.im == 0.0 && root0.re < 0.0) {
        root0 = -root0;
    }
    let sq = disc.sqrt_with_root(root0)?;
    let lp = (&tr + &sq).scale_re(0.5);
    let lm = (&tr - &sq).scale_re(0.5);

    let base = eigen_decompose_with_tol(&smat_eval(&a, t0, x0), 1e-10)
        .map_err(|_| ConjugationError::FrameTooLarge { t: t0, x: x0 })?;
    let kappa = [base.s.m[1][0], base.s.m[1][1]];
    if kappa.iter().any(|k| k.norm() < 1e-12) {
        return Err(ConjugationError::FrameTooLarge { t: t0, x: x0 });
    }

    let n = solution.degree();
    let konst = |c: Complex64| BivariateSeries::constant(t0, x0, n, c);
    let s = Mat2::new(
        lp.scale(-kappa[0]),
        lm.scale(-kappa[1]),
        konst(kappa[0]),
        konst(kappa[1]),
    );
    // det S = κ1κ2(λ− − λ+) = −κ1κ2·sq
    let inv_det = sq.recip()?.scale(-1.0 / (kappa[0] * kappa[1]));
    let s_inv = Mat2::new(
        inv_det.scale(kappa[1]),
        (&lm * &inv_det).scale(kappa[1]),
        inv_det.scale(-kappa[0]),
        (&lp * &inv_det).scale(-kappa[0]),
    );
    let d = Mat2::diag(lp.clone(), lm.clone(), BivariateSeries::zeros(t0, x0, n));

    check_spectrum(solution, frame, root0)?;

    Ok(Diagonalizer {
        s,
        s_inv,
        d,
        lambda: [lp, lm],
        kappa,
        a,
    })
}

fn check_spectrum(solution: &SeriesSolution, frame: &ProblemFrame, root0: Complex64) -> Result<(), ConjugationError> {
    let elliptic = root0.re.abs() < root0.im.abs();
    for (t, x) in frame.sample_grid(9, 33) {
        let a = flux_matrix_at(&solution.model, solution.evaluate(t, x));
        let tr = a.m[0][0];
        let disc = tr * tr - a.m[0][1] * 4.0;
        let collided = disc.norm() <= COLLISION_TOL * (1.0 + tr.norm_sqr())
            || (elliptic && disc.re >= 0.0 && disc.im.abs() < disc.re)
            || !disc.is_finite();
        if collided {
            return Err(ConjugationError::FrameTooLarge { t, x });
        }
    }
    Ok(())
}

/// Complex characteristic coordinates `ζ_i` with `∂_t ζ_i + λ_i ∂_x ζ_i = 0`
/// and `ζ_i(T0, x) = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicPair {
    pub zeta: [BivariateSeries; 2],
}

impl CharacteristicPair {
    pub fn transport_residual(&self, lambda: &[BivariateSeries; 2]) -> [BivariateSeries; 2] {
        [0, 1].map(|i| &self.zeta[i].d_dt() + &(&lambda[i] * &self.zeta[i].d_dx()))
    }

    /// Largest `|ζ_i(T0, x) − x|` coefficient.
    pub fn initial_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for z in &self.zeta {
            for (n, c) in z.t_slice(0).into_iter().enumerate() {
                let target = match n {
                    0 => z.x0(),
                    1 => 1.0,
                    _ => 0.0,
                };
                worst = worst.max((c - target).norm());
            }
        }
        worst
    }

    /// Largest coefficient of `[τ¹]ζ_i + λ_i(T0, ·)` as a series in `x`.
    pub fn first_order_defect(&self, lambda: &[BivariateSeries; 2]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            let z1 = self.zeta[i].t_slice(1);
            let l0 = lambda[i].t_slice(0);
            for (n, c) in z1.iter().enumerate() {
                worst = worst.max((c + l0[n]).norm());
            }
        }
        worst
    }

    /// `r_i = (Im ζ_i + τ·Im λ_i(T0, x)) / τ`, which vanishes on `τ = 0`.
    pub fn remainder(&self, lambda: &[BivariateSeries; 2]) -> [BivariateSeries; 2] {
        [0, 1].map(|i| {
            let z = &self.zeta[i];
            let mut lift = BivariateSeries::zeros(z.t0(), z.x0(), z.degree());
            for (n, c) in lambda[i].t_slice(0).into_iter().enumerate() {
                if n < z.degree() {
                    lift.set_coeff(1, n, Complex64::new(c.im, 0.0));
                }
            }
            (&z.imag_part() + &lift).shift_down_t()
        })
    }
}

/// Solves `∂_t ζ + λ·∂_x ζ = 0`, `ζ(T0, x) = x` for both diagonal entries of `d`.
pub fn solve_zeta(d: &SMat, degree: usize) -> CharacteristicPair {
    let zeta = [0, 1].map(|i| {
        let lambda = d.m[i][i].truncate(degree);
        let (t0, x0) = (lambda.t0(), lambda.x0());
        let mut z = BivariateSeries::zeros(t0, x0, degree);
        z.set_coeff(0, 0, Complex64::new(x0, 0.0));
        if degree >= 1 {
            z.set_coeff(0, 1, Complex64::new(1.0, 0.0));
        }
        for m in 0..degree {
            let rhs = &lambda * &z.d_dx();
            let inv = 1.0 / (m + 1) as f64;
            for n in 0..degree - m {
                z.set_coeff(m + 1, n, -rhs.coeff(m, n) * inv);
            }
        }
        z
    });
    CharacteristicPair { zeta }
}

/// Conjugator `B` and the data it was evolved from on `T = T0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatorField {
    pub b: SMat,
    /// `x`-coefficients of `B(T0, ·)` about `x0`.
    pub data: Mat2<Vec<Complex64>>,
}

fn coupling(diag: &Diagonalizer) -> SMat {
    let s_inv_t = smat_dt(&diag.s_inv);
    let s_inv_x = smat_dx(&diag.s_inv);
    s_inv_t
        .mul_ref(&diag.s)
        .add_ref(&diag.d.mul_ref(&s_inv_x).mul_ref(&diag.s))
}

impl ConjugatorField {
    /// `∂_T B + ∂_x(B·D) + B·∂_T S⁻¹·S + B·D·∂_x S⁻¹·S`.
    pub fn residual(&self, diag: &Diagonalizer) -> SMat {
        let bd = self.b.mul_ref(&diag.d);
        smat_dt(&self.b)
            .add_ref(&smat_dx(&bd))
            .add_ref(&self.b.mul_ref(&coupling(diag)))
    }
}

/// Evolves `B` from data on `T = T0` so that `B·S⁻¹u` is conserved with flux
/// `B·D·S⁻¹u`.
pub fn solve_b(diag: &Diagonalizer, data: &Mat2<Vec<Complex64>>, degree: usize) -> ConjugatorField {
    let (t0, x0) = (diag.d.m[0][0].t0(), diag.d.m[0][0].x0());
    let m_coupling = coupling(diag);
    let d = diag.d.map(|s| s.truncate(degree));
    let mut b: SMat = Mat2::from_fn(|i, j| BivariateSeries::from_x_coeffs(t0, x0, degree, &data.m[i][j]));
    for m in 0..degree {
        let bd = b.mul_ref(&d);
        let rhs = smat_dx(&bd).add_ref(&b.mul_ref(&m_coupling));
        let inv = 1.0 / (m + 1) as f64;
        for i in 0..2 {
            for j in 0..2 {
                for n in 0..degree - m {
                    let v = -rhs.m[i][j].coeff(m, n) * inv;
                    b.m[i][j].set_coeff(m + 1, n, v);
                }
            }
        }
    }
    ConjugatorField { b, data: data.clone() }
}

/// Constant matrix data for [`solve_b`].
pub fn constant_data(m: &CMat2) -> Mat2<Vec<Complex64>> {
    m.map(|c| vec![*c])
}

/// All series fields for one expansion, with the derivative series needed
/// for pointwise evaluation.
#[derive(Debug, Clone)]
pub struct Fields {
    pub frame: ProblemFrame,
    pub solution: SeriesSolution,
    pub diag: Diagonalizer,
    pub zeta: CharacteristicPair,
    pub conjugator: ConjugatorField,
    u_t: [BivariateSeries; 2],
    u_x: [BivariateSeries; 2],
    s_t: SMat,
    s_x: SMat,
    s_inv_t: SMat,
    s_inv_x: SMat,
    b_t: SMat,
    b_x: SMat,
    zeta_t: [BivariateSeries; 2],
    zeta_x: [BivariateSeries; 2],
    lambda_t: [BivariateSeries; 2],
    lambda_x: [BivariateSeries; 2],
}

impl Fields {
    pub fn build(
        solution: &SeriesSolution,
        frame: &ProblemFrame,
        b_data: &Mat2<Vec<Complex64>>,
    ) -> Result<Self, ConjugationError> {
        let diag = diagonalizer_fields(solution, frame)?;
        let n = solution.degree();
        let zeta = solve_zeta(&diag.d, n);
        let conjugator = solve_b(&diag, b_data, n);
        Ok(Self::assemble(frame, solution, diag, zeta, conjugator))
    }

    pub fn assemble(
        frame: &ProblemFrame,
        solution: &SeriesSolution,
        diag: Diagonalizer,
        zeta: CharacteristicPair,
        conjugator: ConjugatorField,
    ) -> Self {
        let u = [&solution.u1, &solution.u2];
        Fields {
            frame: *frame,
            solution: solution.clone(),
            u_t: u.map(|s| s.d_dt()),
            u_x: u.map(|s| s.d_dx()),
            s_t: smat_dt(&diag.s),
            s_x: smat_dx(&diag.s),
            s_inv_t: smat_dt(&diag.s_inv),
            s_inv_x: smat_dx(&diag.s_inv),
            b_t: smat_dt(&conjugator.b),
            b_x: smat_dx(&conjugator.b),
            zeta_t: zeta.zeta.clone().map(|s| s.d_dt()),
            zeta_x: zeta.zeta.clone().map(|s| s.d_dx()),
            lambda_t: diag.lambda.clone().map(|s| s.d_dt()),
            lambda_x: diag.lambda.clone().map(|s| s.d_dx()),
            diag,
            zeta,
            conjugator,
        }
    }

    pub fn model(&self) -> &GasModel {
        &self.solution.model
    }

    /// Replaces `B` (used to probe defect sensitivity).
    pub fn with_conjugator(&self, conjugator: ConjugatorField) -> Self {
        Self::assemble(
            &self.frame,
            &self.solution,
            self.diag.clone(),
            self.zeta.clone(),
            conjugator,
        )
    }

    pub fn sample(&self, t: f64, x: f64) -> FieldSample {
        let ev = |s: &BivariateSeries| s.evaluate(t, x);
        let ev2 = |s: &[BivariateSeries; 2]| [ev(&s[0]), ev(&s[1])];
        FieldSample {
            t,
            x,
            u: self.solution.evaluate(t, x),
            u_t: ev2(&self.u_t),
            u_x: ev2(&self.u_x),
            s: smat_eval(&self.diag.s, t, x),
            s_t: smat_eval(&self.s_t, t, x),
            s_x: smat_eval(&self.s_x, t, x),
            s_inv: smat_eval(&self.diag.s_inv, t, x),
            s_inv_t: smat_eval(&self.s_inv_t, t, x),
            s_inv_x: smat_eval(&self.s_inv_x, t, x),
            lambda: ev2(&self.diag.lambda),
            lambda_t: ev2(&self.lambda_t),
            lambda_x: ev2(&self.lambda_x),
            b: smat_eval(&self.conjugator.b, t, x),
            b_t: smat_eval(&self.b_t, t, x),
            b_x: smat_eval(&self.b_x, t, x),
            zeta: ev2(&self.zeta.zeta),
            zeta_t: ev2(&self.zeta_t),
            zeta_x: ev2(&self.zeta_x),
        }
    }
}

/// Values and first derivatives of every field at one point.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub t: f64,
    pub x: f64,
    pub u: [Complex64; 2],
    pub u_t: [Complex64; 2],
    pub u_x: [Complex64; 2],
    pub s: CMat2,
    pub s_t: CMat2,
    pub s_x: CMat2,
    pub s_inv: CMat2,
    pub s_inv_t: CMat2,
    pub s_inv_x: CMat2,
    pub lambda: [Complex64; 2],
    pub lambda_t: [Complex64; 2],
    pub lambda_x: [Complex64; 2],
    pub b: CMat2,
    pub b_t: CMat2,
    pub b_x: CMat2,
    pub zeta: [Complex64; 2],
    pub zeta_t: [Complex64; 2],
    pub zeta_x: [Complex64; 2],
}

impl FieldSample {
    pub fn d(&self) -> CMat2 {
        diag_of(&self.lambda)
    }

    pub fn d_x(&self) -> CMat2 {
        diag_of(&self.lambda_x)
    }

    /// `w = S⁻¹u`.
    pub fn w(&self) -> [Complex64; 2] {
        self.s_inv.apply(&self.u)
    }

    pub fn w_t(&self) -> [Complex64; 2] {
        add2(self.s_inv_t.apply(&self.u), self.s_inv.apply(&self.u_t))
    }

    pub fn w_x(&self) -> [Complex64; 2] {
        add2(self.s_inv_x.apply(&self.u), self.s_inv.apply(&self.u_x))
    }

    /// Conserved density `v = B·w`.
    pub fn v(&self) -> [Complex64; 2] {
        self.b.apply(&self.w())
    }

    /// Flux `f = B·D·w`.
    pub fn f(&self) -> [Complex64; 2] {
        self.b.apply(&self.d().apply(&self.w()))
    }

    pub fn v_t(&self) -> [Complex64; 2] {
        add2(self.b_t.apply(&self.w()), self.b.apply(&self.w_t()))
    }

    pub fn f_x(&self) -> [Complex64; 2] {
        let w = self.w();
        let d = self.d();
        let a = self.b_x.apply(&d.apply(&w));
        let b = self.b.apply(&self.d_x().apply(&w));
        let c = self.b.apply(&d.apply(&self.w_x()));
        [a[0] + b[0] + c[0], a[1] + b[1] + c[1]]
    }
}

fn add2(a: [Complex64; 2], b: [Complex64; 2]) -> [Complex64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ck_solve;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn frame() -> ProblemFrame {
        ProblemFrame::new(0.0, 0.0, 0.08, 0.9, 0.4, 0.5, GasModel::default()).unwrap()
    }

    fn variable(n: usize) -> SeriesSolution {
        ck_solve(&[c(0.0)], &[c(0.3), c(0.1)], &GasModel::default(), 0.0, 0.0, n).unwrap()
    }

    fn max_entry(m: &SMat) -> f64 {
        m.entries().map(|s| s.max_abs_coeff()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_rest_state_gives_rotation_generator() {
        let model = GasModel::default();
        let sol = ck_solve(&[c(0.0)], &[c(0.0)], &model, 0.0, 0.0, 6).unwrap();
        let d = diagonalizer_fields(&sol, &frame()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s0 = smat_eval(&d.s, 0.0, 0.0);
        assert!((s0.m[0][0] - c(h)).norm() < 1e-15);
        assert!((s0.m[1][0] - Complex64::new(0.0, h)).norm() < 1e-15);
        assert!((s0.m[0][1] - c(h)).norm() < 1e-15);
        assert!((s0.m[1][1] - Complex64::new(0.0, -h)).norm() < 1e-15);
        assert!((d.lambda[0].constant_term() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((d.lambda[1].constant_term() - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(max_entry(&d.residual_series()), 0.0);
    }

    #[test]
    fn variable_state_diagonalizes() {
        let sol = variable(8);
        let d = diagonalizer_fields(&sol, &frame()).unwrap();
        assert!(max_entry(&d.residual_series()) <= 1e-9);
        assert!(d.inverse_defect() <= 1e-12);
        assert!(d.lambda[0].constant_term().im > 0.0);
    }

    #[test]
    fn supersonic_state_has_real_spectrum() {
        let sol = ck_solve(&[c(0.0)], &[c(1.2)], &GasModel::default(), 0.0, 0.0, 4).unwrap();
        let d = diagonalizer_fields(&sol, &frame()).unwrap();
        for l in &d.lambda {
            assert_eq!(l.constant_term().im, 0.0);
        }
        assert!(max_entry(&d.residual_series()) < 1e-12);
    }

    #[test]
    fn frame_crossing_sonic_line_is_rejected() {
        let model = GasModel::default();
        let q = model.sonic_speed();
        // u2 reaches the sonic speed inside the cutoff window.
        let sol = ck_solve(&[c(0.0)], &[c(q - 0.05), c(0.5)], &model, 0.0, 0.0, 4).unwrap();
        assert!(matches!(
            diagonalizer_fields(&sol, &frame()),
            Err(ConjugationError::FrameTooLarge { .. })
        ));
    }

    #[test]
    fn zeta_for_constant_speeds() {
        let d = Mat2::diag(
            BivariateSeries::constant(0.0, 0.0, 5, Complex64::new(0.0, 1.0)),
            BivariateSeries::constant(0.0, 0.0, 5, Complex64::new(0.0, -1.0)),
            BivariateSeries::zeros(0.0, 0.0, 5),
        );
        let z = solve_zeta(&d, 5);
        for (i, sign) in [(0, -1.0), (1, 1.0)] {
            for (m, n, v) in z.zeta[i].terms() {
                let expect = match (m, n) {
                    (0, 1) => c(1.0),
                    (1, 0) => Complex64::new(0.0, sign),
                    _ => c(0.0),
                };
                assert_eq!(v, expect);
            }
        }
    }

    #[test]
    fn zeta_first_order_coefficient_is_minus_lambda() {
        let l = BivariateSeries::from_x_coeffs(0.0, 0.0, 6, &[Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.1)]);
        let lc = BivariateSeries::from_x_coeffs(0.0, 0.0, 6, &[Complex64::new(0.0, -1.0), Complex64::new(0.0, -0.1)]);
        let d = Mat2::diag(l, lc, BivariateSeries::zeros(0.0, 0.0, 6));
        let z = solve_zeta(&d, 6);
        assert_eq!(z.zeta[0].coeff(1, 0), Complex64::new(0.0, -1.0));
        assert_eq!(z.zeta[0].coeff(1, 1), Complex64::new(0.0, -0.1));
        assert_eq!(z.initial_defect(), 0.0);
        let lambda = [d.m[0][0].clone(), d.m[1][1].clone()];
        assert_eq!(z.first_order_defect(&lambda), 0.0);
        let r = z.transport_residual(&lambda);
        assert!(r.iter().all(|s| s.max_abs_coeff() < 1e-15));
        for rem in z.remainder(&lambda) {
            for v in rem.t_slice(0) {
                assert!(v.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn b_is_identity_for_constant_fields() {
        let model = GasModel::default();
        let sol = ck_solve(&[c(0.0)], &[c(0.2)], &model, 0.0, 0.0, 6).unwrap();
        let diag = diagonalizer_fields(&sol, &frame()).unwrap();
        let cf = solve_b(&diag, &constant_data(&CMat2::identity()), 6);
        for i in 0..2 {
            for j in 0..2 {
                for (m, n, v) in cf.b.m[i][j].terms() {
                    let e = if i == j && m == 0 && n == 0 { 1.0 } else { 0.0 };
                    assert_eq!(v, c(e));
                }
            }
        }
    }

    #[test]
    fn b_residual_and_linearity() {
        let sol = variable(8);
        let diag = diagonalizer_fields(&sol, &frame()).unwrap();
        let one = solve_b(&diag, &constant_data(&CMat2::identity()), 8);
        assert!(max_entry(&one.residual(&diag)) <= 1e-9);
        let two = solve_b(&diag, &constant_data(&CMat2::identity().scale(c(2.0))), 8);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(two.b.m[i][j], one.b.m[i][j].scale_re(2.0));
            }
        }
    }
}
