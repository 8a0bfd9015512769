//! Truncated bivariate Taylor series in `(τ, ξ) = (t − T0, x − x0)` with
//! complex coefficients, and the Cauchy–Kovalevskaya solver built on them.
//!
//! A series of degree `N` stores every coefficient `a[m][n]` of `τ^m ξ^n`
//! with `m + n ≤ N`. Binary operations truncate to the smaller degree of the
//! two operands; differentiation lowers the degree by one. Every output
//! coefficient is accumulated in a fixed order that does not depend on the
//! truncation degree, so the same input truncated to two different degrees
//! produces bitwise identical low-order coefficients.

mod ck;

pub use ck::{ck_solve, flux_matrix_series, residual, CkError, SeriesSolution, GROWTH_WARNING};

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("division by a series with vanishing constant term")]
    ZeroConstantTerm,
    #[error("expansion points differ: ({0}, {1}) vs ({2}, {3})")]
    FrameMismatch(f64, f64, f64, f64),
    #[error("malformed series: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSeries {
    t0: f64,
    x0: f64,
    degree: usize,
    coeffs: Vec<Complex64>,
}

#[inline]
fn block(d: usize) -> usize {
    d * (d + 1) / 2
}

#[inline]
fn idx(m: usize, n: usize) -> usize {
    block(m + n) + m
}

fn len_for(degree: usize) -> usize {
    block(degree + 1)
}

impl BivariateSeries {
    pub fn zeros(t0: f64, x0: f64, degree: usize) -> Self {
        BivariateSeries {
            t0,
            x0,
            degree,
            coeffs: vec![ZERO; len_for(degree)],
        }
    }

    pub fn constant(t0: f64, x0: f64, degree: usize, c: Complex64) -> Self {
        let mut s = Self::zeros(t0, x0, degree);
        s.coeffs[0] = c;
        s
    }

    /// Series with `a[0][n] = coeffs[n]`; extra coefficients are dropped.
    pub fn from_x_coeffs(t0: f64, x0: f64, degree: usize, coeffs: &[Complex64]) -> Self {
        let mut s = Self::zeros(t0, x0, degree);
        for (n, c) in coeffs.iter().enumerate().take(degree + 1) {
            s.coeffs[idx(0, n)] = *c;
        }
        s
    }

    /// `τ = t − T0`.
    pub fn var_t(t0: f64, x0: f64, degree: usize) -> Self {
        let mut s = Self::zeros(t0, x0, degree);
        if degree >= 1 {
            s.coeffs[idx(1, 0)] = Complex64::new(1.0, 0.0);
        }
        s
    }

    /// `ξ = x − x0`.
    pub fn var_x(t0: f64, x0: f64, degree: usize) -> Self {
        let mut s = Self::zeros(t0, x0, degree);
        if degree >= 1 {
            s.coeffs[idx(0, 1)] = Complex64::new(1.0, 0.0);
        }
        s
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, m: usize, n: usize) -> Complex64 {
        if m + n > self.degree {
            ZERO
        } else {
            self.coeffs[idx(m, n)]
        }
    }

    pub fn set_coeff(&mut self, m: usize, n: usize, v: Complex64) {
        assert!(m + n <= self.degree, "coefficient ({m},{n}) beyond degree {}", self.degree);
        self.coeffs[idx(m, n)] = v;
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Iterates `(m, n, a[m][n])` by increasing total degree.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..=self.degree).flat_map(move |d| (0..=d).map(move |m| (m, d - m, self.coeffs[idx(m, d - m)])))
    }

    /// Coefficients of `τ^m` as a polynomial in `ξ`.
    pub fn t_slice(&self, m: usize) -> Vec<Complex64> {
        if m > self.degree {
            return Vec::new();
        }
        (0..=self.degree - m).map(|n| self.coeffs[idx(m, n)]).collect()
    }

    pub fn truncate(&self, degree: usize) -> Self {
        let degree = degree.min(self.degree);
        BivariateSeries {
            t0: self.t0,
            x0: self.x0,
            degree,
            coeffs: self.coeffs[..len_for(degree)].to_vec(),
        }
    }

    fn same_frame(&self, other: &Self) {
        assert!(
            self.t0 == other.t0 && self.x0 == other.x0,
            "{}",
            SeriesError::FrameMismatch(self.t0, self.x0, other.t0, other.x0)
        );
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        self.same_frame(other);
        let degree = self.degree.min(other.degree);
        let n = len_for(degree);
        BivariateSeries {
            t0: self.t0,
            x0: self.x0,
            degree,
            coeffs: self.coeffs[..n].iter().zip(&other.coeffs[..n]).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        BivariateSeries {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
            ..self.clone()
        }
    }

    pub fn scale_re(&self, k: f64) -> Self {
        self.scale(Complex64::new(k, 0.0))
    }

    pub fn add_scalar(&self, k: Complex64) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += k;
        s
    }

    pub fn multiply(&self, other: &Self) -> Self {
        self.same_frame(other);
        let degree = self.degree.min(other.degree);
        let mut out = Self::zeros(self.t0, self.x0, degree);
        for d in 0..=degree {
            for m in 0..=d {
                let n = d - m;
                let mut acc = ZERO;
                for i in 0..=m {
                    for j in 0..=n {
                        acc += self.coeffs[idx(i, j)] * other.coeffs[idx(m - i, n - j)];
                    }
                }
                out.coeffs[idx(m, n)] = acc;
            }
        }
        out
    }

    pub fn divide(&self, other: &Self) -> Result<Self, SeriesError> {
        self.same_frame(other);
        let b0 = other.coeffs[0];
        if b0.norm() == 0.0 {
            return Err(SeriesError::ZeroConstantTerm);
        }
        let degree = self.degree.min(other.degree);
        let mut out = Self::zeros(self.t0, self.x0, degree);
        for d in 0..=degree {
            for m in 0..=d {
                let n = d - m;
                let mut acc = self.coeffs[idx(m, n)];
                for i in 0..=m {
                    for j in 0..=n {
                        if i == 0 && j == 0 {
                            continue;
                        }
                        acc -= other.coeffs[idx(i, j)] * out.coeffs[idx(m - i, n - j)];
                    }
                }
                out.coeffs[idx(m, n)] = acc / b0;
            }
        }
        Ok(out)
    }

    pub fn recip(&self) -> Result<Self, SeriesError> {
        Self::constant(self.t0, self.x0, self.degree, Complex64::new(1.0, 0.0)).divide(self)
    }

    /// Square root whose constant term is `root0`, which must satisfy
    /// `root0² = a[0][0]` and be nonzero.
    pub fn sqrt_with_root(&self, root0: Complex64) -> Result<Self, SeriesError> {
        if root0.norm() == 0.0 {
            return Err(SeriesError::ZeroConstantTerm);
        }
        let mut out = Self::zeros(self.t0, self.x0, self.degree);
        out.coeffs[0] = root0;
        let two_r0 = root0 * 2.0;
        for d in 1..=self.degree {
            for m in 0..=d {
                let n = d - m;
                let mut acc = self.coeffs[idx(m, n)];
                for i in 0..=m {
                    for j in 0..=n {
                        if (i == 0 && j == 0) || (i == m && j == n) {
                            continue;
                        }
                        acc -= out.coeffs[idx(i, j)] * out.coeffs[idx(m - i, n - j)];
                    }
                }
                out.coeffs[idx(m, n)] = acc / two_r0;
            }
        }
        Ok(out)
    }

    /// Principal square root of the constant term.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        self.sqrt_with_root(self.coeffs[0].sqrt())
    }

    /// `exp` of the series; exact through the truncation degree.
    pub fn exp(&self) -> Self {
        // y' = a' y along ξ and τ: build by the standard recursion on total degree
        // using the Euler operator E = τ∂τ + ξ∂ξ, E(y) = E(a)·y.
        let mut out = Self::zeros(self.t0, self.x0, self.degree);
        out.coeffs[0] = self.coeffs[0].exp();
        for d in 1..=self.degree {
            for m in 0..=d {
                let n = d - m;
                let mut acc = ZERO;
                for i in 0..=m {
                    for j in 0..=n {
                        if i + j == 0 {
                            continue;
                        }
                        acc += self.coeffs[idx(i, j)] * ((i + j) as f64) * out.coeffs[idx(m - i, n - j)];
                    }
                }
                out.coeffs[idx(m, n)] = acc / d as f64;
            }
        }
        out
    }

    pub fn d_dt(&self) -> Self {
        if self.degree == 0 {
            return Self::zeros(self.t0, self.x0, 0);
        }
        let mut out = Self::zeros(self.t0, self.x0, self.degree - 1);
        for d in 0..self.degree {
            for m in 0..=d {
                let n = d - m;
                out.coeffs[idx(m, n)] = self.coeffs[idx(m + 1, n)] * (m + 1) as f64;
            }
        }
        out
    }

    pub fn d_dx(&self) -> Self {
        if self.degree == 0 {
            return Self::zeros(self.t0, self.x0, 0);
        }
        let mut out = Self::zeros(self.t0, self.x0, self.degree - 1);
        for d in 0..self.degree {
            for m in 0..=d {
                let n = d - m;
                out.coeffs[idx(m, n)] = self.coeffs[idx(m, n + 1)] * (n + 1) as f64;
            }
        }
        out
    }

    /// Horner evaluation at real `(t, x)`.
    pub fn evaluate(&self, t: f64, x: f64) -> Complex64 {
        self.evaluate_complex(Complex64::new(t, 0.0), Complex64::new(x, 0.0))
    }

    pub fn evaluate_complex(&self, t: Complex64, x: Complex64) -> Complex64 {
        let tau = t - self.t0;
        let xi = x - self.x0;
        let mut acc = ZERO;
        for m in (0..=self.degree).rev() {
            let mut inner = ZERO;
            for n in (0..=self.degree - m).rev() {
                inner = inner * xi + self.coeffs[idx(m, n)];
            }
            acc = acc * tau + inner;
        }
        acc
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus among total degrees `≤ d`.
    pub fn max_abs_through(&self, d: usize) -> f64 {
        let d = d.min(self.degree);
        self.coeffs[..len_for(d)].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    /// Series of `Re f` and `Im f` on the real `(t, x)` plane.
    pub fn real_part(&self) -> Self {
        BivariateSeries {
            coeffs: self.coeffs.iter().map(|c| Complex64::new(c.re, 0.0)).collect(),
            ..self.clone()
        }
    }

    pub fn imag_part(&self) -> Self {
        BivariateSeries {
            coeffs: self.coeffs.iter().map(|c| Complex64::new(c.im, 0.0)).collect(),
            ..self.clone()
        }
    }

    /// Divides by `τ`, dropping the `τ⁰` row (which should already be zero).
    pub fn shift_down_t(&self) -> Self {
        if self.degree == 0 {
            return Self::zeros(self.t0, self.x0, 0);
        }
        let mut out = Self::zeros(self.t0, self.x0, self.degree - 1);
        for d in 0..self.degree {
            for m in 0..=d {
                out.coeffs[idx(m, d - m)] = self.coeffs[idx(m + 1, d - m)];
            }
        }
        out
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            t0: self.t0,
            x0: self.x0,
            n: self.degree,
            coeffs: self.terms().map(|(m, n, c)| (m, n, c.re, c.im)).collect(),
        }
    }

    pub fn from_json(j: &SeriesJson) -> Result<Self, SeriesError> {
        let mut s = Self::zeros(j.t0, j.x0, j.n);
        for &(m, n, re, im) in &j.coeffs {
            if m + n > j.n {
                return Err(SeriesError::Malformed(format!("term ({m},{n}) beyond degree {}", j.n)));
            }
            s.coeffs[idx(m, n)] = Complex64::new(re, im);
        }
        Ok(s)
    }
}

/// Wire form `{T0, x0, N, coeffs: [[m, n, re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesJson {
    #[serde(rename = "T0")]
    pub t0: f64,
    pub x0: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub coeffs: Vec<(usize, usize, f64, f64)>,
}

impl Add for &BivariateSeries {
    type Output = BivariateSeries;
    fn add(self, rhs: Self) -> BivariateSeries {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &BivariateSeries {
    type Output = BivariateSeries;
    fn sub(self, rhs: Self) -> BivariateSeries {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &BivariateSeries {
    type Output = BivariateSeries;
    fn mul(self, rhs: Self) -> BivariateSeries {
        self.multiply(rhs)
    }
}

impl Neg for &BivariateSeries {
    type Output = BivariateSeries;
    fn neg(self) -> BivariateSeries {
        self.scale_re(-1.0)
    }
}

impl Add for BivariateSeries {
    type Output = BivariateSeries;
    fn add(self, rhs: Self) -> BivariateSeries {
        &self + &rhs
    }
}

impl Sub for BivariateSeries {
    type Output = BivariateSeries;
    fn sub(self, rhs: Self) -> BivariateSeries {
        &self - &rhs
    }
}

impl Mul for BivariateSeries {
    type Output = BivariateSeries;
    fn mul(self, rhs: Self) -> BivariateSeries {
        &self * &rhs
    }
}

impl Neg for BivariateSeries {
    type Output = BivariateSeries;
    fn neg(self) -> BivariateSeries {
        -&self
    }
}
