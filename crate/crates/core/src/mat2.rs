//! Small fixed-size 2×2 matrices, generic over the entry type so the same
//! code serves plain numbers and series-valued fields.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

pub type CMat2 = Mat2<Complex64>;

impl<T> Mat2<T> {
    pub fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Mat2 {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        Mat2 {
            m: [[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]],
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Mat2<U> {
        Mat2::from_fn(|i, j| f(&self.m[i][j]))
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.m[i][j]
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.m.iter().flat_map(|row| row.iter())
    }
}

impl<T: Clone> Mat2<T> {
    pub fn diag(a: T, b: T, zero: T) -> Self {
        Mat2::new(a, zero.clone(), zero, b)
    }

    pub fn col(&self, j: usize) -> [T; 2] {
        [self.m[0][j].clone(), self.m[1][j].clone()]
    }

    pub fn transpose(&self) -> Self {
        Mat2::from_fn(|i, j| self.m[j][i].clone())
    }
}

impl<T> Mat2<T>
where
    for<'x> &'x T: Add<&'x T, Output = T> + Sub<&'x T, Output = T> + Mul<&'x T, Output = T>,
{
    pub fn mul_ref(&self, rhs: &Mat2<T>) -> Mat2<T> {
        Mat2::from_fn(|i, j| &(&self.m[i][0] * &rhs.m[0][j]) + &(&self.m[i][1] * &rhs.m[1][j]))
    }

    pub fn add_ref(&self, rhs: &Mat2<T>) -> Mat2<T> {
        Mat2::from_fn(|i, j| &self.m[i][j] + &rhs.m[i][j])
    }

    pub fn sub_ref(&self, rhs: &Mat2<T>) -> Mat2<T> {
        Mat2::from_fn(|i, j| &self.m[i][j] - &rhs.m[i][j])
    }

    pub fn apply(&self, v: &[T; 2]) -> [T; 2] {
        [
            &(&self.m[0][0] * &v[0]) + &(&self.m[0][1] * &v[1]),
            &(&self.m[1][0] * &v[0]) + &(&self.m[1][1] * &v[1]),
        ]
    }

    pub fn trace(&self) -> T {
        &self.m[0][0] + &self.m[1][1]
    }

    pub fn det(&self) -> T {
        &(&self.m[0][0] * &self.m[1][1]) - &(&self.m[0][1] * &self.m[1][0])
    }
}

impl Mat2<Complex64> {
    pub fn identity() -> Self {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        Mat2::new(o, z, z, o)
    }

    pub fn from_real(a: [[f64; 2]; 2]) -> Self {
        Mat2::from_fn(|i, j| Complex64::new(a[i][j], 0.0))
    }

    pub fn scale(&self, k: Complex64) -> Self {
        self.map(|v| v * k)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Sum of entry moduli.
    pub fn sum_abs(&self) -> f64 {
        self.entries().map(|v| v.norm()).sum()
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.norm() == 0.0 || !det.is_finite() {
            return None;
        }
        let [[a, b], [c, d]] = self.m;
        Some(Mat2::new(d / det, -b / det, -c / det, a / det))
    }
}

impl<T: Add<Output = T>> Add for Mat2<T> {
    type Output = Mat2<T>;
    fn add(self, rhs: Self) -> Self {
        let [[a, b], [c, d]] = self.m;
        let [[e, f], [g, h]] = rhs.m;
        Mat2::new(a + e, b + f, c + g, d + h)
    }
}

impl<T: Sub<Output = T>> Sub for Mat2<T> {
    type Output = Mat2<T>;
    fn sub(self, rhs: Self) -> Self {
        let [[a, b], [c, d]] = self.m;
        let [[e, f], [g, h]] = rhs.m;
        Mat2::new(a - e, b - f, c - g, d - h)
    }
}

impl<T: Neg<Output = T>> Neg for Mat2<T> {
    type Output = Mat2<T>;
    fn neg(self) -> Self {
        let [[a, b], [c, d]] = self.m;
        Mat2::new(-a, -b, -c, -d)
    }
}

impl Mul for CMat2 {
    type Output = CMat2;
    fn mul(self, rhs: Self) -> Self {
        self.mul_ref(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let a = CMat2::new(
            Complex64::new(1.0, 2.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(-1.0, 0.3),
            Complex64::new(2.0, -1.0),
        );
        let p = a.mul_ref(&a.inverse().unwrap());
        assert!((p - CMat2::identity()).max_abs() < 1e-14);
    }

    #[test]
    fn singular_has_no_inverse() {
        let a = CMat2::from_real([[1.0, 2.0], [2.0, 4.0]]);
        assert!(a.inverse().is_none());
    }
}
