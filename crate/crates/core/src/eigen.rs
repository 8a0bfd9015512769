//! Eigen-decomposition of 2×2 matrices and continuation of eigenpairs along
//! a parameter path.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::mat2::{CMat2, Mat2};

/// Default defectiveness tolerance, relative to `‖A‖²_max`.
pub const DEFAULT_DEFECT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("eigenvalue multiplicity: |tr² − 4 det| = {discriminant:e} within tolerance of ‖A‖² = {scale:e}")]
    Multiplicity { discriminant: f64, scale: f64 },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("eigenvector matrix is singular")]
    SingularEigenbasis,
    #[error("path must contain at least one sample")]
    EmptyPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Columns are the unit eigenvectors for `lambda_plus`, `lambda_minus`.
    pub s: CMat2,
    pub s_inv: CMat2,
    pub d: CMat2,
}

/// Quadratic-formula roots of `λ² − tr λ + det`, ordered so that the first has
/// the larger imaginary part (larger real part on ties).
pub fn eigenvalues(a: &CMat2) -> (Complex64, Complex64, Complex64) {
    let tr = a.trace();
    let det = a.det();
    let disc = tr * tr - 4.0 * det;
    let root = disc.sqrt();
    let (l1, l2) = ((tr + root) * 0.5, (tr - root) * 0.5);
    if l2.im > l1.im || (l2.im == l1.im && l2.re > l1.re) {
        (l2, l1, disc)
    } else {
        (l1, l2, disc)
    }
}

/// Unit eigenvector for `lambda`, first nonzero component real positive.
pub fn eigenvector(a: &CMat2, lambda: Complex64) -> [Complex64; 2] {
    let [[a11, a12], [a21, a22]] = a.m;
    // Each row of (A − λ) gives a candidate null vector; keep the better conditioned.
    let r1 = [a12, lambda - a11];
    let r2 = [lambda - a22, a21];
    let n1 = r1[0].norm_sqr() + r1[1].norm_sqr();
    let n2 = r2[0].norm_sqr() + r2[1].norm_sqr();
    let v = if n1 >= n2 { r1 } else { r2 };
    let n = n1.max(n2);
    if n == 0.0 {
        // A = λI: any vector works.
        return [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    }
    normalize(v)
}

fn normalize(v: [Complex64; 2]) -> [Complex64; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let lead = if v[0].norm() > 1e-14 * n { v[0] } else { v[1] };
    let phase = lead.conj() / lead.norm();
    [v[0] * phase / n, v[1] * phase / n]
}

pub fn eigen_decompose(a: &CMat2) -> Result<EigenDecomposition, EigenError> {
    eigen_decompose_with_tol(a, DEFAULT_DEFECT_TOL)
}

pub fn eigen_decompose_with_tol(a: &CMat2, tol: f64) -> Result<EigenDecomposition, EigenError> {
    if a.entries().any(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let (lp, lm, disc) = eigenvalues(a);
    let scale = a.max_abs().powi(2);
    if disc.norm() <= tol * scale || scale == 0.0 {
        return Err(EigenError::Multiplicity {
            discriminant: disc.norm(),
            scale,
        });
    }
    let vp = eigenvector(a, lp);
    let vm = eigenvector(a, lm);
    let s = Mat2::new(vp[0], vm[0], vp[1], vm[1]);
    let s_inv = s.inverse().ok_or(EigenError::SingularEigenbasis)?;
    let zero = Complex64::new(0.0, 0.0);
    Ok(EigenDecomposition {
        lambda_plus: lp,
        lambda_minus: lm,
        s,
        s_inv,
        d: Mat2::diag(lp, lm, zero),
    })
}

pub fn eigen_decompose_real(a: &Mat2<f64>) -> Result<EigenDecomposition, EigenError> {
    eigen_decompose(&a.map(|&v| Complex64::new(v, 0.0)))
}

/// One continued eigenpair along a path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenBranch {
    pub t: Vec<f64>,
    pub lambda: Vec<Complex64>,
    pub vector: Vec<[Complex64; 2]>,
}

impl EigenBranch {
    fn with_capacity(n: usize) -> Self {
        EigenBranch {
            t: Vec::with_capacity(n),
            lambda: Vec::with_capacity(n),
            vector: Vec::with_capacity(n),
        }
    }

    /// Writes `t,re,im` rows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,re,im")?;
        for (t, l) in self.t.iter().zip(&self.lambda) {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", t, l.re, l.im)?;
        }
        Ok(())
    }

    /// Largest jump `|λ(t_{j+1}) − λ(t_j)|`.
    pub fn max_step(&self) -> f64 {
        self.lambda
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterEvent {
    pub index: usize,
    pub t: f64,
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedPair {
    pub first: EigenBranch,
    pub second: EigenBranch,
    pub clusters: Vec<ClusterEvent>,
}

fn overlap(a: &[Complex64; 2], b: &[Complex64; 2]) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// Rotates `v` so that `⟨prev, v⟩` is real and non-negative.
fn align_phase(prev: &[Complex64; 2], v: [Complex64; 2]) -> [Complex64; 2] {
    let o = overlap(prev, &v);
    if o.norm() == 0.0 {
        return v;
    }
    let phase = o.conj() / o.norm();
    [v[0] * phase, v[1] * phase]
}

/// Continues both eigenpairs of `A(t)` along the sampled path.
///
/// Consecutive samples are matched by minimal total eigenvalue displacement;
/// equal displacements are resolved by eigenvector overlap. Samples where the
/// eigenvalues come within `cluster_tol · max(1, ‖A‖_max)` are reported as
/// cluster events.
pub fn track_eigenpairs(path: &[(f64, CMat2)], cluster_tol: f64) -> Result<TrackedPair, EigenError> {
    if path.is_empty() {
        return Err(EigenError::EmptyPath);
    }
    let n = path.len();
    let mut first = EigenBranch::with_capacity(n);
    let mut second = EigenBranch::with_capacity(n);
    let mut clusters = Vec::new();
    for (j, (t, a)) in path.iter().enumerate() {
        if a.entries().any(|v| !v.is_finite()) {
            return Err(EigenError::NonFinite);
        }
        let (l1, l2, _) = eigenvalues(a);
        let sep = (l1 - l2).norm();
        let scale = a.max_abs().max(1.0);
        if sep <= cluster_tol * scale {
            clusters.push(ClusterEvent { index: j, t: *t, separation: sep });
        }
        let v1 = eigenvector(a, l1);
        let v2 = eigenvector(a, l2);
        let (mut p1, mut p2) = ((l1, v1), (l2, v2));
        if j > 0 {
            let (q1, q2) = (first.lambda[j - 1], second.lambda[j - 1]);
            let (w1, w2) = (first.vector[j - 1], second.vector[j - 1]);
            let keep = (l1 - q1).norm() + (l2 - q2).norm();
            let swap = (l2 - q1).norm() + (l1 - q2).norm();
            let tie = (keep - swap).abs() <= 1e-12 * (keep + swap).max(f64::MIN_POSITIVE);
            let do_swap = if tie {
                let ov_keep = overlap(&w1, &v1).norm() + overlap(&w2, &v2).norm();
                let ov_swap = overlap(&w1, &v2).norm() + overlap(&w2, &v1).norm();
                ov_swap > ov_keep
            } else {
                swap < keep
            };
            if do_swap {
                std::mem::swap(&mut p1, &mut p2);
            }
            p1.1 = align_phase(&w1, p1.1);
            p2.1 = align_phase(&w2, p2.1);
        }
        for (branch, (l, v)) in [(&mut first, p1), (&mut second, p2)] {
            branch.t.push(*t);
            branch.lambda.push(l);
            branch.vector.push(v);
        }
    }
    Ok(TrackedPair {
        first,
        second,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasdyn::{flux_matrix_with_sound_speed, FlowState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn check_invariants(a: &CMat2, e: &EigenDecomposition) {
        let resid = a.mul_ref(&e.s) - e.s.mul_ref(&e.d);
        assert!(resid.max_abs() <= 1e-10 * a.max_abs().max(1e-300), "AS-SD = {}", resid.max_abs());
        let id = e.s.mul_ref(&e.s_inv) - CMat2::identity();
        assert!(id.max_abs() <= 1e-10);
    }

    #[test]
    fn rotation_generator() {
        let a = CMat2::from_real([[0.0, 1.0], [-1.0, 0.0]]);
        let e = eigen_decompose(&a).unwrap();
        assert_abs_diff_eq!((e.lambda_plus - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((e.lambda_minus - c(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!((e.s.m[0][0] - c(h, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((e.s.m[1][0] - c(0.0, h)).norm(), 0.0, epsilon = 1e-15);
        check_invariants(&a, &e);
    }

    #[test]
    fn flux_matrix_spectrum() {
        let a = flux_matrix_with_sound_speed(&FlowState::new(0.0, 0.5), 1.0, 1e-12).unwrap();
        let e = eigen_decompose_real(&a).unwrap();
        // tr = 0, det = 0.75
        assert_abs_diff_eq!(e.lambda_plus.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.lambda_plus.im, 0.75f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(e.lambda_plus.im, 0.866025, epsilon = 1e-6);
        assert_eq!(e.lambda_minus, e.lambda_plus.conj());
    }

    #[test]
    fn diagonal_matrix() {
        let a = CMat2::from_real([[2.0, 0.0], [0.0, 3.0]]);
        let e = eigen_decompose(&a).unwrap();
        let mut ls = [e.lambda_plus.re, e.lambda_minus.re];
        ls.sort_by(f64::total_cmp);
        assert_eq!(ls, [2.0, 3.0]);
        // columns are unit coordinate vectors, in some order
        for j in 0..2 {
            let col = e.s.col(j);
            let ones = col.iter().filter(|v| (v.norm() - 1.0).abs() < 1e-15).count();
            let zeros = col.iter().filter(|v| v.norm() < 1e-15).count();
            assert_eq!((ones, zeros), (1, 1));
        }
        check_invariants(&a, &e);
    }

    #[test]
    fn defective_rejected() {
        let a = CMat2::from_real([[1.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(eigen_decompose(&a), Err(EigenError::Multiplicity { .. })));
        assert!(eigen_decompose(&CMat2::from_real([[0.0; 2]; 2])).is_err());
    }

    #[test]
    fn constant_path() {
        let a = CMat2::from_real([[0.0, 2.0], [-1.0, 0.5]]);
        let path: Vec<_> = (0..10).map(|j| (j as f64, a.clone())).collect();
        let tr = track_eigenpairs(&path, 1e-8).unwrap();
        assert!(tr.first.lambda.iter().all(|l| *l == tr.first.lambda[0]));
        assert!(tr.second.lambda.iter().all(|l| *l == tr.second.lambda[0]));
        assert!(tr.clusters.is_empty());
    }

    #[test]
    fn sqrt_branch_matches_closed_form() {
        let n = 64;
        let path: Vec<_> = (0..n)
            .map(|j| {
                let t = 0.5 * j as f64 / (n - 1) as f64;
                (t, CMat2::from_real([[0.0, 1.0], [-(1.0 - t), 0.0]]))
            })
            .collect();
        let tr = track_eigenpairs(&path, 1e-8).unwrap();
        let dev = tr
            .first
            .t
            .iter()
            .zip(&tr.first.lambda)
            .map(|(t, l)| (l - c(0.0, (1.0 - t).sqrt())).norm())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-10, "max deviation {dev}");
        // Lipschitz bound: |dλ/dt| = 1/(2√(1−t)) ≤ 1/√2 on [0, 0.5]
        let dt = 0.5 / (n - 1) as f64;
        assert!(tr.first.max_step() <= std::f64::consts::FRAC_1_SQRT_2 * dt * (1.0 + 1e-9));
        // phase coherence
        for w in tr.first.vector.windows(2) {
            let o = overlap(&w[0], &w[1]);
            assert!(o.re >= 0.0 && o.im.abs() < 1e-12);
        }
    }

    #[test]
    fn crossing_flags_cluster() {
        let n = 65;
        let path: Vec<_> = (0..n)
            .map(|j| {
                let t = -0.5 + j as f64 / (n - 1) as f64;
                (t, CMat2::from_real([[t, 1.0], [0.0, -t]]))
            })
            .collect();
        let tr = track_eigenpairs(&path, 1e-10).unwrap();
        assert_eq!(tr.clusters.len(), 1);
        assert_eq!(tr.clusters[0].t, 0.0);
        // the branch through λ = t continues linearly before the collision
        for j in 0..32 {
            assert_abs_diff_eq!(
                (tr.first.lambda[j] - tr.first.lambda[0]).re.abs() + (tr.second.lambda[j] - tr.second.lambda[0]).re.abs(),
                2.0 * (path[j].0 + 0.5),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn branch_csv() {
        let path = vec![(0.0, CMat2::from_real([[0.0, 1.0], [-1.0, 0.0]]))];
        let tr = track_eigenpairs(&path, 1e-8).unwrap();
        let mut buf = Vec::new();
        tr.first.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,re,im\n0.0000000000000000e0,"));
    }

    fn mat_strategy() -> impl Strategy<Value = [[f64; 2]; 2]> {
        prop::array::uniform2(prop::array::uniform2(-10.0f64..10.0))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn reconstruction(m in mat_strategy(), im in mat_strategy()) {
            let a = Mat2::from_fn(|i, j| c(m[i][j], 0.3 * im[i][j]));
            let (_, _, disc) = eigenvalues(&a);
            prop_assume!(disc.norm() > 1e-6 * a.max_abs().powi(2));
            let e = eigen_decompose(&a).unwrap();
            let back = e.s.mul_ref(&e.d).mul_ref(&e.s_inv);
            prop_assert!((back - a.clone()).max_abs() <= 1e-9 * a.max_abs());
        }

        #[test]
        fn conjugate_pairs_for_real_input(p in -5.0f64..5.0, s in -5.0f64..5.0, q in 0.1f64..5.0, h in 0.01f64..5.0, flip in any::<bool>()) {
            // qr < −(p−s)²/4 guarantees a negative discriminant
            let r = -((p - s).powi(2) / 4.0 + h) / q;
            let (q, r) = if flip { (-q, -r) } else { (q, r) };
            let a = CMat2::from_real([[p, q], [r, s]]);
            let e = eigen_decompose(&a).unwrap();
            prop_assert!(e.lambda_plus.im > 0.0);
            prop_assert!((e.lambda_minus - e.lambda_plus.conj()).norm() <= 1e-12 * a.max_abs());
        }
    }
}
