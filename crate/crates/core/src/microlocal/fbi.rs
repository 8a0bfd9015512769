use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Datum1D, MicrolocalError};
use crate::quad::GaussRule;

/// Kernel magnitude at the window edge relative to its peak is `e^{−45}`.
const WINDOW_EXPONENT: f64 = 90.0;
/// Rounding noise of a Gauss–Legendre sum, as a multiple of `ε·Σ w|g|`.
const FLOOR_FACTOR: f64 = 64.0;
const LOG_MAX: f64 = 700.0;

/// Point and scale of one transform, with a positive quadratic form `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbiQuery {
    pub z: Complex64,
    pub mu: f64,
    pub q: f64,
}

impl FbiQuery {
    pub fn new(z: Complex64, mu: f64) -> Self {
        FbiQuery { z, mu, q: 1.0 }
    }

    pub fn with_form(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    fn validate(&self) -> Result<(), MicrolocalError> {
        if !(self.mu >= 1.0 && self.mu.is_finite()) {
            return Err(MicrolocalError::InvalidQuery(format!("μ = {} must be ≥ 1", self.mu)));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(MicrolocalError::InvalidQuery(format!("Q = {} must be positive", self.q)));
        }
        if !(self.z.re.is_finite() && self.z.im.is_finite()) {
            return Err(MicrolocalError::InvalidQuery("non-finite z".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbiOptions {
    /// Allowed change under panel halving, relative to `Σ w|g|`.
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for FbiOptions {
    fn default() -> Self {
        FbiOptions {
            tol: 1e-13,
            max_halvings: 5,
        }
    }
}

/// A transform value stored as `Tf·e^{−(μQ/2)(Im z)²}` so that large
/// `μ(Im z)²` cannot overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FbiValue {
    pub weighted: Complex64,
    /// `(μQ/2)(Im z)²`.
    pub log_weight: f64,
    /// `Σ w·|weighted kernel · f|` over the quadrature nodes.
    pub abs_mass: f64,
    /// Change observed under the last panel halving.
    pub refinement_delta: f64,
}

impl FbiValue {
    /// The unweighted transform.
    pub fn value(&self) -> Result<Complex64, MicrolocalError> {
        let n = self.weighted.norm();
        if n == 0.0 {
            return Ok(self.weighted);
        }
        if n.ln() + self.log_weight > LOG_MAX {
            return Err(MicrolocalError::Overflow(2.0 * self.log_weight));
        }
        Ok(self.weighted * self.log_weight.exp())
    }

    /// `log|Tf| − (μQ/2)(Im z)²`; `−∞` for an exactly zero transform.
    pub fn weighted_log_abs(&self) -> f64 {
        self.weighted.norm().ln()
    }

    /// Magnitude below which the weighted value is rounding noise.
    pub fn noise_floor(&self) -> f64 {
        FLOOR_FACTOR * f64::EPSILON * self.abs_mass
    }
}

pub fn fbi_transform(f: &Datum1D, query: &FbiQuery) -> Result<FbiValue, MicrolocalError> {
    generalized_fbi(f, &FbiQuery { q: 1.0, ..*query }, &FbiOptions::default())
}

/// `∫ e^{−(μQ/2)(z − x)²} f(x) dx` on Gauss–Legendre panels aligned with the
/// datum's breakpoints, halving the panels until the result is stable.
pub fn generalized_fbi(f: &Datum1D, query: &FbiQuery, opts: &FbiOptions) -> Result<FbiValue, MicrolocalError> {
    query.validate()?;
    let s = query.mu * query.q;
    let (a, b) = (query.z.re, -query.z.im);
    let half = (WINDOW_EXPONENT / s).sqrt().max(1.0);
    let (lo, hi) = (f.support().0.max(a - half), f.support().1.min(a + half));
    let log_weight = 0.5 * s * b * b;
    if lo >= hi {
        return Ok(FbiValue {
            weighted: Complex64::new(0.0, 0.0),
            log_weight,
            abs_mass: 0.0,
            refinement_delta: 0.0,
        });
    }
    let mut edges = vec![lo];
    edges.extend(f.breaks().iter().copied().filter(|x| *x > lo && *x < hi));
    edges.push(hi);

    // e^{−(s/2)(z−x)²} e^{−(s/2)b²} = e^{−(s/2)(x−a)²} e^{−i s b (x−a)}
    let kernel = |x: f64| {
        let d = x - a;
        Complex64::from_polar((-0.5 * s * d * d).exp(), -s * b * d)
    };
    let width = (1.0 / s.sqrt()).min(4.0 / (s * b.abs() + 1.0)).min(0.5);
    let rule = GaussRule::gl16();
    let sum = |h: f64| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        for w in edges.windows(2) {
            let n = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
            let step = (w[1] - w[0]) / n as f64;
            for j in 0..n {
                let pa = w[0] + j as f64 * step;
                let pb = if j + 1 == n { w[1] } else { pa + step };
                for (x, wt) in rule.mapped(pa, pb) {
                    let g = kernel(x) * f.eval(x);
                    acc += g * wt;
                    mass += g.norm() * wt;
                }
            }
        }
        (acc, mass)
    };

    let mut h = width;
    let (mut prev, _) = sum(h);
    let mut delta = f64::INFINITY;
    for _ in 0..=opts.max_halvings {
        h *= 0.5;
        let (cur, mass) = sum(h);
        delta = (cur - prev).norm();
        let allowed = opts.tol * mass + FLOOR_FACTOR * f64::EPSILON * mass;
        if delta <= allowed {
            return Ok(FbiValue {
                weighted: cur,
                log_weight,
                abs_mass: mass,
                refinement_delta: delta,
            });
        }
        prev = cur;
    }
    Err(MicrolocalError::NonConvergent {
        delta,
        allowed: opts.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microlocal::Interpolation;
    use crate::quad::adaptive_with_breaks;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian() -> Datum1D {
        Datum1D::preset("gaussian", Interpolation::Linear).unwrap()
    }

    fn closed_form(z: Complex64, s: f64) -> Complex64 {
        (2.0 * std::f64::consts::PI / (s + 1.0)).sqrt() * (-(z * z) * s / (2.0 * (s + 1.0))).exp()
    }

    #[test]
    fn gaussian_matches_completed_square() {
        for &mu in &[1.0, 3.0, 17.0, 100.0, 256.0] {
            for &z in &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.7, -0.3),
                Complex64::new(-1.5, 0.2),
            ] {
                let v = fbi_transform(&gaussian(), &FbiQuery::new(z, mu)).unwrap().value().unwrap();
                let e = closed_form(z, mu);
                assert!((v - e).norm() <= 1e-8 * e.norm(), "μ={mu} z={z}: {v} vs {e}");
            }
        }
    }

    #[test]
    fn general_form_rescales() {
        let z = Complex64::new(0.3, -0.2);
        for &mu in &[1.0, 10.0, 64.0] {
            let v = generalized_fbi(&gaussian(), &FbiQuery::new(z, mu).with_form(2.0), &FbiOptions::default())
                .unwrap()
                .value()
                .unwrap();
            let e = closed_form(z, 2.0 * mu);
            assert!((v - e).norm() <= 1e-8 * e.norm());
        }
    }

    #[test]
    fn unit_form_is_the_same_code_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = Datum1D::preset("abs", Interpolation::Linear).unwrap();
        for _ in 0..100 {
            let q = FbiQuery::new(Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)), rng.gen_range(1.0..200.0));
            let a = fbi_transform(&d, &q).unwrap();
            let b = generalized_fbi(&d, &q.with_form(1.0), &FbiOptions::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_datum_gives_zero() {
        let d = Datum1D::real_function("zero", (-1.0, 1.0), vec![], |_| 0.0).unwrap();
        let v = fbi_transform(&d, &FbiQuery::new(Complex64::new(0.1, -0.4), 9.0)).unwrap();
        assert_eq!(v.value().unwrap(), Complex64::new(0.0, 0.0));
        let g = generalized_fbi(&d, &FbiQuery::new(Complex64::new(0.1, -0.4), 9.0).with_form(3.0), &FbiOptions::default()).unwrap();
        assert_eq!(g.weighted, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn abs_matches_fine_adaptive_oracle() {
        let d = Datum1D::preset("abs", Interpolation::Linear).unwrap();
        let z = Complex64::new(0.0, -0.5);
        for &mu in &[4.0, 16.0, 64.0] {
            let v = fbi_transform(&d, &FbiQuery::new(z, mu)).unwrap().value().unwrap();
            let oracle = adaptive_with_breaks(
                |x: f64| (-(z - x) * (z - x) * (0.5 * mu)).exp() * x.abs(),
                &[-10.0, 0.0, 10.0],
                1e-15,
            )
            .unwrap()
            .value;
            assert!((v - oracle).norm() <= 1e-10, "μ={mu}: {v} vs {oracle}");
        }
    }

    #[test]
    fn conjugate_symmetry_and_translation() {
        let d = Datum1D::preset("abs", Interpolation::Linear).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.8..0.8));
            let mu = rng.gen_range(1.0..100.0);
            let a = fbi_transform(&d, &FbiQuery::new(z, mu)).unwrap();
            let b = fbi_transform(&d, &FbiQuery::new(z.conj(), mu)).unwrap();
            assert!((a.weighted - b.weighted.conj()).norm() <= 1e-13 * a.abs_mass.max(1.0));
            let shift = rng.gen_range(-2.0..2.0);
            let c = fbi_transform(&d.translated(shift), &FbiQuery::new(z + shift, mu)).unwrap();
            assert!((a.weighted - c.weighted).norm() <= 1e-12 * a.abs_mass.max(1.0));
        }
    }

    #[test]
    fn invalid_queries_are_rejected() {
        let g = gaussian();
        assert!(fbi_transform(&g, &FbiQuery::new(Complex64::new(0.0, 0.0), 0.5)).is_err());
        let bad = FbiQuery::new(Complex64::new(0.0, 0.0), 2.0).with_form(-1.0);
        assert!(generalized_fbi(&g, &bad, &FbiOptions::default()).is_err());
    }

    #[test]
    fn overflow_is_flagged() {
        let d = Datum1D::preset("abs", Interpolation::Linear).unwrap();
        let v = fbi_transform(&d, &FbiQuery::new(Complex64::new(0.0, -3.0), 1e3)).unwrap();
        assert!(matches!(v.value(), Err(MicrolocalError::Overflow(_))));
        assert!(v.weighted.is_finite());
    }
}
