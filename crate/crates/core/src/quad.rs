//! Gauss–Legendre panel quadrature for complex-valued integrands.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use thiserror::Error;

const MAX_DEPTH: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance {requested:e} (estimated error {achieved:e})")]
    NonConvergence { requested: f64, achieved: f64 },
    #[error("empty or reversed integration interval [{0}, {1}]")]
    BadInterval(f64, f64),
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(points: usize) -> Self {
        let n = NonZeroUsize::new(points.max(1)).expect("positive");
        let rule = GaussLegendre::new(n);
        let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Shared 16-point rule.
    pub fn gl16() -> &'static GaussRule {
        static RULE: OnceLock<GaussRule> = OnceLock::new();
        RULE.get_or_init(|| GaussRule::new(16))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (h, m) = (0.5 * (b - a), 0.5 * (a + b));
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (m + h * x, h * w))
    }

    /// One panel. Returns the integral and `∫|f|`.
    pub fn panel<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> (Complex64, f64) {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        for (x, w) in self.mapped(a, b) {
            let v = f(x);
            sum += v * w;
            mass += v.norm() * w.abs();
        }
        (sum, mass)
    }
}

/// Integral, `∫|f|`, and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub abs_mass: f64,
    pub error: f64,
}

/// Uniform panels of width at most `max_width` between consecutive breakpoints.
pub fn panels_between(breaks: &[f64], max_width: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let n = ((b - a) / max_width).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for j in 0..n {
            let lo = a + j as f64 * h;
            let hi = if j + 1 == n { b } else { a + (j + 1) as f64 * h };
            out.push((lo, hi));
        }
    }
    out
}

/// `n` equal panels on `[a, b]`; empty when `b ≤ a`.
fn split(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    if b <= a {
        return Vec::new();
    }
    let h = (b - a) / n as f64;
    (0..n)
        .map(|j| (a + j as f64 * h, if j + 1 == n { b } else { a + (j + 1) as f64 * h }))
        .collect()
}

/// Fixed-panel rule over the given panels, summed in panel order.
pub fn integrate_panels<F: FnMut(f64) -> Complex64>(
    rule: &GaussRule,
    panels: &[(f64, f64)],
    mut f: F,
) -> (Complex64, f64) {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    for &(a, b) in panels {
        let (s, m) = rule.panel(a, b, &mut f);
        sum += s;
        mass += m;
    }
    (sum, mass)
}

/// Globally adaptive bisection on `[a, b]` with the 16-point rule.
pub fn adaptive<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult, QuadError> {
    adaptive_with_breaks(&mut f, &[a, b], tol)
}

/// As [`adaptive`], splitting first at the given increasing breakpoints.
pub fn adaptive_with_breaks<F: FnMut(f64) -> Complex64>(
    mut f: F,
    breaks: &[f64],
    tol: f64,
) -> Result<QuadResult, QuadError> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(QuadError::BadInterval(
            breaks.first().copied().unwrap_or(f64::NAN),
            breaks.last().copied().unwrap_or(f64::NAN),
        ));
    }
    let rule = GaussRule::gl16();
    let span = breaks[breaks.len() - 1] - breaks[0];
    if span == 0.0 {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            abs_mass: 0.0,
            error: 0.0,
        });
    }
    let mut total = QuadResult {
        value: Complex64::new(0.0, 0.0),
        abs_mass: 0.0,
        error: 0.0,
    };
    // Depth-first stack; each piece gets tolerance proportional to its length.
    let mut stack: Vec<(f64, f64, Complex64, usize)> = Vec::new();
    for w in breaks.windows(2).rev() {
        if w[1] > w[0] {
            let (s, _) = rule.panel(w[0], w[1], &mut f);
            stack.push((w[0], w[1], s, 0));
        }
    }
    while let Some((a, b, whole, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let (l, ml) = rule.panel(a, m, &mut f);
        let (r, mr) = rule.panel(m, b, &mut f);
        let err = (l + r - whole).norm();
        let local_tol = tol * (b - a) / span;
        if err <= local_tol.max(64.0 * f64::EPSILON * (ml + mr)) || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && err > local_tol.max(64.0 * f64::EPSILON * (ml + mr)) {
                return Err(QuadError::NonConvergence {
                    requested: tol,
                    achieved: err,
                });
            }
            total.value += l + r;
            total.abs_mass += ml + mr;
            total.error += err;
        } else {
            stack.push((m, b, r, depth + 1));
            stack.push((a, m, l, depth + 1));
        }
    }
    Ok(total)
}

/// Tensor Gauss–Legendre on `[t.0, t.1] × ⋃ x_intervals` for `K` integrands
/// sharing one evaluation, doubling the panel counts until two successive
/// levels agree to `tol` in every component.
pub fn integrate_rect_vec<const K: usize, F: FnMut(f64, f64) -> [Complex64; K]>(
    mut f: F,
    t: (f64, f64),
    x_intervals: &[(f64, f64)],
    tol: f64,
) -> Result<[QuadResult; K], QuadError> {
    if !(t.1 >= t.0) {
        return Err(QuadError::BadInterval(t.0, t.1));
    }
    let rule = GaussRule::gl16();
    let mut level = |n: usize| -> ([Complex64; K], [f64; K]) {
        let tp = split(t.0, t.1, n);
        let xp: Vec<(f64, f64)> = x_intervals.iter().flat_map(|&(a, b)| split(a, b, n)).collect();
        let mut sum = [Complex64::new(0.0, 0.0); K];
        let mut mass = [0.0; K];
        for &(ta, tb) in &tp {
            for (tt, wt) in rule.mapped(ta, tb) {
                for &(xa, xb) in &xp {
                    for (xx, wx) in rule.mapped(xa, xb) {
                        let v = f(tt, xx);
                        for k in 0..K {
                            sum[k] += v[k] * (wt * wx);
                            mass[k] += v[k].norm() * (wt * wx).abs();
                        }
                    }
                }
            }
        }
        (sum, mass)
    };
    let mut n = 1;
    let mut prev = level(n);
    let mut err = [0.0; K];
    for _ in 0..6 {
        n *= 2;
        let cur = level(n);
        let mut ok = true;
        for k in 0..K {
            err[k] = (cur.0[k] - prev.0[k]).norm();
            ok &= err[k] <= tol.max(1e-15 * cur.1[k]);
        }
        if ok {
            return Ok(std::array::from_fn(|k| QuadResult {
                value: cur.0[k],
                abs_mass: cur.1[k],
                error: err[k],
            }));
        }
        prev = cur;
    }
    Err(QuadError::NonConvergence {
        requested: tol,
        achieved: err.iter().copied().fold(0.0, f64::max),
    })
}

/// One-dimensional analogue of [`integrate_rect_vec`].
pub fn integrate_line_vec<const K: usize, F: FnMut(f64) -> [Complex64; K]>(
    mut f: F,
    x_intervals: &[(f64, f64)],
    tol: f64,
) -> Result<[QuadResult; K], QuadError> {
    let rule = GaussRule::gl16();
    let mut level = |n: usize| -> ([Complex64; K], [f64; K]) {
        let mut sum = [Complex64::new(0.0, 0.0); K];
        let mut mass = [0.0; K];
        for &(a, b) in x_intervals {
            for (xa, xb) in split(a, b, n) {
                for (xx, wx) in rule.mapped(xa, xb) {
                    let v = f(xx);
                    for k in 0..K {
                        sum[k] += v[k] * wx;
                        mass[k] += v[k].norm() * wx.abs();
                    }
                }
            }
        }
        (sum, mass)
    };
    let mut n = 1;
    let mut prev = level(n);
    let mut err = [0.0; K];
    for _ in 0..10 {
        n *= 2;
        let cur = level(n);
        let mut ok = true;
        for k in 0..K {
            err[k] = (cur.0[k] - prev.0[k]).norm();
            ok &= err[k] <= tol.max(1e-15 * cur.1[k]);
        }
        if ok {
            return Ok(std::array::from_fn(|k| QuadResult {
                value: cur.0[k],
                abs_mass: cur.1[k],
                error: err[k],
            }));
        }
        prev = cur;
    }
    Err(QuadError::NonConvergence {
        requested: tol,
        achieved: err.iter().copied().fold(0.0, f64::max),
    })
}

/// Scalar convenience wrapper over [`integrate_rect_vec`].
pub fn integrate_rect<F: FnMut(f64, f64) -> Complex64>(
    mut f: F,
    t: (f64, f64),
    x_breaks: &[f64],
    tol: f64,
) -> Result<QuadResult, QuadError> {
    let intervals: Vec<(f64, f64)> = x_breaks.windows(2).map(|w| (w[0], w[1])).collect();
    integrate_rect_vec(|t, x| [f(t, x)], t, &intervals, tol).map(|r| r[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let rule = GaussRule::new(16);
        let (v, _) = rule.panel(0.0, 2.0, |x| Complex64::new(x.powi(31), 0.0));
        assert!((v.re - 2f64.powi(32) / 32.0).abs() < 1e-6);
        let ws: f64 = rule.mapped(-1.0, 1.0).map(|(_, w)| w).sum();
        assert!((ws - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks_at_breaks() {
        let r = adaptive_with_breaks(|x: f64| Complex64::new(x.abs(), 0.0), &[-1.0, 0.0, 2.0], 1e-12).unwrap();
        assert!((r.value.re - 2.5).abs() < 1e-13);
        let r = adaptive(|x: f64| Complex64::new(x.abs().sqrt(), 0.0), -1.0, 1.0, 1e-10).unwrap();
        assert!((r.value.re - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn oscillatory_complex_integrand() {
        let r = adaptive(|x: f64| Complex64::new(0.0, 30.0 * x).exp(), 0.0, 1.0, 1e-12).unwrap();
        let exact = (Complex64::new(0.0, 30.0).exp() - 1.0) / Complex64::new(0.0, 30.0);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn rectangle_gaussian() {
        let r = integrate_rect(
            |t, x| Complex64::new((-x * x - t).exp(), 0.0),
            (0.0, 1.0),
            &[-8.0, 8.0],
            1e-12,
        )
        .unwrap();
        let exact = std::f64::consts::PI.sqrt() * (1.0 - (-1f64).exp());
        assert!((r.value.re - exact).abs() < 1e-11);
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(adaptive(|_| Complex64::new(1.0, 0.0), 1.0, 0.0, 1e-8).is_err());
    }
}
