use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::IllposednessError;
use crate::conjugation::CutoffSpec;
use crate::series::BivariateSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum NormSpec {
    Sobolev { s: f64 },
    Gevrey { sigma: f64, c: f64, radius: f64 },
}

/// `(Σ_m (1 + κ_m²)^s |f̂_m|²)^{1/2}` for periodic samples with spacing `dx`,
/// normalised so that `s = 0` gives `(dx Σ |f_j|²)^{1/2}`.
pub fn sobolev_norm(samples: &[Complex64], dx: f64, s: f64) -> Result<f64, IllposednessError> {
    let n = samples.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(IllposednessError::NotPowerOfTwo(n));
    }
    if !(dx > 0.0 && dx.is_finite() && s.is_finite()) {
        return Err(IllposednessError::InvalidParameter(format!("dx = {dx}, s = {s}")));
    }
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let len = n as f64 * dx;
    let mut acc = 0.0;
    for (m, c) in buf.iter().enumerate() {
        let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        let kappa = 2.0 * std::f64::consts::PI * signed / len;
        acc += (1.0 + kappa * kappa).powf(s) * c.norm_sqr();
    }
    Ok((acc * dx / n as f64).sqrt())
}

/// As [`sobolev_norm`], checking that `xs` is uniform first.
pub fn sobolev_norm_on_grid(xs: &[f64], fs: &[Complex64], s: f64) -> Result<f64, IllposednessError> {
    if xs.len() != fs.len() || xs.len() < 2 {
        return Err(IllposednessError::InvalidParameter("grid and samples differ in length".into()));
    }
    let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    for (i, w) in xs.windows(2).enumerate() {
        if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs() {
            return Err(IllposednessError::NonUniformGrid(i + 1));
        }
    }
    sobolev_norm(fs, dx, s)
}

/// Samples `χ·f` on the periodic window `[x0 − 2r, x0 + 2r)` with `n` points,
/// where `χ` is 1 on the ball `|x − x0| ≤ r` and vanishes at the window edges.
pub fn tapered_window(
    f: impl Fn(f64) -> Complex64,
    x0: f64,
    ball_radius: f64,
    n: usize,
) -> (f64, Vec<Complex64>) {
    let chi = CutoffSpec::new(x0, 2.0 * ball_radius);
    let dx = 4.0 * ball_radius / n as f64;
    let samples = (0..n)
        .map(|j| {
            let x = x0 - 2.0 * ball_radius + j as f64 * dx;
            f(x) * chi.value(x)
        })
        .collect();
    (dx, samples)
}

pub fn log_factorial(n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

/// Gevrey norm computed in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevreyNorm {
    pub log_value: f64,
    /// Order attaining the maximum.
    pub beta: usize,
    /// The maximum sits at the last order examined.
    pub truncated: bool,
}

impl GevreyNorm {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// `max_{β ≤ β_max} sup|∂^β f|·c^{−β}·(β!)^{−1/σ}` from `log_sup(β) = ln sup|∂^β f|`.
pub fn gevrey_norm(
    log_sup: impl Fn(usize) -> Option<f64>,
    sigma: f64,
    c: f64,
    beta_max: usize,
) -> Result<GevreyNorm, IllposednessError> {
    if !(sigma > 0.0 && sigma < 1.0) || !(c > 0.0 && c.is_finite()) {
        return Err(IllposednessError::InvalidParameter(format!("σ = {sigma}, c = {c}")));
    }
    let mut best = GevreyNorm {
        log_value: f64::NEG_INFINITY,
        beta: 0,
        truncated: false,
    };
    let mut lf = 0.0;
    for beta in 0..=beta_max {
        if beta > 1 {
            lf += (beta as f64).ln();
        }
        let d = log_sup(beta).ok_or(IllposednessError::DerivativeUnavailable(beta))?;
        let term = d - beta as f64 * c.ln() - lf / sigma;
        if term > best.log_value {
            best.log_value = term;
            best.beta = beta;
        }
    }
    best.truncated = best.beta == beta_max && best.log_value > f64::NEG_INFINITY;
    Ok(best)
}

/// Gevrey norm of `x ↦ f(T0, x)` on `|x − center| ≤ radius`, with the sup of
/// each derivative sampled at 201 points.
pub fn gevrey_norm_series(
    f: &BivariateSeries,
    center: f64,
    radius: f64,
    sigma: f64,
    c: f64,
    beta_max: usize,
) -> Result<GevreyNorm, IllposednessError> {
    let x0 = f.x0();
    let xs: Vec<f64> = (0..=200).map(|j| center - radius + 2.0 * radius * j as f64 / 200.0 - x0).collect();
    let mut derivs = vec![f.t_slice(0)];
    for _ in 0..beta_max {
        let p = derivs.last().unwrap();
        let d: Vec<Complex64> = p.iter().enumerate().skip(1).map(|(n, a)| a * n as f64).collect();
        derivs.push(d);
    }
    let log_sup = |beta: usize| {
        let p = &derivs[beta];
        let sup = xs
            .iter()
            .map(|&y| p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * y + a).norm())
            .fold(0.0, f64::max);
        Some(sup.ln())
    };
    gevrey_norm(log_sup, sigma, c, beta_max)
}
