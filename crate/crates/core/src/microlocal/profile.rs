use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fbi::{generalized_fbi, FbiOptions, FbiQuery, FbiValue};
use super::{Datum1D, MicrolocalError};

/// Weighted magnitudes within this factor of the rounding floor are not fitted.
const FLOOR_MARGIN: f64 = 1e3;
const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WfClass {
    NotInWFA,
    InWFA,
    Inconclusive,
}

/// Decision thresholds for decay fits. The defaults come from the oracle
/// sweep recorded in `CALIBRATION.md`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub eps_min: f64,
    pub eps_flat: f64,
    pub fit_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            eps_min: 0.15,
            eps_flat: 0.08,
            fit_tol: 0.15,
        }
    }
}

/// `n` geometric points on `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo * (r * k as f64).exp() })
        .collect()
}

/// Directions used by default for the pointwise analyticity test.
pub const DEFAULT_DIRECTIONS: [f64; 4] = [-1.0, -0.9, 0.9, 1.0];

/// Sixteen geometric points on `[1, 256]`.
pub fn default_mu_grid() -> Vec<f64> {
    geometric_grid(1.0, 256.0, 16)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOptions {
    pub mu_grid: Vec<f64>,
    /// Radius of the disc of `z` around `x0 − iξ0` over which the weighted
    /// magnitude is maximised.
    pub disc_radius: f64,
    pub ring_points: usize,
    pub thresholds: Thresholds,
    pub fbi: FbiOptions,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            mu_grid: default_mu_grid(),
            disc_radius: 0.1,
            ring_points: 8,
            thresholds: Thresholds::default(),
            fbi: FbiOptions::default(),
        }
    }
}

impl ProfileOptions {
    fn validate(&self) -> Result<(), MicrolocalError> {
        let g = &self.mu_grid;
        if g.len() < 8 {
            return Err(MicrolocalError::InvalidSweep("μ grid needs at least 8 points".into()));
        }
        if g.windows(2).any(|w| !(w[1] > w[0])) || g[0] < 1.0 {
            return Err(MicrolocalError::InvalidSweep("μ grid must increase from μ ≥ 1".into()));
        }
        if g[0] > 1.0 + 1e-12 || g[g.len() - 1] < 256.0 * (1.0 - 1e-12) {
            return Err(MicrolocalError::InvalidSweep("μ grid must span [1, 256]".into()));
        }
        if !(self.disc_radius >= 0.0 && self.disc_radius.is_finite()) {
            return Err(MicrolocalError::InvalidSweep("disc radius must be non-negative".into()));
        }
        Ok(())
    }
}

/// Fitted decay of `sup_z |Tf(z, μ)|·e^{−μ(Im z)²/2}` near `z0 = x0 − iξ0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    pub x0: f64,
    pub xi0: f64,
    pub disc_radius: f64,
    pub mu: Vec<f64>,
    /// `L(μ)`, clamped to the log noise floor where the magnitude underflows.
    pub weighted_log_abs: Vec<f64>,
    pub floor_limited: Vec<bool>,
    /// Grid indices used in the fit.
    pub fit_indices: Vec<usize>,
    /// Minus the slope of `L` against `μ/2`; absent when too few points are usable.
    pub eps_hat: Option<f64>,
    /// Root-mean-square residual of the linear fit.
    pub fit_residual: f64,
    pub classification: WfClass,
}

impl DecayProfile {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "mu,weighted_log_abs")?;
        for (m, l) in self.mu.iter().zip(&self.weighted_log_abs) {
            writeln!(w, "{m:.16e},{l:.16e}")?;
        }
        Ok(())
    }
}

/// Least-squares slope of `ys` against `xs` and the RMS residual.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (my + slope * (x - mx));
            r * r
        })
        .sum();
    (slope, (ss / n).sqrt())
}

/// Picks fit points: the upper half of the grid, else the whole grid, minus
/// floor-limited samples.
pub(crate) fn fit_selection(floor_limited: &[bool]) -> Vec<usize> {
    let n = floor_limited.len();
    let usable = |range: std::ops::Range<usize>| -> Vec<usize> { range.filter(|&k| !floor_limited[k]).collect() };
    let upper = usable(n / 2..n);
    if upper.len() >= MIN_FIT_POINTS {
        return upper;
    }
    usable(0..n)
}

/// `sup` of the weighted magnitude over the disc, as `(log, floor_limited)`.
fn disc_sup(f: &Datum1D, z0: Complex64, mu: f64, opts: &ProfileOptions) -> Result<(f64, bool), MicrolocalError> {
    let mut points = vec![z0];
    if opts.disc_radius > 0.0 {
        for k in 0..opts.ring_points {
            let th = 2.0 * std::f64::consts::PI * k as f64 / opts.ring_points as f64;
            points.push(z0 + Complex64::from_polar(opts.disc_radius, th));
        }
    }
    let mut best: Option<FbiValue> = None;
    let mut floor: f64 = 0.0;
    for z in points {
        let v = generalized_fbi(f, &FbiQuery::new(z, mu), &opts.fbi)?;
        floor = floor.max(v.noise_floor());
        if best.is_none_or(|b| v.weighted.norm() > b.weighted.norm()) {
            best = Some(v);
        }
    }
    let mag = best.map_or(0.0, |b| b.weighted.norm());
    let limited = mag <= FLOOR_MARGIN * floor;
    let shown = if mag > 0.0 { mag } else { floor.max(f64::MIN_POSITIVE) };
    Ok((shown.ln(), limited))
}

pub fn decay_profile(f: &Datum1D, x0: f64, xi0: f64, opts: &ProfileOptions) -> Result<DecayProfile, MicrolocalError> {
    opts.validate()?;
    if xi0 == 0.0 || !xi0.is_finite() {
        return Err(MicrolocalError::InvalidSweep("ξ0 must be nonzero".into()));
    }
    let z0 = Complex64::new(x0, -xi0);
    let samples: Vec<(f64, bool)> = opts
        .mu_grid
        .par_iter()
        .map(|&mu| disc_sup(f, z0, mu, opts))
        .collect::<Result<_, _>>()?;
    let weighted_log_abs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let floor_limited: Vec<bool> = samples.iter().map(|s| s.1).collect();
    let fit_indices = fit_selection(&floor_limited);
    let (eps_hat, fit_residual) = if fit_indices.len() >= MIN_FIT_POINTS {
        let xs: Vec<f64> = fit_indices.iter().map(|&k| 0.5 * opts.mu_grid[k]).collect();
        let ys: Vec<f64> = fit_indices.iter().map(|&k| weighted_log_abs[k]).collect();
        let (slope, res) = linear_fit(&xs, &ys);
        (Some(-slope), res)
    } else {
        (None, f64::NAN)
    };
    let t = &opts.thresholds;
    let classification = match eps_hat {
        Some(e) if e >= t.eps_min && fit_residual <= t.fit_tol => WfClass::NotInWFA,
        Some(e) if e.abs() <= t.eps_flat => WfClass::InWFA,
        _ => WfClass::Inconclusive,
    };
    Ok(DecayProfile {
        x0,
        xi0,
        disc_radius: opts.disc_radius,
        mu: opts.mu_grid.clone(),
        weighted_log_abs,
        floor_limited,
        fit_indices,
        eps_hat,
        fit_residual,
        classification,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnalyticityVerdict {
    Analytic,
    NotAnalytic,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionProfile {
    pub xi: f64,
    pub profile: DecayProfile,
}

/// Analytic near `x0` iff every sampled direction decays; not analytic if
/// any direction is flat. Directions must include both signs with `|ξ| > Λ`.
pub fn analyticity_test(
    f: &Datum1D,
    x0: f64,
    lambda: f64,
    xis: &[f64],
    opts: &ProfileOptions,
) -> Result<(AnalyticityVerdict, Vec<DirectionProfile>), MicrolocalError> {
    if xis.iter().any(|x| !(x.abs() > lambda)) {
        return Err(MicrolocalError::InvalidSweep(format!("every |ξ| must exceed Λ = {lambda}")));
    }
    if !(xis.iter().any(|x| *x > 0.0) && xis.iter().any(|x| *x < 0.0)) {
        return Err(MicrolocalError::InvalidSweep("directions must cover both signs".into()));
    }
    let dirs: Vec<DirectionProfile> = xis
        .iter()
        .map(|&xi| decay_profile(f, x0, xi, opts).map(|profile| DirectionProfile { xi, profile }))
        .collect::<Result<_, _>>()?;
    let classes: Vec<WfClass> = dirs.iter().map(|d| d.profile.classification).collect();
    let verdict = if classes.contains(&WfClass::InWFA) {
        AnalyticityVerdict::NotAnalytic
    } else if classes.iter().all(|c| *c == WfClass::NotInWFA) {
        AnalyticityVerdict::Analytic
    } else {
        AnalyticityVerdict::Inconclusive
    };
    Ok((verdict, dirs))
}
