use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modal::{modal_mode, ModalMode};
use super::norms::{gevrey_norm, sobolev_norm, tapered_window, NormSpec};
use super::IllposednessError;
use crate::gasdyn::{FlowState, GasModel};
use crate::quad::{integrate_line_vec, GaussRule};
use crate::series::ck_solve;

/// `{(t, x) : t ≥ T0, |x − x0|² + δ(t − T0) < r²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRegion {
    pub t0: f64,
    pub x0: f64,
    pub r: f64,
    pub delta: f64,
}

impl GrowthRegion {
    pub fn new(t0: f64, x0: f64, r: f64, delta: f64) -> Result<Self, IllposednessError> {
        if !(r > 0.0 && delta > 0.0 && r.is_finite() && delta.is_finite()) {
            return Err(IllposednessError::InvalidParameter(format!("need r > 0, δ > 0 (r = {r}, δ = {delta})")));
        }
        Ok(GrowthRegion { t0, x0, r, delta })
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        t >= self.t0 && (x - self.x0).powi(2) + self.delta * (t - self.t0) < self.r * self.r
    }

    /// Last time inside the region at offset `y = x − x0`, capped by `horizon`.
    fn t_end(&self, y: f64, horizon: f64) -> f64 {
        ((self.r * self.r - y * y) / self.delta).clamp(0.0, horizon)
    }

    /// `(‖g_1‖, ‖g_2‖)` in `L²` of the region cut at `t − T0 ≤ horizon`.
    pub fn l2_norms(
        &self,
        g: impl Fn(f64, f64) -> [Complex64; 2],
        horizon: f64,
        scale_hint: f64,
    ) -> Result<[f64; 2], IllposednessError> {
        let rule = GaussRule::gl16();
        let inner = |x: f64| -> [Complex64; 2] {
            let te = self.t_end(x - self.x0, horizon);
            let mut acc = [Complex64::new(0.0, 0.0); 2];
            if te <= 0.0 {
                return acc;
            }
            let panels = 8;
            let h = te / panels as f64;
            for p in 0..panels {
                for (t, w) in rule.mapped(p as f64 * h, (p + 1) as f64 * h) {
                    let v = g(self.t0 + t, x);
                    acc[0] += Complex64::new(v[0].norm_sqr() * w, 0.0);
                    acc[1] += Complex64::new(v[1].norm_sqr() * w, 0.0);
                }
            }
            acc
        };
        let (a, b) = (self.x0 - self.r, self.x0 + self.r);
        let rest = self.r * self.r - self.delta * horizon;
        let intervals = if rest > 0.0 {
            let xb = rest.sqrt();
            vec![(a, self.x0 - xb), (self.x0 - xb, self.x0 + xb), (self.x0 + xb, b)]
        } else {
            vec![(a, self.x0), (self.x0, b)]
        };
        let r = integrate_line_vec(inner, &intervals, 1e-12 * scale_hint)?;
        Ok([r[0].value.re.max(0.0).sqrt(), r[1].value.re.max(0.0).sqrt()])
    }
}

/// `r_k = scale·k^{−exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusRule {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for RadiusRule {
    fn default() -> Self {
        RadiusRule {
            scale: 1.0,
            exponent: 0.2,
        }
    }
}

impl RadiusRule {
    pub fn radius(&self, k: u32) -> f64 {
        self.scale * (k as f64).powf(-self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthConfig {
    pub base_state: [f64; 2],
    pub gamma: f64,
    pub c0: f64,
    pub k_list: Vec<u32>,
    pub s: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub c: f64,
    pub delta: f64,
    pub r_rule: RadiusRule,
    pub horizon: f64,
    pub amplitude: f64,
    /// Radius of the ball on the initial line where the data norm is taken.
    pub ball_radius: f64,
    pub x0: f64,
    pub window_points: usize,
    pub beta_max: usize,
    /// Accepted for run bookkeeping; nothing here is random.
    pub seed: Option<u64>,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            base_state: [0.0, 0.0],
            gamma: 1.4,
            c0: 1.0,
            k_list: vec![8, 16, 32, 64],
            s: 2.0,
            alpha: 0.5,
            sigma: 0.4,
            c: 1.0,
            delta: 1.0,
            r_rule: RadiusRule::default(),
            horizon: 0.25,
            amplitude: 1.0,
            ball_radius: 0.5,
            x0: 0.0,
            window_points: 4096,
            beta_max: 400,
            seed: None,
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<(), IllposednessError> {
        let bad = |m: String| Err(IllposednessError::InvalidParameter(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("α = {} must lie in (0, 1)", self.alpha));
        }
        if self.k_list.is_empty() || self.k_list[0] == 0 || self.k_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("k list must be positive and strictly increasing".into());
        }
        if !(self.delta > 0.0 && self.horizon > 0.0 && self.amplitude > 0.0 && self.ball_radius > 0.0) {
            return bad("δ, horizon, amplitude and ball radius must be positive".into());
        }
        if !(self.r_rule.scale > 0.0 && self.r_rule.exponent >= 0.0) {
            return bad("radius rule must have positive scale and non-negative exponent".into());
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0 && self.c > 0.0) {
            return bad(format!("need σ ∈ (0, 1) and c > 0 (σ = {}, c = {})", self.sigma, self.c));
        }
        if !self.window_points.is_power_of_two() || self.window_points < 64 {
            return bad("window_points must be a power of two ≥ 64".into());
        }
        if !self.s.is_finite() {
            return bad("s must be finite".into());
        }
        Ok(())
    }

    pub fn model(&self) -> Result<GasModel, IllposednessError> {
        Ok(GasModel::new(self.gamma, self.c0)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Sobolev,
    Gevrey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GrowthVerdict {
    Increasing,
    NotIncreasing,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRow {
    pub k: u32,
    pub r: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub norm: NormSpec,
    pub alpha: f64,
    /// The data family the rows refer to.
    pub family: String,
    pub mode: ModalMode,
    pub rows: Vec<GrowthRow>,
    pub verdict: GrowthVerdict,
}

impl GrowthReport {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "k,numerator,denominator,ratio")?;
        for r in &self.rows {
            writeln!(w, "{},{:.16e},{:.16e},{:.16e}", r.k, r.numerator, r.denominator, r.ratio)?;
        }
        Ok(())
    }
}

/// Ratio of `‖v‖_{L²(region_k)}` to `‖data‖^α` along the modal family
/// `a·e^{ikx}·w+`, for each `k` in the list.
pub fn growth_experiment(cfg: &GrowthConfig, kind: NormKind) -> Result<GrowthReport, IllposednessError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let mode = modal_mode(FlowState::new(cfg.base_state[0], cfg.base_state[1]), &model)?;
    let norm = match kind {
        NormKind::Sobolev => NormSpec::Sobolev { s: cfg.s },
        NormKind::Gevrey => NormSpec::Gevrey {
            sigma: cfg.sigma,
            c: cfg.c,
            radius: cfg.ball_radius,
        },
    };
    let rows: Vec<GrowthRow> = cfg
        .k_list
        .par_iter()
        .map(|&k| growth_row(cfg, &mode, norm, k))
        .collect::<Result<_, _>>()?;
    let verdict = if rows.len() < 2 {
        GrowthVerdict::Inconclusive
    } else if rows.windows(2).all(|w| w[1].ratio > w[0].ratio) {
        GrowthVerdict::Increasing
    } else {
        GrowthVerdict::NotIncreasing
    };
    Ok(GrowthReport {
        norm,
        alpha: cfg.alpha,
        family: format!(
            "v_k(0, x) = {}·exp(i k x)·w+ about u* = ({}, {}); region radius r_k = {}·k^(-{})",
            cfg.amplitude, cfg.base_state[0], cfg.base_state[1], cfg.r_rule.scale, cfg.r_rule.exponent
        ),
        mode,
        rows,
        verdict,
    })
}

fn growth_row(cfg: &GrowthConfig, mode: &ModalMode, norm: NormSpec, k: u32) -> Result<GrowthRow, IllposednessError> {
    let r = cfg.r_rule.radius(k);
    if !(r > 1e-8) {
        return Err(IllposednessError::DegenerateRegion { k, r });
    }
    let kf = k as f64;
    let region = GrowthRegion::new(0.0, cfg.x0, r, cfg.delta)?;
    let t_top = (r * r / cfg.delta).min(cfg.horizon);
    let hint = cfg.amplitude.powi(2) * (2.0 * kf * mode.growth_rate * t_top).exp() * t_top * r;
    let num = region.l2_norms(|t, x| mode.value(kf, cfg.amplitude, t, x), cfg.horizon, hint)?;
    let numerator = num[0] + num[1];
    let per_component: [f64; 2] = match norm {
        NormSpec::Sobolev { s } => {
            let mut out = [0.0; 2];
            for (j, o) in out.iter_mut().enumerate() {
                let (dx, samples) =
                    tapered_window(|x| mode.value(kf, cfg.amplitude, 0.0, x)[j], cfg.x0, cfg.ball_radius, cfg.window_points);
                *o = sobolev_norm(&samples, dx, s)?;
            }
            out
        }
        NormSpec::Gevrey { sigma, c, .. } => {
            let mut out = [0.0; 2];
            for (j, o) in out.iter_mut().enumerate() {
                let lead = (cfg.amplitude * mode.w_plus[j].norm()).ln();
                // |∂^β (a w_j e^{ikx})| = a|w_j| k^β everywhere on the ball.
                let g = gevrey_norm(|b| Some(lead + b as f64 * kf.ln()), sigma, c, cfg.beta_max)?;
                if g.truncated {
                    return Err(IllposednessError::InvalidParameter(format!(
                        "Gevrey maximum reached β_max = {} at k = {k}",
                        cfg.beta_max
                    )));
                }
                *o = g.value();
            }
            out
        }
    };
    let denominator = (per_component[0] + per_component[1]).powf(cfg.alpha);
    Ok(GrowthRow {
        k,
        r,
        numerator,
        denominator,
        ratio: numerator / denominator,
    })
}

/// Comparison of the nonlinear series solution with `u* + modal` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpotCheck {
    pub k: u32,
    pub amplitude: f64,
    pub t: f64,
    pub x: f64,
    /// `|u_nonlinear − (u* + v)|` at amplitude `a`.
    pub difference: f64,
    /// The same at amplitude `2a`.
    pub difference_doubled: f64,
    /// `log2` of the ratio; 2 for a second-order discrepancy.
    pub order: f64,
}

/// Solves the full system by series from `u* + a·Re(e^{ik(x−x0)}·w+)` and
/// compares with the real part of the linear mode at `(t, x)`, for amplitudes
/// `a` and `2a`.
pub fn nonlinear_spot_check(
    cfg: &GrowthConfig,
    k: u32,
    amplitude: f64,
    t: f64,
    x: f64,
    degree: usize,
) -> Result<SpotCheck, IllposednessError> {
    let model = cfg.model()?;
    let base = FlowState::new(cfg.base_state[0], cfg.base_state[1]);
    let mode = modal_mode(base, &model)?;
    let kf = k as f64;
    let diff = |a: f64| -> Result<f64, IllposednessError> {
        let mut data = [vec![Complex64::new(base.u1, 0.0)], vec![Complex64::new(base.u2, 0.0)]];
        let mut term = Complex64::new(a, 0.0);
        for n in 0..=degree {
            if n > 0 {
                term = term * Complex64::i() * kf / n as f64;
            }
            for j in 0..2 {
                let c = Complex64::new((mode.w_plus[j] * term).re, 0.0);
                if n == 0 {
                    data[j][0] += c;
                } else {
                    data[j].push(c);
                }
            }
        }
        let sol = ck_solve(&data[0], &data[1], &model, 0.0, cfg.x0, degree)?;
        let u = sol.evaluate(t, x);
        let v = mode.value(kf, a, t, x - cfg.x0);
        let d = [u[0] - base.u1 - v[0].re, u[1] - base.u2 - v[1].re];
        Ok((d[0].norm_sqr() + d[1].norm_sqr()).sqrt())
    };
    let d1 = diff(amplitude)?;
    let d2 = diff(2.0 * amplitude)?;
    Ok(SpotCheck {
        k,
        amplitude,
        t,
        x,
        difference: d1,
        difference_doubled: d2,
        order: (d2 / d1).log2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_membership() {
        let g = GrowthRegion::new(0.0, 0.0, 0.5, 1.0).unwrap();
        assert!(g.contains(0.0, 0.4));
        assert!(!g.contains(0.1, 0.4));
        assert!(!g.contains(-0.01, 0.0));
        assert!(GrowthRegion::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn region_l2_of_constant_is_area() {
        // Area of {y² + t < r², 0 ≤ t ≤ H} is 4r³/3 when H ≥ r².
        let g = GrowthRegion::new(0.0, 0.0, 0.6, 1.0).unwrap();
        let one = |_t: f64, _x: f64| [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let n = g.l2_norms(one, 1.0, 1.0).unwrap();
        assert!((n[0] * n[0] - 4.0 * 0.216 / 3.0).abs() < 1e-12);
        // Cut at H = 0.2: ∫ min(r² − y², H) dy over |y| < r.
        let cut = g.l2_norms(one, 0.2, 1.0).unwrap();
        let yb = (0.36f64 - 0.2).sqrt();
        let area = 2.0 * 0.2 * yb + 2.0 * ((0.36 * 0.6 - 0.216 / 3.0) - (0.36 * yb - yb.powi(3) / 3.0));
        assert!((cut[0] * cut[0] - area).abs() < 1e-12);
    }

    #[test]
    fn default_experiment_increases_for_both_norms() {
        let cfg = GrowthConfig::default();
        for kind in [NormKind::Sobolev, NormKind::Gevrey] {
            let r = growth_experiment(&cfg, kind).unwrap();
            assert_eq!(r.verdict, GrowthVerdict::Increasing, "{kind:?}: {:?}", r.rows);
        }
    }

    #[test]
    fn fixed_radius_family_grows_from_small_k() {
        let cfg = GrowthConfig {
            k_list: vec![4, 8, 16, 32],
            r_rule: RadiusRule {
                scale: 1.0,
                exponent: 0.0,
            },
            ..Default::default()
        };
        let r = growth_experiment(&cfg, NormKind::Sobolev).unwrap();
        assert_eq!(r.verdict, GrowthVerdict::Increasing, "{:?}", r.rows);
    }

    #[test]
    fn near_flat_for_tiny_horizon() {
        let cfg = GrowthConfig {
            k_list: vec![1, 2, 3],
            alpha: 0.999,
            s: 0.0,
            horizon: 1e-6,
            ..Default::default()
        };
        let r = growth_experiment(&cfg, NormKind::Sobolev).unwrap();
        for w in r.rows.windows(2) {
            let change = (w[1].ratio / w[0].ratio).ln().abs();
            assert!(change < 0.2, "{:?}", r.rows);
        }
    }

    #[test]
    fn single_k_is_inconclusive() {
        let cfg = GrowthConfig {
            k_list: vec![8],
            ..Default::default()
        };
        assert_eq!(growth_experiment(&cfg, NormKind::Gevrey).unwrap().verdict, GrowthVerdict::Inconclusive);
    }

    #[test]
    fn rejects_bad_alpha_and_k_lists() {
        for cfg in [
            GrowthConfig { alpha: 1.0, ..Default::default() },
            GrowthConfig { k_list: vec![8, 8], ..Default::default() },
            GrowthConfig { window_points: 1000, ..Default::default() },
        ] {
            assert!(growth_experiment(&cfg, NormKind::Sobolev).is_err());
        }
    }

    #[test]
    fn nonlinear_solution_agrees_to_second_order() {
        let cfg = GrowthConfig {
            base_state: [0.0, 0.3],
            ..Default::default()
        };
        let s = nonlinear_spot_check(&cfg, 1, 1e-4, 0.05, 0.05, 16).unwrap();
        assert!(s.difference < 1e-7, "{s:?}");
        assert!((s.order - 2.0).abs() < 0.05, "{s:?}");
    }
}
