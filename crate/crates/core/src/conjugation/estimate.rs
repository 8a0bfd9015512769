use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConjugationError, CutoffSpec, Fields};
use crate::microlocal::{fit_selection, generalized_fbi, geometric_grid, linear_fit, Datum1D, FbiOptions, FbiQuery};
use crate::series::BivariateSeries;

/// Positivity floor for the fitted decay rate of the conjugated data.
pub const EST_BASIC_EPS_MIN: f64 = 1e-3;

const FLOOR_MARGIN: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstBasicConfig {
    /// `t0 − T0`: how far the localisation looks ahead in time.
    pub t0_offset: f64,
    pub disc_radius: f64,
    pub ring_points: usize,
    pub mu_grid: Vec<f64>,
    pub fbi: FbiOptions,
}

impl Default for EstBasicConfig {
    fn default() -> Self {
        EstBasicConfig {
            t0_offset: 0.1,
            disc_radius: 0.02,
            ring_points: 8,
            mu_grid: geometric_grid(1.0, 2048.0, 16),
            fbi: FbiOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayFlag {
    /// The transform vanished identically.
    ZeroField,
    /// Too few samples above the rounding floor to fit.
    Underflow,
}

/// Decay fit for one component over the μ grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentDecay {
    pub component: usize,
    /// Centre of the sampled disc of `z`.
    pub center: Complex64,
    pub mu: Vec<f64>,
    /// `log|Tf|` at the disc maximiser.
    pub log_abs: Vec<f64>,
    /// `log|Tf| − (μ/2)(Im z)²` at the disc maximiser.
    pub weighted_log_abs: Vec<f64>,
    pub floor_limited: Vec<bool>,
    pub fit_indices: Vec<usize>,
    pub eps_hat: Option<f64>,
    pub fit_residual: f64,
    pub flag: Option<DecayFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstBasicReport {
    pub components: [ComponentDecay; 2],
    pub eps_min: f64,
}

impl EstBasicReport {
    pub fn passes(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.eps_hat.is_some_and(|e| e >= self.eps_min))
    }

    /// Rows `mu, component, log_abs, weighted_log_abs`.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "mu,component,log_abs,weighted_log_abs")?;
        for c in &self.components {
            for k in 0..c.mu.len() {
                writeln!(
                    w,
                    "{:.16e},{},{:.16e},{:.16e}",
                    c.mu[k],
                    c.component + 1,
                    c.log_abs[k],
                    c.weighted_log_abs[k]
                )?;
            }
        }
        Ok(())
    }
}

/// Samples the weighted transform of `f` over a disc around `center` for each
/// μ and fits the decay rate of the disc maximum.
pub fn fit_decay(
    f: &Datum1D,
    component: usize,
    center: Complex64,
    cfg: &EstBasicConfig,
) -> Result<ComponentDecay, ConjugationError> {
    let mut points = vec![center];
    for k in 0..cfg.ring_points {
        let th = 2.0 * std::f64::consts::PI * k as f64 / cfg.ring_points as f64;
        points.push(center + Complex64::from_polar(cfg.disc_radius, th));
    }
    // (weighted magnitude, log weight, floor)
    let samples: Vec<(f64, f64, f64)> = cfg
        .mu_grid
        .par_iter()
        .map(|&mu| {
            let mut best = (0.0, 0.0);
            let mut floor: f64 = 0.0;
            for &z in &points {
                let v = generalized_fbi(f, &FbiQuery::new(z, mu), &cfg.fbi)?;
                floor = floor.max(v.noise_floor());
                if v.weighted.norm() > best.0 {
                    best = (v.weighted.norm(), v.log_weight);
                }
            }
            Ok((best.0, best.1, floor))
        })
        .collect::<Result<_, crate::microlocal::MicrolocalError>>()?;

    let zero = samples.iter().all(|s| s.0 == 0.0);
    let floor_limited: Vec<bool> = samples.iter().map(|s| s.0 <= FLOOR_MARGIN * s.2).collect();
    let weighted_log_abs: Vec<f64> = samples
        .iter()
        .map(|s| if s.0 > 0.0 { s.0.ln() } else { f64::NEG_INFINITY })
        .collect();
    let log_abs = weighted_log_abs.iter().zip(&samples).map(|(l, s)| l + s.1).collect();
    let mut out = ComponentDecay {
        component,
        center,
        mu: cfg.mu_grid.clone(),
        log_abs,
        weighted_log_abs,
        floor_limited,
        fit_indices: Vec::new(),
        eps_hat: None,
        fit_residual: f64::NAN,
        flag: None,
    };
    if zero {
        out.flag = Some(DecayFlag::ZeroField);
        return Ok(out);
    }
    out.fit_indices = fit_selection(&out.floor_limited);
    if out.fit_indices.len() < 3 {
        out.flag = Some(DecayFlag::Underflow);
        return Ok(out);
    }
    let xs: Vec<f64> = out.fit_indices.iter().map(|&k| 0.5 * cfg.mu_grid[k]).collect();
    let ys: Vec<f64> = out.fit_indices.iter().map(|&k| out.weighted_log_abs[k]).collect();
    let (slope, res) = linear_fit(&xs, &ys);
    out.eps_hat = Some(-slope);
    out.fit_residual = res;
    Ok(out)
}

/// `v = B·S⁻¹·u` on the initial slice, as polynomials in `x − x0`.
fn conjugated_initial_data(fields: &Fields) -> [Vec<Complex64>; 2] {
    let u = [fields.solution.u1.clone(), fields.solution.u2.clone()];
    let w = fields.diag.s_inv.apply(&u);
    let v: [BivariateSeries; 2] = fields.conjugator.b.apply(&w);
    v.map(|s| s.t_slice(0))
}

fn horner(c: &[Complex64], y: f64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * y + a)
}

/// Fits the FBI decay of `χ·(B S⁻¹ u)_i(T0, ·)` near
/// `x0 − i(t0 − T0)·Im λ_i(T0, x0)` for both components.
pub fn est_basic_check(fields: &Fields, chi: &CutoffSpec, cfg: &EstBasicConfig) -> Result<EstBasicReport, ConjugationError> {
    if !(cfg.t0_offset > 0.0 && cfg.disc_radius >= 0.0 && cfg.mu_grid.len() >= 3) {
        return Err(ConjugationError::InvalidFrame(
            "est_basic needs t0 offset > 0, disc radius ≥ 0 and at least 3 μ values".into(),
        ));
    }
    let frame = &fields.frame;
    let data = conjugated_initial_data(fields);
    let lambda0 = fields.sample(frame.t0, frame.x0).lambda;
    let chi = *chi;
    let (lo, hi) = (chi.center - chi.radius, chi.center + chi.radius);
    let fit = |i: usize| -> Result<ComponentDecay, ConjugationError> {
        let coeffs = data[i].clone();
        let x0 = frame.x0;
        let f = Datum1D::function(format!("v{}", i + 1), (lo, hi), chi.breakpoints().to_vec(), move |x| {
            horner(&coeffs, x - x0) * chi.value(x)
        })
        .map_err(|e| ConjugationError::InvalidFrame(e.to_string()))?;
        let center = Complex64::new(frame.x0, -cfg.t0_offset * lambda0[i].im);
        fit_decay(&f, i, center, cfg)
    };
    Ok(EstBasicReport {
        components: [fit(0)?, fit(1)?],
        eps_min: EST_BASIC_EPS_MIN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugation::fields::constant_data;
    use crate::conjugation::ProblemFrame;
    use crate::gasdyn::GasModel;
    use crate::mat2::CMat2;
    use crate::series::ck_solve;

    fn fields() -> Fields {
        let model = GasModel::default();
        let c = |v: f64| Complex64::new(v, 0.0);
        let sol = ck_solve(&[c(0.0), c(0.1)], &[c(0.3), c(0.2)], &model, 0.0, 0.0, 9).unwrap();
        let frame = ProblemFrame::new(0.0, 0.0, 0.12, 1.1, 0.5, 0.5, model).unwrap();
        Fields::build(&sol, &frame, &constant_data(&CMat2::identity())).unwrap()
    }

    #[test]
    fn gaussian_injection_matches_closed_form_rate() {
        let cfg = EstBasicConfig::default();
        let f = Datum1D::real_function("g", (-12.0, 12.0), vec![], |x| (-0.5 * x * x).exp()).unwrap();
        let center = Complex64::new(0.0, -0.1);
        let got = fit_decay(&f, 0, center, &cfg).unwrap();
        // Completed square: Tf = √(2π/(μ+1))·e^{−μz²/(2(μ+1))}.
        let exact = |z: Complex64, mu: f64| {
            ((2.0 * std::f64::consts::PI / (mu + 1.0)).sqrt() * (-(z * z) * mu / (2.0 * (mu + 1.0))).exp()).norm().ln()
                - 0.5 * mu * z.im * z.im
        };
        let mut ring = vec![center];
        for k in 0..cfg.ring_points {
            let th = 2.0 * std::f64::consts::PI * k as f64 / cfg.ring_points as f64;
            ring.push(center + Complex64::from_polar(cfg.disc_radius, th));
        }
        let xs: Vec<f64> = got.fit_indices.iter().map(|&k| 0.5 * cfg.mu_grid[k]).collect();
        let ys: Vec<f64> = got
            .fit_indices
            .iter()
            .map(|&k| ring.iter().map(|&z| exact(z, cfg.mu_grid[k])).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let expected = -linear_fit(&xs, &ys).0;
        let eps = got.eps_hat.unwrap();
        assert!((eps - expected).abs() <= 0.05 * expected, "{eps} vs {expected}");
    }

    #[test]
    fn zero_field_is_flagged() {
        let f = Datum1D::real_function("zero", (-1.0, 1.0), vec![], |_| 0.0).unwrap();
        let r = fit_decay(&f, 0, Complex64::new(0.0, -0.1), &EstBasicConfig::default()).unwrap();
        assert_eq!(r.flag, Some(DecayFlag::ZeroField));
        assert!(r.eps_hat.is_none());
    }

    #[test]
    fn manufactured_run_decays() {
        let f = fields();
        let chi = CutoffSpec::new(0.0, 0.5);
        let r = est_basic_check(&f, &chi, &EstBasicConfig::default()).unwrap();
        for c in &r.components {
            let eps = c.eps_hat.unwrap();
            assert!(eps >= EST_BASIC_EPS_MIN, "component {}: {eps}", c.component);
            assert!(c.flag.is_none());
        }
        assert!(r.passes());
        // Localisation centres sit on opposite sides of the real axis.
        assert!(r.components[0].center.im < 0.0 && r.components[1].center.im > 0.0);
    }

    #[test]
    fn csv_rows() {
        let f = Datum1D::real_function("g", (-12.0, 12.0), vec![], |x| (-0.5 * x * x).exp()).unwrap();
        let c = fit_decay(&f, 0, Complex64::new(0.0, -0.1), &EstBasicConfig::default()).unwrap();
        let r = EstBasicReport {
            components: [c.clone(), ComponentDecay { component: 1, ..c }],
            eps_min: EST_BASIC_EPS_MIN,
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 33);
    }
}
