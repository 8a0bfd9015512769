use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use transonic::conjugation::{run_pipeline, PipelineConfig};
use transonic::gasdyn::{sonic_line, FlowClass, GasModel, VelocityField, DEFAULT_SONIC_TOL};
use transonic::illposedness::{gevrey_norm_series, growth_experiment, GevreyNorm, GrowthConfig, GrowthReport, GrowthVerdict, NormKind};
use transonic::microlocal::{
    analyticity_test, geometric_grid, AnalyticityVerdict, Datum1D, FbiOptions, Interpolation, ProfileOptions,
    Thresholds, WfClass, DEFAULT_DIRECTIONS,
};
use transonic::series::{ck_solve, residual, BivariateSeries, SeriesJson};

use crate::error::{CliError, RowIssue};
use crate::output::{to_json, OutDir};

/// What a command hands back to `main`: the document echoed to stdout and
/// whether the verdict was inconclusive.
pub struct Outcome {
    pub summary: String,
    pub inconclusive: bool,
}

/// Reads a JSON config, or returns the defaults when no path is given.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Applies a flag override when present.
pub fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

// classify

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub field: Option<PathBuf>,
    pub gamma: f64,
    pub c0: f64,
    pub tol: f64,
    pub seed: Option<u64>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            field: None,
            gamma: 1.4,
            c0: 1.0,
            tol: DEFAULT_SONIC_TOL,
            seed: None,
        }
    }
}

#[derive(Debug, Default, Serialize)]
struct RegionCounts {
    #[serde(rename = "E")]
    elliptic: usize,
    #[serde(rename = "H")]
    hyperbolic: usize,
    #[serde(rename = "S")]
    sonic: usize,
}

#[derive(Serialize)]
struct ClassifySummary<'a> {
    config: &'a ClassifyConfig,
    nodes: usize,
    counts: RegionCounts,
    sonic_crossings: usize,
    files: Vec<String>,
}

pub fn classify(cfg: &ClassifyConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let path = cfg
        .field
        .as_deref()
        .ok_or_else(|| CliError::Usage("classify needs a field CSV".into()))?;
    let model = GasModel::new(cfg.gamma, cfg.c0)?;
    let field = VelocityField::from_csv_path(path)?;
    let nx = field.xs().len();

    let mut classes = Vec::with_capacity(nx * field.ts().len());
    let mut issues = Vec::new();
    for (it, &t) in field.ts().iter().enumerate() {
        for (ix, &x) in field.xs().iter().enumerate() {
            match model.classify(&field.state(ix, it), cfg.tol) {
                Ok(c) => classes.push(c),
                Err(e) => issues.push(RowIssue {
                    row: field.source_row(ix, it),
                    x,
                    t,
                    message: e.to_string(),
                }),
            }
        }
    }
    if !issues.is_empty() {
        return Err(CliError::Inadmissible(issues));
    }

    let mut counts = RegionCounts::default();
    let mut table = Vec::new();
    writeln!(table, "x,T,u1,u2,mach,class").unwrap();
    for (k, (x, t, s)) in field.nodes().enumerate() {
        let class = classes[k];
        match class {
            FlowClass::Elliptic => counts.elliptic += 1,
            FlowClass::Hyperbolic => counts.hyperbolic += 1,
            FlowClass::Sonic => counts.sonic += 1,
        }
        let mach = model.mach(&s)?;
        writeln!(table, "{x:.16e},{t:.16e},{:.16e},{:.16e},{mach:.16e},{}", s.u1, s.u2, class.code()).unwrap();
    }

    let crossings = sonic_line(&field, &model, cfg.tol)?;
    let q_star = model.sonic_speed();
    let mut line = Vec::new();
    writeln!(line, "x_a,T_a,x_b,T_b,q_a,q_b,x_sonic,T_sonic").unwrap();
    for c in &crossings {
        let (xa, ta) = (field.xs()[c.a.0], field.ts()[c.a.1]);
        let (xb, tb) = (field.xs()[c.b.0], field.ts()[c.b.1]);
        let s = (q_star - c.q_a) / (c.q_b - c.q_a);
        writeln!(
            line,
            "{xa:.16e},{ta:.16e},{xb:.16e},{tb:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            c.q_a,
            c.q_b,
            xa + s * (xb - xa),
            ta + s * (tb - ta)
        )
        .unwrap();
    }

    let files = vec![out.write("classification.csv", &table)?, out.write("sonic_line.csv", &line)?];
    let summary = to_json(&ClassifySummary {
        config: cfg,
        nodes: classes.len(),
        counts,
        sonic_crossings: crossings.len(),
        files,
    });
    out.write("classify_summary.json", summary.as_bytes())?;
    Ok(Outcome {
        summary,
        inconclusive: false,
    })
}

// fbi

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FbiConfig {
    /// Preset name or `file:<path>` with `x,f` rows.
    pub datum: String,
    pub interpolation: Interpolation,
    pub x0: f64,
    pub xi: Vec<f64>,
    /// Directions must satisfy `|ξ| > lambda`.
    pub lambda: f64,
    pub mu_max: f64,
    pub mu_points: usize,
    pub disc_radius: f64,
    pub ring_points: usize,
    pub thresholds: Thresholds,
    pub fbi: FbiOptions,
    pub seed: Option<u64>,
}

impl Default for FbiConfig {
    fn default() -> Self {
        let p = ProfileOptions::default();
        FbiConfig {
            datum: "gaussian".into(),
            interpolation: Interpolation::Linear,
            x0: 0.0,
            xi: DEFAULT_DIRECTIONS.to_vec(),
            lambda: 0.5,
            mu_max: 256.0,
            mu_points: p.mu_grid.len(),
            disc_radius: p.disc_radius,
            ring_points: p.ring_points,
            thresholds: p.thresholds,
            fbi: p.fbi,
            seed: None,
        }
    }
}

#[derive(Serialize)]
struct DirectionSummary {
    xi: f64,
    eps_hat: Option<f64>,
    fit_residual: f64,
    classification: WfClass,
    file: String,
}

#[derive(Serialize)]
struct FbiSummary<'a> {
    config: &'a FbiConfig,
    mu_grid: Vec<f64>,
    verdict: AnalyticityVerdict,
    directions: Vec<DirectionSummary>,
}

pub fn fbi(cfg: &FbiConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let datum = Datum1D::preset(&cfg.datum, cfg.interpolation)?;
    if !(cfg.mu_max >= 256.0 && cfg.mu_max.is_finite()) {
        return Err(CliError::Usage(format!("mu_max = {} must be at least 256", cfg.mu_max)));
    }
    let opts = ProfileOptions {
        mu_grid: geometric_grid(1.0, cfg.mu_max, cfg.mu_points),
        disc_radius: cfg.disc_radius,
        ring_points: cfg.ring_points,
        thresholds: cfg.thresholds,
        fbi: cfg.fbi,
    };
    let (verdict, dirs) = analyticity_test(&datum, cfg.x0, cfg.lambda, &cfg.xi, &opts)?;
    let mut directions = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        let file = out.write_with(&format!("decay_profile_{i}.csv"), |w| d.profile.write_csv(w))?;
        directions.push(DirectionSummary {
            xi: d.xi,
            eps_hat: d.profile.eps_hat,
            fit_residual: d.profile.fit_residual,
            classification: d.profile.classification,
            file,
        });
    }
    let summary = to_json(&FbiSummary {
        config: cfg,
        mu_grid: opts.mu_grid.clone(),
        verdict,
        directions,
    });
    out.write("fbi_verdict.json", summary.as_bytes())?;
    Ok(Outcome {
        summary,
        inconclusive: verdict == AnalyticityVerdict::Inconclusive,
    })
}

// pipeline

pub fn pipeline(cfg: &PipelineConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let report = run_pipeline(cfg)?;
    out.write_with("est_basic.csv", |w| report.est_basic.write_csv(w))?;
    let summary = to_json(&report);
    out.write("pipeline_report.json", summary.as_bytes())?;
    Ok(Outcome {
        summary,
        inconclusive: !report.passes,
    })
}

// growth

#[derive(Serialize)]
struct GrowthSummary<'a> {
    config: &'a GrowthConfig,
    sobolev: GrowthReport,
    gevrey: GrowthReport,
    files: Vec<String>,
}

pub fn growth(cfg: &GrowthConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let sobolev = growth_experiment(cfg, NormKind::Sobolev)?;
    let gevrey = growth_experiment(cfg, NormKind::Gevrey)?;
    let files = vec![
        out.write_with("growth_sobolev.csv", |w| sobolev.write_csv(w))?,
        out.write_with("growth_gevrey.csv", |w| gevrey.write_csv(w))?,
    ];
    let inconclusive = [&sobolev, &gevrey]
        .iter()
        .any(|r| r.verdict == GrowthVerdict::Inconclusive);
    let summary = to_json(&GrowthSummary {
        config: cfg,
        sobolev,
        gevrey,
        files,
    });
    out.write("growth_report.json", summary.as_bytes())?;
    Ok(Outcome { summary, inconclusive })
}

// ck-solve

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CkConfig {
    pub gamma: f64,
    pub c0: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub x0: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    /// Taylor coefficients of `u1(T0, ·)` in powers of `x − x0`.
    pub data_u1: Vec<f64>,
    pub data_u2: Vec<f64>,
    pub seed: Option<u64>,
}

impl Default for CkConfig {
    fn default() -> Self {
        CkConfig {
            gamma: 1.4,
            c0: 1.0,
            t0: 0.0,
            x0: 0.0,
            degree: 12,
            data_u1: vec![0.0, 0.1],
            data_u2: vec![0.3, 0.2],
            seed: None,
        }
    }
}

#[derive(Serialize)]
struct CkSummary<'a> {
    config: &'a CkConfig,
    /// Largest residual coefficient through degree `N − 1`.
    max_residual: f64,
    growth_warning: bool,
    u1: SeriesJson,
    u2: SeriesJson,
}

pub fn ck(cfg: &CkConfig, out: &OutDir) -> Result<Outcome, CliError> {
    if cfg.degree < 1 {
        return Err(CliError::Usage("N must be at least 1".into()));
    }
    let model = GasModel::new(cfg.gamma, cfg.c0)?;
    let c = |v: &f64| Complex64::new(*v, 0.0);
    let d1: Vec<Complex64> = cfg.data_u1.iter().map(c).collect();
    let d2: Vec<Complex64> = cfg.data_u2.iter().map(c).collect();
    let sol = ck_solve(&d1, &d2, &model, cfg.t0, cfg.x0, cfg.degree)?;
    let max_residual = residual(&sol)?
        .iter()
        .map(|s| s.max_abs_through(cfg.degree - 1))
        .fold(0.0, f64::max);
    let summary = to_json(&CkSummary {
        config: cfg,
        max_residual,
        growth_warning: sol.growth_warning,
        u1: sol.u1.to_json(),
        u2: sol.u2.to_json(),
    });
    out.write("ck_solution.json", summary.as_bytes())?;
    Ok(Outcome {
        summary,
        inconclusive: false,
    })
}

// gevrey-norm

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GevreyConfig {
    /// A series document, or a `ck-solve` output from which `component` is taken.
    pub series: Option<PathBuf>,
    pub component: String,
    /// Defaults to the expansion point of the series.
    pub center: Option<f64>,
    pub radius: f64,
    pub sigma: f64,
    pub c: f64,
    pub beta_max: usize,
    pub seed: Option<u64>,
}

impl Default for GevreyConfig {
    fn default() -> Self {
        GevreyConfig {
            series: None,
            component: "u1".into(),
            center: None,
            radius: 0.25,
            sigma: 0.4,
            c: 1.0,
            beta_max: 400,
            seed: None,
        }
    }
}

#[derive(Serialize)]
struct GevreySummary<'a> {
    config: &'a GevreyConfig,
    center: f64,
    log_value: f64,
    value: f64,
    beta: usize,
    truncated: bool,
}

fn read_series(path: &Path, component: &str) -> Result<BivariateSeries, CliError> {
    let bad = |message: String| CliError::Config {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if doc.get("coeffs").is_none() {
        doc = doc
            .get_mut(component)
            .map(serde_json::Value::take)
            .ok_or_else(|| bad(format!("no series and no component `{component}`")))?;
    }
    let j: SeriesJson = serde_json::from_value(doc).map_err(|e| bad(e.to_string()))?;
    Ok(BivariateSeries::from_json(&j)?)
}

pub fn gevrey(cfg: &GevreyConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let path = cfg
        .series
        .as_deref()
        .ok_or_else(|| CliError::Usage("gevrey-norm needs a series file".into()))?;
    let f = read_series(path, &cfg.component)?;
    let center = cfg.center.unwrap_or(f.x0());
    let GevreyNorm {
        log_value,
        beta,
        truncated,
    } = gevrey_norm_series(&f, center, cfg.radius, cfg.sigma, cfg.c, cfg.beta_max)?;
    let summary = to_json(&GevreySummary {
        config: cfg,
        center,
        log_value,
        value: log_value.exp(),
        beta,
        truncated,
    });
    out.write("gevrey_norm.json", summary.as_bytes())?;
    Ok(Outcome {
        summary,
        inconclusive: truncated,
    })
}
