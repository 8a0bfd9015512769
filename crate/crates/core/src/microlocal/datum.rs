use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::MicrolocalError;

type Func = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Natural cubic spline.
    Cubic,
}

/// A function on the line with finite effective support, vanishing outside it.
#[derive(Clone)]
pub struct Datum1D {
    name: String,
    support: (f64, f64),
    breaks: Vec<f64>,
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    Function(Func),
    Samples {
        xs: Arc<Vec<f64>>,
        fs: Arc<Vec<f64>>,
        /// Second derivatives of the cubic spline; empty for linear.
        m: Arc<Vec<f64>>,
    },
}

impl fmt::Debug for Datum1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Datum1D")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("breaks", &self.breaks.len())
            .finish()
    }
}

impl Datum1D {
    /// `breaks` lists points where `f` is not smooth; they become panel edges.
    pub fn function(
        name: impl Into<String>,
        support: (f64, f64),
        breaks: Vec<f64>,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self, MicrolocalError> {
        if !(support.0.is_finite() && support.1.is_finite() && support.0 < support.1) {
            return Err(MicrolocalError::InvalidDatum(format!("bad support {support:?}")));
        }
        let mut breaks: Vec<f64> = breaks.into_iter().filter(|b| *b > support.0 && *b < support.1).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Ok(Datum1D {
            name: name.into(),
            support,
            breaks,
            kind: Kind::Function(Arc::new(f)),
        })
    }

    pub fn real_function(
        name: impl Into<String>,
        support: (f64, f64),
        breaks: Vec<f64>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, MicrolocalError> {
        Self::function(name, support, breaks, move |x| Complex64::new(f(x), 0.0))
    }

    pub fn samples(xs: Vec<f64>, fs: Vec<f64>, interp: Interpolation) -> Result<Self, MicrolocalError> {
        if xs.len() != fs.len() || xs.len() < 2 {
            return Err(MicrolocalError::InvalidDatum(
                "need at least two samples and matching lengths".into(),
            ));
        }
        if xs.iter().chain(&fs).any(|v| !v.is_finite()) {
            return Err(MicrolocalError::InvalidDatum("non-finite sample".into()));
        }
        if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(MicrolocalError::InvalidDatum(format!(
                "sample grid not strictly increasing at index {}",
                i + 1
            )));
        }
        let m = match interp {
            Interpolation::Linear => Vec::new(),
            Interpolation::Cubic => natural_spline(&xs, &fs),
        };
        let support = (xs[0], xs[xs.len() - 1]);
        let breaks = xs[1..xs.len() - 1].to_vec();
        Ok(Datum1D {
            name: "samples".into(),
            support,
            breaks,
            kind: Kind::Samples {
                xs: Arc::new(xs),
                fs: Arc::new(fs),
                m: Arc::new(m),
            },
        })
    }

    /// Reads `x,f` rows (a header row is optional).
    pub fn from_csv_path(path: &Path, interp: Interpolation) -> Result<Self, MicrolocalError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| MicrolocalError::Io(format!("{}: {e}", path.display())))?;
        let (mut xs, mut fs) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| MicrolocalError::Io(e.to_string()))?;
            if rec.len() != 2 {
                return Err(MicrolocalError::InvalidDatum(format!("row {}: expected 2 columns", i + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(f)) => {
                    xs.push(x);
                    fs.push(f);
                }
                _ if i == 0 => continue,
                _ => return Err(MicrolocalError::InvalidDatum(format!("row {}: not a number", i + 1))),
            }
        }
        let mut d = Self::samples(xs, fs, interp)?;
        d.name = format!("file:{}", path.display());
        Ok(d)
    }

    /// `gaussian` `e^{−x²/2}` on `[−12, 12]`, `lorentzian` `1/(1+x²)` on
    /// `[−50, 50]`, `abs` `|x|` and `step` `H(x)` on `[−10, 10]`, or `file:<path>`.
    pub fn preset(name: &str, interp: Interpolation) -> Result<Self, MicrolocalError> {
        match name {
            "gaussian" => Self::real_function(name, (-12.0, 12.0), vec![], |x| (-0.5 * x * x).exp()),
            "lorentzian" => Self::real_function(name, (-50.0, 50.0), vec![], |x| 1.0 / (1.0 + x * x)),
            "abs" => Self::real_function(name, (-10.0, 10.0), vec![0.0], f64::abs),
            "step" => Self::real_function(name, (-10.0, 10.0), vec![0.0], |x| if x >= 0.0 { 1.0 } else { 0.0 }),
            _ => match name.strip_prefix("file:") {
                Some(p) => Self::from_csv_path(Path::new(p), interp),
                None => Err(MicrolocalError::UnknownPreset(name.into())),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Interior non-smooth points.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if x < self.support.0 || x > self.support.1 {
            return Complex64::new(0.0, 0.0);
        }
        match &self.kind {
            Kind::Function(f) => f(x),
            Kind::Samples { xs, fs, m } => Complex64::new(interpolate(xs, fs, m, x), 0.0),
        }
    }

    /// `x ↦ f(x − a)`.
    pub fn translated(&self, a: f64) -> Self {
        let inner = self.clone();
        Datum1D {
            name: format!("{}(x-{a})", self.name),
            support: (self.support.0 + a, self.support.1 + a),
            breaks: self.breaks.iter().map(|b| b + a).collect(),
            kind: Kind::Function(Arc::new(move |x| inner.eval(x - a))),
        }
    }

    /// `x ↦ g(x)·f(x)` with extra breakpoints for `g`.
    pub fn multiplied(
        &self,
        extra_breaks: &[f64],
        g: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let inner = self.clone();
        let mut breaks = self.breaks.clone();
        breaks.extend(extra_breaks.iter().filter(|b| **b > self.support.0 && **b < self.support.1));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Datum1D {
            name: self.name.clone(),
            support: self.support,
            breaks,
            kind: Kind::Function(Arc::new(move |x| g(x) * inner.eval(x))),
        }
    }
}

fn natural_spline(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior second derivatives.
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let cc = h1 / 6.0;
        let rhs = (fs[i + 1] - fs[i]) / h1 - (fs[i] - fs[i - 1]) / h0;
        let denom = b - a * c[i - 1];
        c[i] = cc / denom;
        d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m
}

fn interpolate(xs: &[f64], fs: &[f64], m: &[f64], x: f64) -> f64 {
    let j = match xs.partition_point(|v| *v <= x) {
        0 => 0,
        k if k >= xs.len() => xs.len() - 2,
        k => k - 1,
    };
    let (x0, x1) = (xs[j], xs[j + 1]);
    let h = x1 - x0;
    let t = (x - x0) / h;
    let lin = fs[j] * (1.0 - t) + fs[j + 1] * t;
    if m.is_empty() {
        return lin;
    }
    let a = 1.0 - t;
    lin + h * h / 6.0 * ((a * a * a - a) * m[j] + (t * t * t - t) * m[j + 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_evaluate() {
        let g = Datum1D::preset("gaussian", Interpolation::Linear).unwrap();
        assert_eq!(g.eval(0.0).re, 1.0);
        assert_eq!(g.eval(13.0).re, 0.0);
        let a = Datum1D::preset("abs", Interpolation::Linear).unwrap();
        assert_eq!(a.eval(-2.5).re, 2.5);
        assert_eq!(a.breaks(), &[0.0]);
        let s = Datum1D::preset("step", Interpolation::Linear).unwrap();
        assert_eq!((s.eval(-1e-9).re, s.eval(0.0).re), (0.0, 1.0));
        assert!(matches!(
            Datum1D::preset("sinc", Interpolation::Linear),
            Err(MicrolocalError::UnknownPreset(_))
        ));
    }

    #[test]
    fn linear_and_cubic_interpolation() {
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let fs: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let lin = Datum1D::samples(xs.clone(), fs.clone(), Interpolation::Linear).unwrap();
        assert!((lin.eval(0.05).re - 0.005).abs() < 1e-15);
        let fs3: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let cub = Datum1D::samples(xs, fs3, Interpolation::Cubic).unwrap();
        assert!((cub.eval(1.03).re - 1.03f64.sin()).abs() < 1e-5);
        assert_eq!(cub.eval(2.5).re, 0.0);
    }

    #[test]
    fn rejects_unsorted_samples() {
        let r = Datum1D::samples(vec![0.0, 1.0, 1.0], vec![0.0; 3], Interpolation::Linear);
        assert!(matches!(r, Err(MicrolocalError::InvalidDatum(_))));
    }

    #[test]
    fn translation_shifts_breaks() {
        let a = Datum1D::preset("abs", Interpolation::Linear).unwrap().translated(2.0);
        assert_eq!(a.breaks(), &[2.0]);
        assert_eq!(a.eval(3.0).re, 1.0);
        assert_eq!(a.support(), (-8.0, 12.0));
    }
}
