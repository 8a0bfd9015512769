//! Steady isentropic irrotational flow in two dimensions.
//!
//! The pressure law is polytropic, `p = ρ^γ / γ`, normalized so that the
//! stagnation density is one. Bernoulli's law then gives every thermodynamic
//! quantity in closed form as a function of the flow speed `q`:
//!
//! ```text
//! ρ(q)  = (1 − (γ−1) q² / (2 c0²))^(1/(γ−1))
//! c²(q) = c0² − (γ−1) q² / 2
//! ```
//!
//! Taking `T = x2` as the evolution variable and `x = x1` as the space
//! variable, the steady system becomes `∂_T u + A(u) ∂_x u = 0` with the flux
//! matrix returned by [`GasModel::flux_matrix`].

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat2::Mat2;

/// Default absolute tolerance on `q² − c²`, in units of `c0²`.
pub const DEFAULT_SONIC_TOL: f64 = 1e-9;

/// Relative tolerance under which `c² − u1²` is treated as zero.
const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GasError {
    #[error("invalid gas model: gamma = {gamma}, c0 = {c0} (need gamma > 1, c0 > 0)")]
    InvalidModel { gamma: f64, c0: f64 },
    #[error("speed {q} reaches the vacuum limit q_max = {q_max}")]
    VacuumLimit { q: f64, q_max: f64 },
    #[error("non-finite velocity component ({u1}, {u2})")]
    NonFinite { u1: f64, u2: f64 },
    #[error("time direction is characteristic: |c² − u1²| = {gap:e}")]
    DegenerateDirection { gap: f64 },
    #[error("velocity field: {0}")]
    Field(String),
    #[error("velocity field row {row}: {message}")]
    Row { row: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasModel {
    gamma: f64,
    c0: f64,
}

impl Default for GasModel {
    fn default() -> Self {
        GasModel { gamma: 1.4, c0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub u1: f64,
    pub u2: f64,
}

impl FlowState {
    pub fn new(u1: f64, u2: f64) -> Self {
        FlowState { u1, u2 }
    }

    pub fn speed_sq(&self) -> f64 {
        self.u1 * self.u1 + self.u2 * self.u2
    }

    pub fn speed(&self) -> f64 {
        self.u1.hypot(self.u2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowClass {
    Elliptic,
    Hyperbolic,
    Sonic,
}

impl FlowClass {
    pub fn code(self) -> char {
        match self {
            FlowClass::Elliptic => 'E',
            FlowClass::Hyperbolic => 'H',
            FlowClass::Sonic => 'S',
        }
    }
}

impl fmt::Display for FlowClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl GasModel {
    pub fn new(gamma: f64, c0: f64) -> Result<Self, GasError> {
        if !(gamma > 1.0 && gamma.is_finite() && c0 > 0.0 && c0.is_finite()) {
            return Err(GasError::InvalidModel { gamma, c0 });
        }
        Ok(GasModel { gamma, c0 })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Speed at which the density and sound speed vanish.
    pub fn q_max(&self) -> f64 {
        self.c0 * (2.0 / (self.gamma - 1.0)).sqrt()
    }

    /// Speed at which `q = c`.
    pub fn sonic_speed(&self) -> f64 {
        self.c0 * (2.0 / (self.gamma + 1.0)).sqrt()
    }

    fn check_speed(&self, q: f64) -> Result<(), GasError> {
        let q_max = self.q_max();
        if !(q.is_finite() && q.abs() < q_max) {
            return Err(GasError::VacuumLimit { q, q_max });
        }
        Ok(())
    }

    pub fn check_state(&self, state: &FlowState) -> Result<(), GasError> {
        if !(state.u1.is_finite() && state.u2.is_finite()) {
            return Err(GasError::NonFinite {
                u1: state.u1,
                u2: state.u2,
            });
        }
        self.check_speed(state.speed())
    }

    pub fn density(&self, q: f64) -> Result<f64, GasError> {
        self.check_speed(q)?;
        let base = 1.0 - (self.gamma - 1.0) * q * q / (2.0 * self.c0 * self.c0);
        Ok(base.powf(1.0 / (self.gamma - 1.0)))
    }

    /// `c²` as a function of `q²`; valid for any input, used by the series code.
    pub fn sound_speed_sq_of(&self, q_sq: f64) -> f64 {
        self.c0 * self.c0 - 0.5 * (self.gamma - 1.0) * q_sq
    }

    pub fn sound_speed_sq(&self, state: &FlowState) -> Result<f64, GasError> {
        self.check_state(state)?;
        Ok(self.sound_speed_sq_of(state.speed_sq()))
    }

    pub fn sound_speed(&self, state: &FlowState) -> Result<f64, GasError> {
        self.sound_speed_sq(state).map(f64::sqrt)
    }

    pub fn mach(&self, state: &FlowState) -> Result<f64, GasError> {
        let c = self.sound_speed(state)?;
        Ok(state.speed() / c)
    }

    /// Flux matrix `A(u)` of the first-order system in the `(T, x)` frame.
    pub fn flux_matrix(&self, state: &FlowState) -> Result<Mat2<f64>, GasError> {
        let c2 = self.sound_speed_sq(state)?;
        flux_matrix_with_sound_speed(state, c2, DEGENERATE_TOL * self.c0 * self.c0)
    }

    pub fn classify(&self, state: &FlowState, tol: f64) -> Result<FlowClass, GasError> {
        let c2 = self.sound_speed_sq(state)?;
        let gap = state.speed_sq() - c2;
        let band = tol * self.c0 * self.c0;
        Ok(if gap < -band {
            FlowClass::Elliptic
        } else if gap > band {
            FlowClass::Hyperbolic
        } else {
            FlowClass::Sonic
        })
    }
}

/// `A(u)` for a prescribed local `c²`; errors when `|c² − u1²| ≤ tol`.
pub fn flux_matrix_with_sound_speed(state: &FlowState, c2: f64, tol: f64) -> Result<Mat2<f64>, GasError> {
    let (u1, u2) = (state.u1, state.u2);
    let den = c2 - u1 * u1;
    if den.abs() <= tol {
        return Err(GasError::DegenerateDirection { gap: den.abs() });
    }
    Ok(Mat2::new(-2.0 * u1 * u2 / den, (c2 - u2 * u2) / den, -1.0, 0.0))
}

/// Velocity samples on a rectangular `(x, T)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    xs: Vec<f64>,
    ts: Vec<f64>,
    /// Indexed `[it * xs.len() + ix]`.
    states: Vec<FlowState>,
    /// CSV line each node was read from, same indexing.
    source_rows: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
struct FieldRow {
    x: f64,
    #[serde(rename = "T")]
    t: f64,
    u1: f64,
    u2: f64,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl VelocityField {
    pub fn new(xs: Vec<f64>, ts: Vec<f64>, states: Vec<FlowState>) -> Result<Self, GasError> {
        if xs.len() < 2 || ts.len() < 2 {
            return Err(GasError::Field(format!(
                "need at least 2 nodes per axis, got {}×{}",
                xs.len(),
                ts.len()
            )));
        }
        if !strictly_increasing(&xs) || !strictly_increasing(&ts) {
            return Err(GasError::Field("grid axes must be strictly increasing".into()));
        }
        if states.len() != xs.len() * ts.len() {
            return Err(GasError::Field(format!(
                "expected {} states, got {}",
                xs.len() * ts.len(),
                states.len()
            )));
        }
        Ok(VelocityField {
            xs,
            ts,
            states,
            source_rows: None,
        })
    }

    /// Builds a field by sampling `f(x, T)` on the tensor grid.
    pub fn from_fn(xs: Vec<f64>, ts: Vec<f64>, f: impl Fn(f64, f64) -> FlowState) -> Result<Self, GasError> {
        let states = ts
            .iter()
            .flat_map(|&t| xs.iter().map(move |&x| (x, t)))
            .map(|(x, t)| f(x, t))
            .collect();
        Self::new(xs, ts, states)
    }

    /// Reads the `x,T,u1,u2` CSV layout. Rows may come in any order but must
    /// cover the full tensor grid exactly once.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self, GasError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| GasError::Field(format!("unreadable header: {e}")))?
            .clone();
        let expected = ["x", "T", "u1", "u2"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(GasError::Field(format!(
                "header must be `x,T,u1,u2`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<FieldRow>().enumerate() {
            // header is line 1
            let row = i + 2;
            let rec = rec.map_err(|e| GasError::Row {
                row,
                message: e.to_string(),
            })?;
            if ![rec.x, rec.t, rec.u1, rec.u2].iter().all(|v| v.is_finite()) {
                return Err(GasError::Row {
                    row,
                    message: "non-finite value".into(),
                });
            }
            rows.push((row, rec));
        }
        let mut xs: Vec<f64> = rows.iter().map(|(_, r)| r.x).collect();
        let mut ts: Vec<f64> = rows.iter().map(|(_, r)| r.t).collect();
        for v in [&mut xs, &mut ts] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let (nx, nt) = (xs.len(), ts.len());
        let mut states: Vec<Option<FlowState>> = vec![None; nx * nt];
        let mut source_rows = vec![0; nx * nt];
        for (row, r) in &rows {
            let ix = xs.binary_search_by(|v| v.total_cmp(&r.x)).expect("x present");
            let it = ts.binary_search_by(|v| v.total_cmp(&r.t)).expect("T present");
            let slot = &mut states[it * nx + ix];
            if slot.is_some() {
                return Err(GasError::Row {
                    row: *row,
                    message: format!("duplicate node (x={}, T={})", r.x, r.t),
                });
            }
            *slot = Some(FlowState::new(r.u1, r.u2));
            source_rows[it * nx + ix] = *row;
        }
        if states.iter().any(Option::is_none) {
            return Err(GasError::Field(format!(
                "rows do not cover the {nx}×{nt} grid"
            )));
        }
        let mut field = Self::new(xs, ts, states.into_iter().map(Option::unwrap).collect())?;
        field.source_rows = Some(source_rows);
        Ok(field)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, GasError> {
        let file = std::fs::File::open(path)
            .map_err(|e| GasError::Field(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn state(&self, ix: usize, it: usize) -> FlowState {
        self.states[it * self.xs.len() + ix]
    }

    /// CSV line of a node, when the field was read from CSV.
    pub fn source_row(&self, ix: usize, it: usize) -> Option<usize> {
        self.source_rows.as_ref().map(|r| r[it * self.xs.len() + ix])
    }

    /// Nodes in row-major order (T outer, x inner).
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, FlowState)> + '_ {
        self.ts.iter().enumerate().flat_map(move |(it, &t)| {
            self.xs
                .iter()
                .enumerate()
                .map(move |(ix, &x)| (x, t, self.state(ix, it)))
        })
    }

    /// Classifies every node, row-major. Inadmissible nodes are reported with
    /// their grid position.
    pub fn classify(&self, model: &GasModel, tol: f64) -> Result<Vec<FlowClass>, GasError> {
        self.nodes()
            .map(|(x, t, s)| {
                model.classify(&s, tol).map_err(|e| {
                    GasError::Field(format!("node (x={x}, T={t}): {e}"))
                })
            })
            .collect()
    }
}

/// A grid edge whose endpoints lie strictly on opposite sides of the sonic line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SonicCrossing {
    /// `(ix, it)` of the first endpoint.
    pub a: (usize, usize),
    /// `(ix, it)` of the second endpoint.
    pub b: (usize, usize),
    pub q_a: f64,
    pub q_b: f64,
}

impl SonicCrossing {
    pub fn is_horizontal(&self) -> bool {
        self.a.1 == self.b.1
    }
}

/// Every edge (along x or along T) between an elliptic and a hyperbolic node.
pub fn sonic_line(field: &VelocityField, model: &GasModel, tol: f64) -> Result<Vec<SonicCrossing>, GasError> {
    let classes = field.classify(model, tol)?;
    let nx = field.xs.len();
    let class = |ix: usize, it: usize| classes[it * nx + ix];
    let opposite = |a: FlowClass, b: FlowClass| {
        matches!(
            (a, b),
            (FlowClass::Elliptic, FlowClass::Hyperbolic) | (FlowClass::Hyperbolic, FlowClass::Elliptic)
        )
    };
    let mut out = Vec::new();
    for it in 0..field.ts.len() {
        for ix in 0..nx {
            let here = class(ix, it);
            let mut push = |b: (usize, usize)| {
                out.push(SonicCrossing {
                    a: (ix, it),
                    b,
                    q_a: field.state(ix, it).speed(),
                    q_b: field.state(b.0, b.1).speed(),
                })
            };
            if ix + 1 < nx && opposite(here, class(ix + 1, it)) {
                push((ix + 1, it));
            }
            if it + 1 < field.ts.len() && opposite(here, class(ix, it + 1)) {
                push((ix, it + 1));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn air() -> GasModel {
        GasModel::new(1.4, 1.0).unwrap()
    }

    /// Bisection on c(q) − q, independent of the closed-form sonic speed.
    fn sonic_by_bisection(model: &GasModel) -> f64 {
        let (mut lo, mut hi) = (0.0, model.q_max() * (1.0 - 1e-12));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let c = (model.c0 * model.c0 - 0.5 * (model.gamma - 1.0) * mid * mid).sqrt();
            if c > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn density_values() {
        assert_eq!(air().density(0.0).unwrap(), 1.0);
        let g2 = GasModel::new(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(g2.density(1.0).unwrap(), 0.5, epsilon = 1e-15);
        let m = air();
        assert!(matches!(m.density(m.q_max()), Err(GasError::VacuumLimit { .. })));
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(GasModel::new(1.0, 1.0).is_err());
        assert!(GasModel::new(1.4, 0.0).is_err());
        assert!(GasModel::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn sonic_point() {
        let m = air();
        let q_star = sonic_by_bisection(&m);
        assert_abs_diff_eq!(q_star, (2.0f64 / 2.4).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(q_star, 0.912871, epsilon = 1e-6);
        let s = FlowState::new(q_star, 0.0);
        assert_abs_diff_eq!(m.sound_speed(&s).unwrap(), q_star, epsilon = 1e-12);
        assert_abs_diff_eq!(m.mach(&s).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(m.classify(&s, 1e-9).unwrap(), FlowClass::Sonic);
        assert_abs_diff_eq!(m.sonic_speed(), q_star, epsilon = 1e-12);
    }

    #[test]
    fn rest_and_supersonic() {
        let m = air();
        let rest = FlowState::new(0.0, 0.0);
        assert_eq!(m.sound_speed(&rest).unwrap(), 1.0);
        assert_eq!(m.mach(&rest).unwrap(), 0.0);
        assert_eq!(m.classify(&rest, 1e-9).unwrap(), FlowClass::Elliptic);
        let fast = FlowState::new(1.2, 0.0);
        let c = m.sound_speed(&fast).unwrap();
        assert!(c < 1.2);
        assert!(m.mach(&fast).unwrap() > 1.0);
        assert_eq!(m.classify(&fast, 1e-9).unwrap(), FlowClass::Hyperbolic);
    }

    #[test]
    fn flux_matrix_examples() {
        let m = air();
        let a = m.flux_matrix(&FlowState::new(0.0, 0.0)).unwrap();
        assert_eq!(a.m, [[0.0, 1.0], [-1.0, 0.0]]);
        let a = m.flux_matrix(&FlowState::new(0.0, 0.5)).unwrap();
        // c² = 1 − 0.2·0.25 = 0.95; entries evaluated one by one
        let c2 = 1.0 - 0.5 * 0.4 * 0.25;
        assert_abs_diff_eq!(a.m[0][0], 0.0);
        assert_abs_diff_eq!(a.m[0][1], (c2 - 0.25) / c2, epsilon = 1e-15);
        assert_eq!(a.m[1], [-1.0, 0.0]);
        // local sound speed held at c = 1
        let a = flux_matrix_with_sound_speed(&FlowState::new(0.0, 0.5), 1.0, 1e-12).unwrap();
        assert_eq!(a.m, [[0.0, 0.75], [-1.0, 0.0]]);
        assert!(flux_matrix_with_sound_speed(&FlowState::new(1.0, 0.0), 1.0, 1e-12).is_err());
    }

    #[test]
    fn flux_matrix_degenerate_when_u1_equals_c() {
        let m = air();
        let q = m.sonic_speed();
        assert!(matches!(
            m.flux_matrix(&FlowState::new(q, 0.0)),
            Err(GasError::DegenerateDirection { .. })
        ));
    }

    #[test]
    fn monotonicity_on_grid() {
        let m = air();
        let qs: Vec<f64> = (0..2000).map(|i| i as f64 / 2000.0 * m.q_max() * 0.999).collect();
        let rho: Vec<f64> = qs.iter().map(|&q| m.density(q).unwrap()).collect();
        let c: Vec<f64> = qs.iter().map(|&q| m.sound_speed(&FlowState::new(q, 0.0)).unwrap()).collect();
        let mach: Vec<f64> = qs.iter().map(|&q| m.mach(&FlowState::new(0.0, q)).unwrap()).collect();
        assert!(rho.windows(2).all(|w| w[1] < w[0]));
        assert!(c.windows(2).all(|w| w[1] < w[0]));
        assert!(mach.windows(2).all(|w| w[1] > w[0]));
        let roots = mach.windows(2).filter(|w| (w[0] - 1.0) * (w[1] - 1.0) <= 0.0).count();
        assert_eq!(roots, 1);
    }

    fn ramp_field() -> VelocityField {
        let xs: Vec<f64> = (0..15).map(|i| i as f64 / 14.0).collect();
        let ts = vec![0.0, 0.5, 1.0];
        VelocityField::from_fn(xs, ts, |x, _| FlowState::new(0.5 + 0.7 * x, 0.0)).unwrap()
    }

    #[test]
    fn sonic_line_uniform_subsonic_is_empty() {
        let f = VelocityField::from_fn(vec![0.0, 1.0, 2.0], vec![0.0, 1.0], |_, _| FlowState::new(0.3, 0.1)).unwrap();
        assert!(sonic_line(&f, &air(), 1e-9).unwrap().is_empty());
    }

    #[test]
    fn sonic_line_ramp_single_band() {
        let m = air();
        let q_star = sonic_by_bisection(&m);
        let f = ramp_field();
        let cross = sonic_line(&f, &m, 1e-9).unwrap();
        assert_eq!(cross.len(), f.ts().len());
        let ix = cross[0].a.0;
        for c in &cross {
            assert!(c.is_horizontal());
            assert_eq!(c.a.0, ix);
            assert!(c.q_a < q_star && q_star < c.q_b);
        }
    }

    #[test]
    fn sonic_line_checkerboard() {
        let xs: Vec<f64> = (0..5).map(f64::from).collect();
        let ts: Vec<f64> = (0..4).map(f64::from).collect();
        let f = VelocityField::from_fn(xs, ts, |x, t| {
            let q = if (x + t) as i64 % 2 == 0 { 0.4 } else { 1.2 };
            FlowState::new(q, 0.0)
        })
        .unwrap();
        let cross = sonic_line(&f, &air(), 1e-9).unwrap();
        // 4 rows × 4 horizontal edges + 5 columns × 3 vertical edges
        assert_eq!(cross.len(), 4 * 4 + 5 * 3);
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let text = "x,T,u1,u2\n0,0,0.1,0.0\n1,0,0.2,0.0\n0,1,0.1,0.1\n1,1,0.2,0.1\n";
        let f = VelocityField::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(f.xs(), &[0.0, 1.0]);
        assert_eq!(f.state(1, 1), FlowState::new(0.2, 0.1));
        assert_eq!(f.source_row(1, 0), Some(3));

        let bad = "x,T,u1,u2\n0,0,0.1,0.0\n1,0,abc,0.0\n";
        match VelocityField::from_csv_reader(bad.as_bytes()) {
            Err(GasError::Row { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        let wrong_header = "a,b,c,d\n0,0,0,0\n";
        assert!(VelocityField::from_csv_reader(wrong_header.as_bytes()).is_err());
        let holes = "x,T,u1,u2\n0,0,0,0\n1,0,0,0\n0,1,0,0\n";
        assert!(VelocityField::from_csv_reader(holes.as_bytes()).is_err());
    }
}
