use serde::{Deserialize, Serialize};

use crate::quad::GaussRule;

/// Bump equal to 1 on `|x − x0| ≤ R/2`, vanishing for `|x − x0| ≥ R`, with a
/// polynomial smoothstep transition of class `C^order`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub center: f64,
    pub radius: f64,
    pub order: usize,
}

impl CutoffSpec {
    pub const DEFAULT_ORDER: usize = 8;

    pub fn new(center: f64, radius: f64) -> Self {
        CutoffSpec {
            center,
            radius,
            order: Self::DEFAULT_ORDER,
        }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    /// Normalising constant `(2k+1)!/(k!)²`.
    fn norm(&self) -> f64 {
        let k = self.order;
        (k + 1..=2 * k + 1).map(|j| j as f64).product::<f64>() / (1..=k).map(|j| j as f64).product::<f64>()
    }

    fn step_density(&self, s: f64) -> f64 {
        let k = self.order as i32;
        self.norm() * (s * (1.0 - s)).powi(k)
    }

    /// Smoothstep rising from 0 at `s = 0` to 1 at `s = 1`.
    fn step(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        if s > 0.5 {
            return 1.0 - self.step(1.0 - s);
        }
        // The density is a polynomial of degree 2k; this rule integrates it exactly.
        let rule = GaussRule::new(self.order + 1);
        rule.mapped(0.0, s).map(|(t, w)| w * self.step_density(t)).sum()
    }

    fn band_coordinate(&self, x: f64) -> f64 {
        let half = 0.5 * self.radius;
        ((x - self.center).abs() - half) / half
    }

    pub fn value(&self, x: f64) -> f64 {
        1.0 - self.step(self.band_coordinate(x))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let s = self.band_coordinate(x);
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        let sign = (x - self.center).signum();
        -sign * self.step_density(s) / (0.5 * self.radius)
    }

    /// Support edges and transition edges, increasing.
    pub fn breakpoints(&self) -> [f64; 4] {
        let (c, r) = (self.center, self.radius);
        [c - r, c - 0.5 * r, c + 0.5 * r, c + r]
    }

    /// The two intervals where the derivative may be nonzero.
    pub fn derivative_bands(&self) -> [[f64; 2]; 2] {
        let b = self.breakpoints();
        [[b[0], b[1]], [b[2], b[3]]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        let c = CutoffSpec::new(1.0, 0.4);
        assert_eq!(c.value(1.0), 1.0);
        assert_eq!(c.value(1.2), 1.0);
        assert_eq!(c.value(0.8), 1.0);
        assert_eq!(c.value(1.4), 0.0);
        assert_eq!(c.value(0.5), 0.0);
        assert!((c.value(1.3) - 0.5).abs() < 1e-14);
        assert!((c.value(0.7) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let c = CutoffSpec::new(0.0, 1.0);
        for &x in &[-0.9, -0.7, -0.55, 0.52, 0.6, 0.77, 0.95] {
            let h = 1e-6;
            let fd = (c.value(x + h) - c.value(x - h)) / (2.0 * h);
            assert!((fd - c.derivative(x)).abs() < 1e-6, "x = {x}: {fd} vs {}", c.derivative(x));
        }
    }

    #[test]
    fn smoothstep_matches_closed_form_for_order_one() {
        // Order 1: S(s) = 3s² − 2s³.
        let c = CutoffSpec::new(0.0, 2.0).with_order(1);
        for &s in &[0.1, 0.3, 0.5, 0.8] {
            let x = 1.0 + s;
            assert!((c.value(x) - (1.0 - (3.0 * s * s - 2.0 * s * s * s))).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_integrates_to_minus_one_per_side() {
        let c = CutoffSpec::new(0.0, 1.0);
        let rule = GaussRule::new(20);
        let right: f64 = rule.mapped(0.5, 1.0).map(|(x, w)| w * c.derivative(x)).sum();
        let left: f64 = rule.mapped(-1.0, -0.5).map(|(x, w)| w * c.derivative(x)).sum();
        assert!((right + 1.0).abs() < 1e-13);
        assert!((left - 1.0).abs() < 1e-13);
    }
}
