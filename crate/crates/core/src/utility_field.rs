//! Random utility fields `U(ω, t, x) = a · Ũ(x / s)` and their convex
//! conjugates `V(ω, t, y) = sup_x (U(x) - x y) = a · Ṽ(s y / a)`.
//!
//! Weights `a` and scales `s` are per atom. Values leaving the real line are
//! reported through [`Extended`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_basis::EventTree;

/// A point of `[-∞, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Extended {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub fn from_f64(v: f64) -> Self {
        if v == f64::NEG_INFINITY {
            Extended::NegInfinity
        } else if v == f64::INFINITY {
            Extended::PosInfinity
        } else {
            Extended::Finite(v)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }
}

/// Base shapes `Ũ` before weighting and scaling.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Log,
    /// `x^{1-γ} / (1-γ)` with `γ > 0`, `γ ≠ 1`.
    Power { gamma: f64 },
    Tabulated(Arc<TabulatedUtility>),
}

impl Family {
    pub fn power(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidUtility(format!("power exponent must be positive, got {gamma}")));
        }
        if (gamma - 1.0).abs() < 1e-12 {
            return Err(Error::InvalidUtility("power exponent 1 is the log family".into()));
        }
        Ok(Family::Power { gamma })
    }

    /// Exponential utility has finite marginal utility at 0 and is refused.
    pub fn exponential(_alpha: f64) -> Result<Self> {
        Err(Error::InvalidUtility(
            "exponential utility has bounded marginal utility at 0 and violates the Inada condition".into(),
        ))
    }

    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        Ok(Family::Tabulated(Arc::new(TabulatedUtility::new(points)?)))
    }

    pub fn name(&self) -> String {
        match self {
            Family::Log => "log".into(),
            Family::Power { gamma } => format!("power({gamma})"),
            Family::Tabulated(t) => format!("tabulated({} knots)", t.xs.len()),
        }
    }

    fn u(&self, x: f64) -> f64 {
        match self {
            Family::Log => {
                if x > 0.0 {
                    x.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Power { gamma } => {
                if x > 0.0 {
                    x.powf(1.0 - gamma) / (1.0 - gamma)
                } else if x == 0.0 && *gamma < 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Tabulated(t) => t.value(x),
        }
    }

    fn u1(&self, x: f64) -> f64 {
        match self {
            Family::Log => 1.0 / x,
            Family::Power { gamma } => x.powf(-gamma),
            Family::Tabulated(t) => t.d1(x),
        }
    }

    fn u2(&self, x: f64) -> f64 {
        match self {
            Family::Log => -1.0 / (x * x),
            Family::Power { gamma } => -gamma * x.powf(-gamma - 1.0),
            Family::Tabulated(t) => t.d2(x),
        }
    }

    /// `Ĩ = (Ũ')^{-1}`.
    fn inv(&self, y: f64) -> f64 {
        match self {
            Family::Log => 1.0 / y,
            Family::Power { gamma } => y.powf(-1.0 / gamma),
            Family::Tabulated(t) => t.inverse_marginal(y),
        }
    }

    fn v(&self, y: f64) -> f64 {
        match self {
            Family::Log => {
                if y > 0.0 {
                    -y.ln() - 1.0
                } else {
                    f64::INFINITY
                }
            }
            Family::Power { gamma } => {
                let g = *gamma;
                if y > 0.0 {
                    g / (1.0 - g) * y.powf((g - 1.0) / g)
                } else if y == 0.0 && g > 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Family::Tabulated(t) => {
                if y > 0.0 {
                    let x = t.inverse_marginal(y);
                    t.value(x) - x * y
                } else if y == 0.0 {
                    t.sup_value()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn v2(&self, y: f64) -> f64 {
        match self {
            Family::Log => 1.0 / (y * y),
            Family::Power { gamma } => y.powf(-1.0 / gamma - 1.0) / gamma,
            Family::Tabulated(t) => -1.0 / t.d2(t.inverse_marginal(y)),
        }
    }
}

/// `U(x) = a · Ũ(x / s)` for one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarUtility {
    pub family: Family,
    pub weight: f64,
    pub scale: f64,
}

impl ScalarUtility {
    pub fn new(family: Family, weight: f64, scale: f64) -> Result<Self> {
        check_positive("weight", weight)?;
        check_positive("scale", scale)?;
        Ok(ScalarUtility { family, weight, scale })
    }

    pub fn u(&self, x: f64) -> f64 {
        self.weight * self.family.u(x / self.scale)
    }

    pub fn u1(&self, x: f64) -> f64 {
        self.weight / self.scale * self.family.u1(x / self.scale)
    }

    pub fn u2(&self, x: f64) -> f64 {
        self.weight / (self.scale * self.scale) * self.family.u2(x / self.scale)
    }

    /// `I = (U')^{-1} = -V'`.
    pub fn inv_marginal(&self, y: f64) -> f64 {
        self.scale * self.family.inv(self.scale * y / self.weight)
    }

    pub fn v(&self, y: f64) -> f64 {
        self.weight * self.family.v(self.scale * y / self.weight)
    }

    pub fn v1(&self, y: f64) -> f64 {
        -self.inv_marginal(y)
    }

    pub fn v2(&self, y: f64) -> f64 {
        self.scale * self.scale / self.weight * self.family.v2(self.scale * y / self.weight)
    }
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidUtility(format!("{what} must be positive and finite, got {v}")))
    }
}

/// Derivative estimate with an error bound; analytic families report 0 error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Marginal {
    pub value: f64,
    pub error: f64,
}

/// A utility family with per-atom weights and scales on a fixed tree.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityField {
    tree: u64,
    family: Family,
    weights: Vec<f64>,
    scales: Vec<f64>,
}

impl UtilityField {
    pub fn uniform(tree: &EventTree, family: Family) -> Result<Self> {
        Self::new(tree, family, vec![1.0; tree.len()], vec![1.0; tree.len()])
    }

    pub fn new(tree: &EventTree, family: Family, weights: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        if weights.len() != tree.len() || scales.len() != tree.len() {
            return Err(Error::InvalidUtility(format!(
                "expected {} weights and scales, got {} and {}",
                tree.len(),
                weights.len(),
                scales.len()
            )));
        }
        for (&a, &s) in weights.iter().zip(&scales) {
            check_positive("weight", a)?;
            check_positive("scale", s)?;
        }
        if let Family::Tabulated(t) = &family {
            t.check_inada()?;
        }
        Ok(UtilityField { tree: tree.signature(), family, weights, scales })
    }

    pub fn tree_signature(&self) -> u64 {
        self.tree
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn at(&self, node: usize) -> ScalarUtility {
        ScalarUtility { family: self.family.clone(), weight: self.weights[node], scale: self.scales[node] }
    }

    pub fn evaluate(&self, node: usize, x: f64) -> Extended {
        if x.is_nan() {
            return Extended::NegInfinity;
        }
        Extended::from_f64(self.at(node).u(x))
    }

    /// `U'(x)`; central difference with relative step 1e-6 for tabulated shapes.
    pub fn marginal(&self, node: usize, x: f64) -> Result<Marginal> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidUtility(format!("marginal utility needs x > 0, got {x}")));
        }
        let u = self.at(node);
        match self.family {
            Family::Tabulated(_) => {
                let cd = |h: f64| (u.u(x + h) - u.u(x - h)) / (2.0 * h);
                let h = 1e-6 * x;
                let d1 = cd(h);
                let d2 = cd(h / 2.0);
                Ok(Marginal { value: d2, error: (d1 - d2).abs() })
            }
            _ => Ok(Marginal { value: u.u1(x), error: 0.0 }),
        }
    }

    pub fn conjugate(&self) -> ConjugateField {
        ConjugateField { field: self.clone() }
    }
}

/// `V(ω, t, y) = sup_{x > 0} (U(ω, t, x) - x y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateField {
    field: UtilityField,
}

impl ConjugateField {
    pub fn evaluate(&self, node: usize, y: f64) -> Extended {
        if y.is_nan() {
            return Extended::PosInfinity;
        }
        Extended::from_f64(self.field.at(node).v(y))
    }

    pub fn derivative(&self, node: usize, y: f64) -> Result<f64> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::InvalidUtility(format!("conjugate derivative needs y > 0, got {y}")));
        }
        Ok(self.field.at(node).v1(y))
    }
}

/// Concave shape interpolated through `(x_i, u_i)` by cubic Hermite pieces,
/// extended beyond the knots by power-law marginal tails.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedUtility {
    xs: Vec<f64>,
    us: Vec<f64>,
    ds: Vec<f64>,
    beta_left: f64,
    beta_right: f64,
}

const INADA_DECADES: i32 = 12;
const INADA_RATIO: f64 = 1e3;

impl TabulatedUtility {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidUtility("a tabulated utility needs at least 3 points".into()));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let us: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.iter().chain(&us).any(|v| !v.is_finite()) {
            return Err(Error::InvalidUtility("tabulated values must be finite".into()));
        }
        if xs[0] <= 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidUtility("abscissae must be positive and strictly increasing".into()));
        }
        let n = xs.len();
        let h: Vec<f64> = (0..n - 1).map(|i| xs[i + 1] - xs[i]).collect();
        let m: Vec<f64> = (0..n - 1).map(|i| (us[i + 1] - us[i]) / h[i]).collect();
        if m.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidUtility("tabulated utility must be strictly increasing".into()));
        }
        if m.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidUtility("tabulated utility must be strictly concave".into()));
        }
        // three-point slope estimates, one-sided at the ends
        let mut ds = vec![0.0; n];
        ds[0] = ((2.0 * h[0] + h[1]) * m[0] - h[0] * m[1]) / (h[0] + h[1]);
        for i in 1..n - 1 {
            ds[i] = (h[i] * m[i - 1] + h[i - 1] * m[i]) / (h[i - 1] + h[i]);
        }
        ds[n - 1] = ((2.0 * h[n - 2] + h[n - 3]) * m[n - 2] - h[n - 2] * m[n - 3]) / (h[n - 2] + h[n - 3]);
        if ds.iter().any(|&d| d <= 0.0) {
            return Err(Error::InvalidUtility("estimated marginal utility is not positive at every knot".into()));
        }
        for i in 0..n - 1 {
            let (d0, d1) = (ds[i], ds[i + 1]);
            if !(2.0 * d0 + d1 > 3.0 * m[i] && d0 + 2.0 * d1 < 3.0 * m[i]) {
                return Err(Error::InvalidUtility(format!(
                    "interpolant is not strictly concave on [{}, {}]",
                    xs[i],
                    xs[i + 1]
                )));
            }
        }
        // tail exponents from the two outermost secants and their midpoints
        let beta_left = -(m[1] / m[0]).ln() / ((xs[1] + xs[2]) / (xs[0] + xs[1])).ln();
        let beta_right = -(m[n - 2] / m[n - 3]).ln() / ((xs[n - 2] + xs[n - 1]) / (xs[n - 3] + xs[n - 2])).ln();
        if !(beta_left > 0.0 && beta_right > 0.0) {
            return Err(Error::InvalidUtility("tail exponents must be positive".into()));
        }
        Ok(TabulatedUtility { xs, us, ds, beta_left, beta_right })
    }

    pub fn tail_exponents(&self) -> (f64, f64) {
        (self.beta_left, self.beta_right)
    }

    fn locate(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i - 1,
        }
    }

    fn tail_integral(d: f64, x0: f64, beta: f64, x: f64) -> f64 {
        // ∫_{x0}^{x} d (t/x0)^{-β} dt
        if (beta - 1.0).abs() < 1e-12 {
            d * x0 * (x / x0).ln()
        } else {
            d * x0 * ((x / x0).powf(1.0 - beta) - 1.0) / (1.0 - beta)
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x.is_nan() || x < 0.0 {
            return f64::NEG_INFINITY;
        }
        if x < self.xs[0] {
            if x == 0.0 {
                return if self.beta_left < 1.0 {
                    self.us[0] - self.ds[0] * self.xs[0] / (1.0 - self.beta_left)
                } else {
                    f64::NEG_INFINITY
                };
            }
            return self.us[0] + Self::tail_integral(self.ds[0], self.xs[0], self.beta_left, x);
        }
        if x > self.xs[n - 1] {
            if x == f64::INFINITY {
                return self.sup_value();
            }
            return self.us[n - 1] + Self::tail_integral(self.ds[n - 1], self.xs[n - 1], self.beta_right, x);
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        h00 * self.us[i] + h10 * h * self.ds[i] + h01 * self.us[i + 1] + h11 * h * self.ds[i + 1]
    }

    fn sup_value(&self) -> f64 {
        let n = self.xs.len();
        if self.beta_right > 1.0 {
            self.us[n - 1] + self.ds[n - 1] * self.xs[n - 1] / (self.beta_right - 1.0)
        } else {
            f64::INFINITY
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.ds[0] * (x / self.xs[0]).powf(-self.beta_left);
        }
        if x > self.xs[n - 1] {
            return self.ds[n - 1] * (x / self.xs[n - 1]).powf(-self.beta_right);
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let m = (self.us[i + 1] - self.us[i]) / h;
        // derivative of the Hermite basis combination
        6.0 * t * (1.0 - t) * m
            + (1.0 - 4.0 * t + 3.0 * t * t) * self.ds[i]
            + (3.0 * t * t - 2.0 * t) * self.ds[i + 1]
    }

    pub fn d2(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return -self.beta_left * self.ds[0] / self.xs[0] * (x / self.xs[0]).powf(-self.beta_left - 1.0);
        }
        if x > self.xs[n - 1] {
            return -self.beta_right * self.ds[n - 1] / self.xs[n - 1] * (x / self.xs[n - 1]).powf(-self.beta_right - 1.0);
        }
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let m = (self.us[i + 1] - self.us[i]) / h;
        ((6.0 - 12.0 * t) * m + (6.0 * t - 4.0) * self.ds[i] + (6.0 * t - 2.0) * self.ds[i + 1]) / h
    }

    /// Solves `Ũ'(x) = y` by bisection inside the bracketing interval.
    pub fn inverse_marginal(&self, y: f64) -> f64 {
        let n = self.xs.len();
        if y >= self.ds[0] {
            return self.xs[0] * (y / self.ds[0]).powf(-1.0 / self.beta_left);
        }
        if y <= self.ds[n - 1] {
            return self.xs[n - 1] * (y / self.ds[n - 1]).powf(-1.0 / self.beta_right);
        }
        let mut i = 0;
        while self.ds[i + 1] > y {
            i += 1;
        }
        let (mut lo, mut hi) = (self.xs[i], self.xs[i + 1]);
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if self.d1(mid) > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Sampled proxy for `U'(0+) = ∞` and `U'(∞) = 0`: the marginal must be
    /// strictly monotone over ±12 decades and move by at least three orders
    /// of magnitude on each side of 1.
    pub fn check_inada(&self) -> Result<()> {
        let grid: Vec<f64> = (-INADA_DECADES..=INADA_DECADES).map(|k| 10f64.powi(k)).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| self.d1(x)).collect();
        if vals.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidUtility("marginal utility is not strictly decreasing on the sampling grid".into()));
        }
        let mid = vals[INADA_DECADES as usize];
        if vals[0] / mid < INADA_RATIO {
            return Err(Error::InvalidUtility(format!(
                "marginal utility grows only by {:.3e} towards 0; Inada condition at 0 fails",
                vals[0] / mid
            )));
        }
        if vals[vals.len() - 1] / mid > 1.0 / INADA_RATIO {
            return Err(Error::InvalidUtility("marginal utility does not vanish at infinity".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golden_conjugate(u: &ScalarUtility, y: f64) -> f64 {
        // sup_x U(x) - x y by golden section in log x
        let f = |lx: f64| {
            let x = lx.exp();
            u.u(x) - x * y
        };
        let (mut a, mut b) = (-40.0f64, 40.0f64);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        f(0.5 * (a + b))
    }

    #[test]
    fn closed_form_conjugates() {
        let p2 = ScalarUtility::new(Family::power(2.0).unwrap(), 1.0, 1.0).unwrap();
        assert!((p2.v(4.0) + 4.0).abs() < 1e-14);
        let p05 = ScalarUtility::new(Family::power(0.5).unwrap(), 3.0, 1.0).unwrap();
        assert!((p05.v(2.0) - 9.0 / 2.0).abs() < 1e-12);
        let lg = ScalarUtility::new(Family::Log, 1.0, 1.0).unwrap();
        assert!((lg.v(1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_values() {
        let t = EventTree::regular(1, &[0.5, 0.5]).unwrap();
        let lg = UtilityField::uniform(&t, Family::Log).unwrap();
        assert_eq!(lg.evaluate(1, 0.0), Extended::NegInfinity);
        assert_eq!(lg.conjugate().evaluate(1, 0.0), Extended::PosInfinity);
        let p = UtilityField::uniform(&t, Family::power(0.5).unwrap()).unwrap();
        assert_eq!(p.evaluate(1, 0.0), Extended::Finite(0.0));
        let p3 = UtilityField::uniform(&t, Family::power(3.0).unwrap()).unwrap();
        assert_eq!(p3.conjugate().evaluate(1, 0.0), Extended::Finite(0.0));
    }

    #[test]
    fn exponential_is_refused() {
        assert!(Family::exponential(1.0).is_err());
        // the same shape as a table fails the sampled Inada check
        let pts: Vec<(f64, f64)> = (0..20).map(|i| {
            let x = 0.01 * 1.5f64.powi(i);
            (x, -(-x).exp())
        }).collect();
        let t = EventTree::regular(1, &[0.5, 0.5]).unwrap();
        let r = Family::tabulated(&pts).and_then(|f| UtilityField::uniform(&t, f));
        assert!(matches!(r, Err(Error::InvalidUtility(_))));
    }

    #[test]
    fn tabulated_log_matches_log() {
        let pts: Vec<(f64, f64)> = (0..41).map(|i| {
            let x = 10f64.powf(-2.0 + 0.1 * i as f64);
            (x, x.ln())
        }).collect();
        let fam = Family::tabulated(&pts).unwrap();
        let t = EventTree::regular(1, &[0.5, 0.5]).unwrap();
        let f = UtilityField::uniform(&t, fam).unwrap();
        for &x in &[0.05, 0.5, 1.0, 3.0, 50.0] {
            let u = f.evaluate(1, x).finite().unwrap();
            assert!((u - x.ln()).abs() < 1e-3, "x={x} u={u}");
            let m = f.marginal(1, x).unwrap();
            assert!((m.value - 1.0 / x).abs() < 2e-2 / x, "x={x} m={}", m.value);
            assert!(m.error < 1e-6 / x);
        }
        let (bl, br) = match f.family() {
            Family::Tabulated(t) => t.tail_exponents(),
            _ => unreachable!(),
        };
        assert!((bl - 1.0).abs() < 0.05 && (br - 1.0).abs() < 0.05, "{bl} {br}");
    }

    #[test]
    fn rejects_nonconcave_table() {
        assert!(Family::tabulated(&[(1.0, 0.0), (2.0, 1.0), (3.0, 3.0)]).is_err());
        assert!(Family::tabulated(&[(1.0, 0.0), (2.0, 1.0), (3.0, 0.5)]).is_err());
    }

    fn families() -> impl Strategy<Value = Family> {
        prop_oneof![
            Just(Family::Log),
            (0.2f64..0.9).prop_map(|g| Family::power(g).unwrap()),
            (1.1f64..4.0).prop_map(|g| Family::power(g).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn conjugate_matches_numerical_sup(fam in families(), a in 0.5f64..2.0, s in 0.5f64..2.0, y in 0.05f64..20.0) {
            let u = ScalarUtility::new(fam, a, s).unwrap();
            let direct = golden_conjugate(&u, y);
            prop_assert!((u.v(y) - direct).abs() < 1e-8 * (1.0 + direct.abs()));
        }

        #[test]
        fn marginals_are_inverse(fam in families(), a in 0.5f64..2.0, s in 0.5f64..2.0, y in 0.01f64..50.0) {
            let u = ScalarUtility::new(fam, a, s).unwrap();
            let x = u.inv_marginal(y);
            prop_assert!((u.u1(x) - y).abs() < 1e-10 * y);
            // V' = -I and V'' = -1/U''(I)
            let h = 1e-5 * y;
            let fd = (u.v(y + h) - u.v(y - h)) / (2.0 * h);
            prop_assert!((fd - u.v1(y)).abs() < 1e-6 * (1.0 + x));
            prop_assert!((u.v2(y) + 1.0 / u.u2(x)).abs() < 1e-9 * u.v2(y));
        }

        #[test]
        fn utility_is_increasing_and_concave(fam in families(), x in 0.01f64..100.0, dx in 0.001f64..10.0) {
            let u = ScalarUtility::new(fam, 1.0, 1.0).unwrap();
            prop_assert!(u.u(x + dx) > u.u(x));
            let mid = u.u(x + dx / 2.0);
            prop_assert!(mid >= 0.5 * (u.u(x) + u.u(x + dx)) - 1e-12 * mid.abs());
            prop_assert!(u.u1(x) > 0.0 && u.u2(x) < 0.0);
        }
    }
}
