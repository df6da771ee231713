//! The abstract primal and dual problems on a finite atom space:
//!
//! `u(x) = sup_{ξ ∈ C(x)} Σ μ U(ξ)` and `v(y) = inf_{η ∈ D(y)} Σ μ V(η)`
//!
//! with `C(x) = x C`, `D(y) = y D`, and their truncated minimax versions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ipm::{self, BarrierOptions, LinearConstraints, Objective};
use crate::polytope::PolytopeSet;
use crate::scalar;
use crate::utility_field::{Extended, ScalarUtility};

/// Solid sets `C`, `D` over the same weighted atoms and one utility per atom.
#[derive(Debug, Clone)]
pub struct AbstractProblem {
    c: PolytopeSet,
    d: PolytopeSet,
    utilities: Vec<ScalarUtility>,
}

impl AbstractProblem {
    pub fn new(c: PolytopeSet, d: PolytopeSet, utilities: Vec<ScalarUtility>) -> Result<Self> {
        if c.dim() != d.dim() || utilities.len() != c.dim() {
            return Err(Error::InvalidSet(format!(
                "dimensions disagree: C has {}, D has {}, {} utilities",
                c.dim(),
                d.dim(),
                utilities.len()
            )));
        }
        if c.weights() != d.weights() {
            return Err(Error::InvalidSet("C and D use different atom weights".into()));
        }
        if !c.has_positive_element() {
            return Err(Error::InvalidSet("C has no strictly positive element".into()));
        }
        if !d.has_positive_element() {
            return Err(Error::InvalidSet("D has no strictly positive element".into()));
        }
        Ok(AbstractProblem { c, d, utilities })
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn weights(&self) -> &[f64] {
        self.c.weights()
    }

    pub fn primal_set(&self) -> &PolytopeSet {
        &self.c
    }

    pub fn dual_set(&self) -> &PolytopeSet {
        &self.d
    }

    pub fn utilities(&self) -> &[ScalarUtility] {
        &self.utilities
    }

    pub fn pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        self.c.pairing(a, b)
    }

    /// `Σ μ U(ξ)`.
    pub fn primal_objective(&self, xi: &[f64]) -> f64 {
        self.weights().iter().zip(&self.utilities).zip(xi).map(|((m, u), &v)| m * u.u(v)).sum()
    }

    /// `Σ μ V(η)`.
    pub fn dual_objective(&self, eta: &[f64]) -> f64 {
        self.weights().iter().zip(&self.utilities).zip(eta).map(|((m, u), &v)| m * u.v(v)).sum()
    }

    /// `Σ μ V^n(η)` with `V^n(z) = sup_{0 ≤ x ≤ n} (U(x) - x z)`.
    pub fn truncated_dual_objective(&self, eta: &[f64], n: f64) -> f64 {
        self.weights()
            .iter()
            .zip(&self.utilities)
            .zip(eta)
            .map(|((m, u), &v)| m * Shape::Truncated(n).value(u, v))
            .sum()
    }
}

/// Per-atom convex integrands used by the barrier objectives.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Shape {
    NegUtility,
    Conjugate,
    Truncated(f64),
}

impl Shape {
    pub(crate) fn value(self, u: &ScalarUtility, z: f64) -> f64 {
        match self {
            Shape::NegUtility => -u.u(z),
            Shape::Conjugate => u.v(z),
            Shape::Truncated(n) => {
                if z > 0.0 && u.inv_marginal(z) <= n {
                    u.v(z)
                } else {
                    u.u(n) - n * z
                }
            }
        }
    }

    fn d1(self, u: &ScalarUtility, z: f64) -> f64 {
        match self {
            Shape::NegUtility => -u.u1(z),
            Shape::Conjugate => u.v1(z),
            Shape::Truncated(n) => {
                if z > 0.0 {
                    -u.inv_marginal(z).min(n)
                } else {
                    -n
                }
            }
        }
    }

    fn d2(self, u: &ScalarUtility, z: f64) -> f64 {
        match self {
            Shape::NegUtility => -u.u2(z),
            Shape::Conjugate => u.v2(z),
            Shape::Truncated(n) => {
                if z > 0.0 && u.inv_marginal(z) <= n {
                    u.v2(z)
                } else {
                    0.0
                }
            }
        }
    }
}

/// `Σ μ_i ψ_i((L z + o)_i) + cᵀ z`, with `L` the identity on the first
/// `m` variables when no map is given.
pub(crate) struct SeparableObjective<'a> {
    pub mu: &'a [f64],
    pub utils: &'a [ScalarUtility],
    pub shape: Shape,
    pub map: Option<DMatrix<f64>>,
    pub offset: Option<Vec<f64>>,
    pub linear: Vec<f64>,
}

impl SeparableObjective<'_> {
    fn coords(&self, z: &[f64]) -> Vec<f64> {
        let m = self.mu.len();
        let mut y: Vec<f64> = match &self.map {
            Some(l) => (l * DVector::from_column_slice(z)).iter().copied().collect(),
            None => z[..m].to_vec(),
        };
        if let Some(o) = &self.offset {
            y.iter_mut().zip(o).for_each(|(a, b)| *a += b);
        }
        y
    }
}

impl Objective for SeparableObjective<'_> {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let y = self.coords(z);
        let mut total: f64 = self.linear.iter().zip(z).map(|(c, v)| c * v).sum();
        for i in 0..y.len() {
            let v = self.shape.value(&self.utils[i], y[i]);
            if !v.is_finite() {
                return f64::INFINITY;
            }
            total += self.mu[i] * v;
        }
        total
    }

    fn gradient(&self, z: &[f64]) -> DVector<f64> {
        let y = self.coords(z);
        let g: DVector<f64> = DVector::from_iterator(y.len(), (0..y.len()).map(|i| self.mu[i] * self.shape.d1(&self.utils[i], y[i])));
        let mut out = DVector::from_column_slice(&self.linear);
        match &self.map {
            Some(l) => out += l.transpose() * g,
            None => {
                for i in 0..y.len() {
                    out[i] += g[i];
                }
            }
        }
        out
    }

    fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let y = self.coords(z);
        let n = self.linear.len();
        let d: Vec<f64> = (0..y.len()).map(|i| self.mu[i] * self.shape.d2(&self.utils[i], y[i])).collect();
        match &self.map {
            Some(l) => {
                let mut scaled = l.clone();
                for (i, mut row) in scaled.row_iter_mut().enumerate() {
                    row *= d[i];
                }
                l.transpose() * scaled
            }
            None => {
                let mut h = DMatrix::zeros(n, n);
                for i in 0..y.len() {
                    h[(i, i)] = d[i];
                }
                h
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SolveReport {
    pub problem: String,
    pub parameter: f64,
    pub value: Extended,
    /// Optimizer on the atoms of the problem.
    pub optimizer: Vec<f64>,
    /// Convex weights over generators when the set is given by generators.
    pub representation: Option<Vec<f64>>,
    pub stationarity: f64,
    pub complementarity: f64,
    pub newton_steps: usize,
    pub converged: bool,
}

impl SolveReport {
    pub fn value_f64(&self) -> f64 {
        match self.value {
            Extended::Finite(v) => v,
            Extended::NegInfinity => f64::NEG_INFINITY,
            Extended::PosInfinity => f64::INFINITY,
        }
    }

    pub fn min_coordinate(&self) -> f64 {
        self.optimizer.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Options shared by the barrier solves.
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub barrier: BarrierOptions,
    /// Start point in the solver's own variables (atoms for normal-form
    /// sets, convex weights for generator-form sets).
    pub start: Option<Vec<f64>>,
}

fn check_level(what: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSet(format!("{what} must be positive and finite, got {x}")))
    }
}

/// Problem layout over a set: either atom variables under normal
/// constraints or convex weights over generators.
enum Layout {
    Normals { cons: LinearConstraints, start: Vec<f64> },
    Generators { map: DMatrix<f64>, cons: LinearConstraints, start: Vec<f64> },
}

fn layout(set: &PolytopeSet, level: f64) -> Layout {
    let m = set.dim();
    let mu = set.weights();
    if let Some(normals) = set.normals() {
        let mut rows = Vec::new();
        for i in 0..m {
            let mut r = vec![0.0; m];
            r[i] = -1.0;
            rows.push((r, 0.0));
        }
        let mut worst: f64 = 0.0;
        for w in normals {
            let r: Vec<f64> = (0..m).map(|i| mu[i] * w[i]).collect();
            worst = worst.max(r.iter().sum());
            rows.push((r, level));
        }
        let start = vec![0.5 * level / worst; m];
        Layout::Normals { cons: LinearConstraints::from_rows(m, rows, vec![]), start }
    } else {
        let gens = set.generators().expect("one representation is present");
        let k = gens.len();
        let map = DMatrix::from_fn(m, k, |i, j| level * gens[j][i]);
        let mut rows = Vec::new();
        for j in 0..k {
            let mut r = vec![0.0; k];
            r[j] = -1.0;
            rows.push((r, 0.0));
        }
        let cons = LinearConstraints::from_rows(k, rows, vec![(vec![1.0; k], 1.0)]);
        Layout::Generators { map, cons, start: vec![1.0 / k as f64; k] }
    }
}

fn run(
    p: &AbstractProblem,
    set: &PolytopeSet,
    level: f64,
    shape: Shape,
    opts: &SolveOptions,
    problem: &str,
) -> Result<SolveReport> {
    let mu = p.weights();
    let sol;
    let optimizer;
    let representation;
    match layout(set, level) {
        Layout::Normals { cons, start } => {
            let obj = SeparableObjective {
                mu,
                utils: &p.utilities,
                shape,
                map: None,
                offset: None,
                linear: vec![0.0; p.dim()],
            };
            sol = ipm::minimize(&obj, &cons, opts.start.as_deref().unwrap_or(&start), &opts.barrier)?;
            optimizer = sol.z.clone();
            representation = None;
        }
        Layout::Generators { map, cons, start } => {
            let k = map.ncols();
            let obj = SeparableObjective {
                mu,
                utils: &p.utilities,
                shape,
                map: Some(map.clone()),
                offset: None,
                linear: vec![0.0; k],
            };
            sol = ipm::minimize(&obj, &cons, opts.start.as_deref().unwrap_or(&start), &opts.barrier)?;
            optimizer = (&map * DVector::from_column_slice(&sol.z)).iter().copied().collect();
            representation = Some(sol.z.clone());
        }
    }
    let value = match shape {
        Shape::NegUtility => p.primal_objective(&optimizer),
        Shape::Conjugate => p.dual_objective(&optimizer),
        Shape::Truncated(n) => p.truncated_dual_objective(&optimizer, n),
    };
    Ok(SolveReport {
        problem: problem.into(),
        parameter: level,
        value: Extended::from_f64(value),
        optimizer,
        representation,
        stationarity: sol.stationarity,
        complementarity: sol.complementarity,
        newton_steps: sol.newton_steps,
        converged: sol.converged,
    })
}

/// `u(x)` and its maximizer in `C(x)`.
pub fn solve_abstract_primal(p: &AbstractProblem, x: f64, opts: &SolveOptions) -> Result<SolveReport> {
    check_level("x", x)?;
    run(p, &p.c, x, Shape::NegUtility, opts, "primal")
}

/// `v(y)` and its minimizer in `D(y)`.
pub fn solve_abstract_dual(p: &AbstractProblem, y: f64, opts: &SolveOptions) -> Result<SolveReport> {
    check_level("y", y)?;
    run(p, &p.d, y, Shape::Conjugate, opts, "dual")
}

/// `v^n(y) = inf_{η ∈ D(y)} Σ μ V^n(η)`.
pub fn solve_truncated_dual(p: &AbstractProblem, y: f64, n: f64, opts: &SolveOptions) -> Result<SolveReport> {
    check_level("y", y)?;
    check_level("n", n)?;
    run(p, &p.d, y, Shape::Truncated(n), opts, "truncated_dual")
}

/// `inf_λ Σ μ V(y((1 - ε) G λ + ε z̄))` over convex weights on the
/// generators `G` of `D`. With `z̄ > 0` every feasible point is strictly
/// positive.
pub fn solve_shrunk_dual(p: &AbstractProblem, y: f64, eps: f64, center: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    check_level("y", y)?;
    if !(0.0..=1.0).contains(&eps) || center.len() != p.dim() {
        return Err(Error::InvalidSet(format!("bad shrinkage: eps {eps}, centre of length {}", center.len())));
    }
    let Layout::Generators { map, cons, start } = layout(&p.d, y * (1.0 - eps)) else {
        return Err(Error::InvalidSet("shrinkage needs D given by generators".into()));
    };
    let k = map.ncols();
    let offset: Vec<f64> = center.iter().map(|c| y * eps * c).collect();
    let obj = SeparableObjective {
        mu: p.weights(),
        utils: &p.utilities,
        shape: Shape::Conjugate,
        map: Some(map.clone()),
        offset: Some(offset.clone()),
        linear: vec![0.0; k],
    };
    let sol = ipm::minimize(&obj, &cons, opts.start.as_deref().unwrap_or(&start), &opts.barrier)?;
    let optimizer: Vec<f64> =
        (&map * DVector::from_column_slice(&sol.z)).iter().zip(&offset).map(|(a, b)| a + b).collect();
    Ok(SolveReport {
        problem: "shrunk_dual".into(),
        parameter: y,
        value: Extended::from_f64(p.dual_objective(&optimizer)),
        optimizer,
        representation: Some(sol.z.clone()),
        stationarity: sol.stationarity,
        complementarity: sol.complementarity,
        newton_steps: sol.newton_steps,
        converged: sol.converged,
    })
}

/// `sup Σ μ U(x ξ)` over the convex hull of `columns`.
pub fn solve_primal_over_hull(p: &AbstractProblem, columns: &[Vec<f64>], x: f64, opts: &SolveOptions) -> Result<SolveReport> {
    check_level("x", x)?;
    let set = PolytopeSet::from_generators(p.weights().to_vec(), columns.to_vec())?;
    run(p, &set, x, Shape::NegUtility, opts, "primal_over_hull")
}

/// `sup_{ξ ∈ [0, n]^m} inf_{η ∈ D(y)} (Σ μ U(ξ) - ⟨ξ, η⟩)`, the inner
/// infimum being `-y · max_g ⟨ξ, g⟩` over points spanning `D`.
pub fn solve_sup_inf(p: &AbstractProblem, y: f64, n: f64, opts: &SolveOptions) -> Result<SolveReport> {
    check_level("y", y)?;
    check_level("n", n)?;
    let m = p.dim();
    let mu = p.weights();
    let gens = p.d.spanning_points()?;
    // variables (ξ, s); minimize -Σ μ U(ξ) + y s
    let mut rows = Vec::new();
    for i in 0..m {
        let mut r = vec![0.0; m + 1];
        r[i] = -1.0;
        rows.push((r.clone(), 0.0));
        r[i] = 1.0;
        rows.push((r, n));
    }
    for g in &gens {
        let mut r: Vec<f64> = (0..m).map(|i| mu[i] * g[i]).collect();
        r.push(-1.0);
        rows.push((r, 0.0));
    }
    let cons = LinearConstraints::from_rows(m + 1, rows, vec![]);
    let xi0 = 0.5 * n.min(1.0);
    let s0 = gens.iter().map(|g| p.pairing(&vec![xi0; m], g)).fold(0.0, f64::max) + 1.0;
    let mut start = vec![xi0; m];
    start.push(s0);
    let mut linear = vec![0.0; m + 1];
    linear[m] = y;
    let obj = SeparableObjective { mu, utils: &p.utilities, shape: Shape::NegUtility, map: None, offset: None, linear };
    let sol = ipm::minimize(&obj, &cons, opts.start.as_deref().unwrap_or(&start), &opts.barrier)?;
    let xi = sol.z[..m].to_vec();
    let inner = gens.iter().map(|g| p.pairing(&xi, g)).fold(0.0, f64::max);
    let value = p.primal_objective(&xi) - y * inner;
    Ok(SolveReport {
        problem: "sup_inf".into(),
        parameter: y,
        value: Extended::from_f64(value),
        optimizer: xi,
        representation: None,
        stationarity: sol.stationarity,
        complementarity: sol.complementarity,
        newton_steps: sol.newton_steps,
        converged: sol.converged,
    })
}

/// `sup_x (u(x) - x y)` through primal solves, bracketed from a dual guess
/// of the maximizer.
pub fn conjugate_of_primal(p: &AbstractProblem, y: f64, guess: f64, opts: &SolveOptions) -> Result<(f64, f64)> {
    scalar::max_over_positive(|x| Ok(solve_abstract_primal(p, x, opts)?.value_f64() - x * y), guess, 1e-7)
}

/// `inf_y (v(y) + x y)` through dual solves.
pub fn conjugate_of_dual(p: &AbstractProblem, x: f64, guess: f64, opts: &SolveOptions) -> Result<(f64, f64)> {
    let (arg, neg) = scalar::max_over_positive(|y| Ok(-(solve_abstract_dual(p, y, opts)?.value_f64() + x * y)), guess, 1e-7)?;
    Ok((arg, -neg))
}

pub fn primal_derivative(p: &AbstractProblem, x: f64, opts: &SolveOptions) -> Result<f64> {
    scalar::richardson_derivative(|s| Ok(solve_abstract_primal(p, s, opts)?.value_f64()), x)
}

pub fn dual_derivative(p: &AbstractProblem, y: f64, opts: &SolveOptions) -> Result<f64> {
    scalar::richardson_derivative(|s| Ok(solve_abstract_dual(p, s, opts)?.value_f64()), y)
}

/// Largest violation of `v(y) ≥ u(x) - x y` over the grids.
pub fn subconjugacy_violation(p: &AbstractProblem, xs: &[f64], ys: &[f64], opts: &SolveOptions) -> Result<f64> {
    let us: Vec<f64> = xs.iter().map(|&x| solve_abstract_primal(p, x, opts).map(|r| r.value_f64())).collect::<Result<_>>()?;
    let mut worst = f64::NEG_INFINITY;
    for &y in ys {
        let v = solve_abstract_dual(p, y, opts)?.value_f64();
        for (&x, &u) in xs.iter().zip(&us) {
            worst = worst.max(u - x * y - v);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility_field::Family;

    fn log_problem(mu: Vec<f64>, normals: Vec<Vec<f64>>) -> AbstractProblem {
        let m = mu.len();
        let c = PolytopeSet::from_normals(mu.clone(), normals.clone()).unwrap();
        let d = PolytopeSet::from_generators(mu, normals).unwrap();
        let u = vec![ScalarUtility::new(Family::Log, 1.0, 1.0).unwrap(); m];
        AbstractProblem::new(c, d, u).unwrap()
    }

    #[test]
    fn single_budget_log_closed_form() {
        // C = {ξ ≥ 0 : Σ μ ξ w ≤ 1}: log optimum ξ_i = x / (M w_i) with M = Σμ
        let mu = vec![0.5, 0.25, 0.25];
        let w = vec![2.0, 1.0, 0.5];
        let p = log_problem(mu.clone(), vec![w.clone()]);
        let r = solve_abstract_primal(&p, 2.0, &SolveOptions::default()).unwrap();
        for i in 0..3 {
            assert!((r.optimizer[i] - 2.0 / w[i]).abs() < 1e-8, "{:?}", r.optimizer);
        }
        let exact: f64 = (0..3).map(|i| mu[i] * (2.0 / w[i]).ln()).sum();
        assert!((r.value_f64() - exact).abs() < 1e-9);
        assert!(r.stationarity < 1e-8);
        // dual: D = segment to w, v(y) = Σ μ (-log(y w) - 1)
        let d = solve_abstract_dual(&p, 0.5, &SolveOptions::default()).unwrap();
        let vexact: f64 = (0..3).map(|i| mu[i] * (-(0.5 * w[i]).ln() - 1.0)).sum();
        assert!((d.value_f64() - vexact).abs() < 1e-9);
    }

    #[test]
    fn truncated_dual_is_below_dual_and_increasing() {
        let p = log_problem(vec![0.5, 0.5], vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        let opts = SolveOptions::default();
        let v = solve_abstract_dual(&p, 1.0, &opts).unwrap().value_f64();
        let mut prev = f64::NEG_INFINITY;
        for n in [0.5, 1.0, 2.0, 10.0, 1000.0] {
            let vn = solve_truncated_dual(&p, 1.0, n, &opts).unwrap().value_f64();
            assert!(vn >= prev - 1e-10 && vn <= v + 1e-10);
            prev = vn;
        }
        assert!((prev - v).abs() < 1e-8);
    }

    #[test]
    fn rejects_mismatched_sets() {
        let c = PolytopeSet::from_normals(vec![1.0, 1.0], vec![vec![1.0, 1.0]]).unwrap();
        let d = PolytopeSet::from_generators(vec![1.0], vec![vec![1.0]]).unwrap();
        let u = vec![ScalarUtility::new(Family::Log, 1.0, 1.0).unwrap(); 2];
        assert!(AbstractProblem::new(c, d, u).is_err());
    }
}
