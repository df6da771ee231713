//! Market-level solves: the bridged abstract problem plus replication of the
//! optimal plan and the deflator behind the dual optimizer.

use serde::Serialize;

use crate::abstract_core::{self, AbstractProblem, SolveOptions, SolveReport};
use crate::error::Result;
use crate::market::{superhedge, wealth_process, MarketModel};
use crate::scalar;
use crate::utility_field::Extended;

/// Leaf densities below this count as zero for attainment in `Z`.
pub const ATTAINMENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NodeValue {
    pub node: u64,
    pub step: usize,
    pub mass: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NodeHolding {
    pub node: u64,
    pub holdings: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MarketSolveReport {
    pub problem: String,
    pub parameter: f64,
    pub value: Extended,
    /// Optimizer on every atom; null atoms carry 0.
    pub optimizer: Vec<NodeValue>,
    pub stationarity: f64,
    pub complementarity: f64,
    pub newton_steps: usize,
    pub converged: bool,
    /// Replicating holdings for the optimal plan (primal only).
    pub strategy: Option<Vec<NodeHolding>>,
    pub required_capital: Option<f64>,
    pub min_wealth: Option<f64>,
    /// Deflator process behind the dual optimizer (dual only).
    pub deflator: Option<Vec<NodeValue>>,
    pub min_deflator_density: Option<f64>,
    /// Whether the dual optimizer comes from a strictly positive deflator.
    pub attained_in_z: Option<bool>,
}

pub struct MarketSolver<'a> {
    pub model: &'a MarketModel,
    pub problem: AbstractProblem,
    pub options: SolveOptions,
}

impl<'a> MarketSolver<'a> {
    pub fn new(model: &'a MarketModel) -> Result<Self> {
        Ok(MarketSolver { model, problem: model.bridge()?, options: SolveOptions::default() })
    }

    fn node_values(&self, values: &[f64]) -> Vec<NodeValue> {
        let m = self.model;
        (0..m.tree.len())
            .map(|k| NodeValue { node: m.tree.id(k), step: m.tree.step(k), mass: m.measure.mass()[k], value: values[k] })
            .collect()
    }

    pub fn primal(&self, x: f64) -> Result<MarketSolveReport> {
        let r = abstract_core::solve_abstract_primal(&self.problem, x, &self.options)?;
        let m = self.model;
        let c = m.embed(&r.optimizer, 0.0);
        let (need, strategy) = superhedge(&m.tree, &m.prices, &m.clock, &c)?;
        let wealth = wealth_process(&m.tree, x, &strategy, &c, &m.prices, &m.clock)?;
        let min_wealth = wealth.values().iter().copied().fold(f64::INFINITY, f64::min);
        let holdings = (0..m.tree.len())
            .filter(|&k| !m.tree.is_leaf(k))
            .map(|k| NodeHolding { node: m.tree.id(k), holdings: strategy.holdings[k].clone() })
            .collect();
        Ok(MarketSolveReport {
            problem: "primal".into(),
            parameter: x,
            value: r.value,
            optimizer: self.node_values(c.values()),
            stationarity: r.stationarity,
            complementarity: r.complementarity,
            newton_steps: r.newton_steps,
            converged: r.converged,
            strategy: Some(holdings),
            required_capital: Some(need),
            min_wealth: Some(min_wealth),
            deflator: None,
            min_deflator_density: None,
            attained_in_z: None,
        })
    }

    pub fn dual(&self, y: f64) -> Result<MarketSolveReport> {
        let r = abstract_core::solve_abstract_dual(&self.problem, y, &self.options)?;
        self.dual_report(&r, y)
    }

    pub fn dual_report(&self, r: &SolveReport, y: f64) -> Result<MarketSolveReport> {
        let m = self.model;
        let lambda = r.representation.clone().expect("the dual domain is given by generators");
        let z = m.deflator_mix(&lambda)?;
        let leaf_min = m.tree.leaves().iter().map(|&l| z[l]).fold(f64::INFINITY, f64::min);
        let eta = m.embed(&r.optimizer, 0.0);
        Ok(MarketSolveReport {
            problem: "dual".into(),
            parameter: y,
            value: r.value,
            optimizer: self.node_values(eta.values()),
            stationarity: r.stationarity,
            complementarity: r.complementarity,
            newton_steps: r.newton_steps,
            converged: r.converged,
            strategy: None,
            required_capital: None,
            min_wealth: None,
            deflator: Some(self.node_values(&z)),
            min_deflator_density: Some(leaf_min),
            attained_in_z: Some(leaf_min >= ATTAINMENT_TOL),
        })
    }

    pub fn u(&self, x: f64) -> Result<f64> {
        Ok(abstract_core::solve_abstract_primal(&self.problem, x, &self.options)?.value_f64())
    }

    pub fn v(&self, y: f64) -> Result<f64> {
        Ok(abstract_core::solve_abstract_dual(&self.problem, y, &self.options)?.value_f64())
    }

    pub fn u_prime(&self, x: f64) -> Result<f64> {
        scalar::richardson_derivative(|s| self.u(s), x)
    }

    pub fn v_prime(&self, y: f64) -> Result<f64> {
        scalar::richardson_derivative(|s| self.v(s), y)
    }
}

pub fn solve_primal_market(model: &MarketModel, x: f64) -> Result<MarketSolveReport> {
    MarketSolver::new(model)?.primal(x)
}

pub fn solve_dual_market(model: &MarketModel, y: f64) -> Result<MarketSolveReport> {
    MarketSolver::new(model)?.dual(y)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    /// `x` for primal rows, `y` for dual rows.
    pub kind: String,
    pub point: f64,
    pub u: Option<f64>,
    pub u_prime: Option<f64>,
    pub v: Option<f64>,
    pub v_prime: Option<f64>,
    pub status: String,
}

/// Values and derivatives over grids; a failed point is reported in its
/// row and the sweep moves on.
pub fn sweep_value_functions(model: &MarketModel, xs: &[f64], ys: &[f64]) -> Result<Vec<SweepRow>> {
    Ok(sweep_with(&MarketSolver::new(model)?, xs, ys))
}

pub fn sweep_with(s: &MarketSolver, xs: &[f64], ys: &[f64]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &x in xs {
        let row = match s.u(x).and_then(|u| Ok((u, s.u_prime(x)?))) {
            Ok((u, du)) => SweepRow { kind: "x".into(), point: x, u: Some(u), u_prime: Some(du), v: None, v_prime: None, status: "ok".into() },
            Err(e) => SweepRow { kind: "x".into(), point: x, u: None, u_prime: None, v: None, v_prime: None, status: e.to_string() },
        };
        rows.push(row);
    }
    for &y in ys {
        let row = match s.v(y).and_then(|v| Ok((v, s.v_prime(y)?))) {
            Ok((v, dv)) => SweepRow { kind: "y".into(), point: y, u: None, u_prime: None, v: Some(v), v_prime: Some(dv), status: "ok".into() },
            Err(e) => SweepRow { kind: "y".into(), point: y, u: None, u_prime: None, v: None, v_prime: None, status: e.to_string() },
        };
        rows.push(row);
    }
    rows
}
