//! Frictionless markets on event trees: price processes, self-financing
//! wealth, equivalent deflators and admissible consumption.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::abstract_core::AbstractProblem;
use crate::clock::StochasticClock;
use crate::error::{Error, Result};
use crate::finite_basis::{AtomMeasure, EventTree, OptionalProcess, AE_TOL};
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::polytope::{enumerate_vertices, PolytopeSet};
use crate::utility_field::{ScalarUtility, UtilityField};

/// Default leaf count above which deflator vertices are not enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Strictly positive asset prices, one vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceProcess {
    tree: u64,
    prices: Vec<Vec<f64>>,
}

impl PriceProcess {
    pub fn new(tree: &EventTree, prices: Vec<Vec<f64>>) -> Result<Self> {
        if prices.len() != tree.len() {
            return Err(Error::InvalidMarket(format!("{} price vectors for {} nodes", prices.len(), tree.len())));
        }
        let d = prices[0].len();
        if d == 0 {
            return Err(Error::InvalidMarket("at least one asset is required".into()));
        }
        for (k, p) in prices.iter().enumerate() {
            if p.len() != d {
                return Err(Error::InvalidMarket(format!("node {} has {} prices, expected {d}", tree.id(k), p.len())));
            }
            if p.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidMarket(format!("prices at node {} must be positive and finite", tree.id(k))));
            }
        }
        Ok(PriceProcess { tree: tree.signature(), prices })
    }

    /// Builds from asset-major arrays `by_asset[i][node]`.
    pub fn from_assets(tree: &EventTree, by_asset: &[Vec<f64>]) -> Result<Self> {
        if by_asset.is_empty() {
            return Err(Error::InvalidMarket("at least one asset is required".into()));
        }
        for a in by_asset {
            if a.len() != tree.len() {
                return Err(Error::InvalidMarket(format!("asset has {} prices for {} nodes", a.len(), tree.len())));
            }
        }
        let prices = (0..tree.len()).map(|k| by_asset.iter().map(|a| a[k]).collect()).collect();
        Self::new(tree, prices)
    }

    pub fn assets(&self) -> usize {
        self.prices[0].len()
    }

    pub fn at(&self, node: usize) -> &[f64] {
        &self.prices[node]
    }

    pub fn tree_signature(&self) -> u64 {
        self.tree
    }
}

/// Holdings chosen at each node for the step to its children.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strategy {
    pub holdings: Vec<Vec<f64>>,
}

/// `V_root = x`, `V_child = V_n + H_n·(S_child - S_n) - c_child Δκ_child`.
pub fn wealth_process(
    tree: &EventTree,
    x: f64,
    strategy: &Strategy,
    c: &OptionalProcess,
    prices: &PriceProcess,
    clock: &StochasticClock,
) -> Result<OptionalProcess> {
    if c.tree_signature() != tree.signature()
        || prices.tree_signature() != tree.signature()
        || clock.tree_signature() != tree.signature()
    {
        return Err(Error::TreeMismatch);
    }
    if strategy.holdings.len() != tree.len() {
        return Err(Error::InvalidMarket("strategy must hold a vector at every node".into()));
    }
    let mut v = vec![0.0; tree.len()];
    v[0] = x - c.at(0) * clock.increment(0);
    for k in 1..tree.len() {
        let p = tree.parent(k).unwrap();
        let gain: f64 = strategy.holdings[p]
            .iter()
            .zip(prices.at(k).iter().zip(prices.at(p)))
            .map(|(h, (sc, sp))| h * (sc - sp))
            .sum();
        v[k] = v[p] + gain - c.at(k) * clock.increment(k);
    }
    OptionalProcess::new(tree, v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeflatorVertex {
    /// `dQ/dP` on the leaves, in leaf order.
    pub density: Vec<f64>,
    /// `Z_n = Q(n) / P(n)` at every node.
    pub process: Vec<f64>,
}

/// The polytope of equivalent-martingale densities of a market, with its
/// vertices when the leaf count is within the enumeration cap.
#[derive(Debug, Clone)]
pub struct DeflatorPolytope {
    tree: u64,
    /// Leaves below each node, as positions in the leaf list.
    below: Vec<Vec<usize>>,
    node_prob: Vec<f64>,
    leaf_prob: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    vertices: Option<Vec<DeflatorVertex>>,
    center: Vec<f64>,
}

impl DeflatorPolytope {
    pub fn vertices(&self) -> Option<&[DeflatorVertex]> {
        self.vertices.as_deref()
    }

    pub fn require_vertices(&self) -> Result<&[DeflatorVertex]> {
        self.vertices.as_deref().ok_or_else(|| Error::EnumerationCap {
            what: "deflator polytope".into(),
            size: self.leaf_prob.len(),
            cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    /// A strictly positive deflator process: the vertex barycenter, or a
    /// max-min interior point when vertices are not enumerated.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn tree_signature(&self) -> u64 {
        self.tree
    }

    /// Deflator process of leaf probabilities `q`.
    pub fn process_of(&self, q: &[f64]) -> Vec<f64> {
        self.below
            .iter()
            .zip(&self.node_prob)
            .map(|(ls, p)| ls.iter().map(|&l| q[l]).sum::<f64>() / p)
            .collect()
    }

    /// `sup_Z Σ_n w_n Z_n`.
    pub fn max_linear(&self, w: &[f64]) -> Result<f64> {
        if let Some(vs) = &self.vertices {
            return Ok(vs
                .iter()
                .map(|v| v.process.iter().zip(w).map(|(z, c)| z * c).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max));
        }
        let mut lp = LinearProgram::maximize();
        let coef: Vec<f64> = (0..self.leaf_prob.len())
            .map(|l| {
                self.below
                    .iter()
                    .zip(&self.node_prob)
                    .zip(w)
                    .filter(|((ls, _), _)| ls.contains(&l))
                    .map(|((_, p), c)| c / p)
                    .sum()
            })
            .collect();
        let q: Vec<usize> = coef.iter().map(|&c| lp.nonneg(c)).collect();
        for (r, &b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            lp.constraint(q.iter().zip(r).map(|(&v, &a)| (v, a)).collect(), Cmp::Eq, b);
        }
        Ok(lp.solve_optimal()?.0)
    }
}

/// Vertices of the deflator polytope in leaf-probability coordinates.
pub fn enumerate_deflators(tree: &EventTree, prices: &PriceProcess, cap: usize) -> Result<DeflatorPolytope> {
    if prices.tree_signature() != tree.signature() {
        return Err(Error::TreeMismatch);
    }
    let leaves = tree.leaves();
    let nl = leaves.len();
    let mut leaf_pos = vec![usize::MAX; tree.len()];
    for (i, &l) in leaves.iter().enumerate() {
        leaf_pos[l] = i;
    }
    let below: Vec<Vec<usize>> = (0..tree.len()).map(|k| tree.leaves_under(k).into_iter().map(|l| leaf_pos[l]).collect()).collect();

    let mut eq_rows = vec![vec![1.0; nl]];
    let mut eq_rhs = vec![1.0];
    for n in 0..tree.len() {
        if tree.is_leaf(n) {
            continue;
        }
        for i in 0..prices.assets() {
            let mut row = vec![0.0; nl];
            for &j in tree.children(n) {
                let diff = prices.at(j)[i] - prices.at(n)[i];
                for &l in &below[j] {
                    row[l] += diff;
                }
            }
            if row.iter().any(|&v| v != 0.0) {
                eq_rows.push(row);
                eq_rhs.push(0.0);
            }
        }
    }
    let leaf_prob: Vec<f64> = leaves.iter().map(|&l| tree.prob(l)).collect();
    let node_prob: Vec<f64> = (0..tree.len()).map(|k| tree.prob(k)).collect();

    // max ε with dQ/dP ≥ ε on every leaf
    let mut lp = LinearProgram::maximize();
    let q: Vec<usize> = (0..nl).map(|_| lp.nonneg(0.0)).collect();
    let eps = lp.var(1.0, f64::NEG_INFINITY, 1.0);
    for (r, &b) in eq_rows.iter().zip(&eq_rhs) {
        lp.constraint(q.iter().zip(r).map(|(&v, &a)| (v, a)).collect(), Cmp::Eq, b);
    }
    for l in 0..nl {
        lp.constraint(vec![(q[l], 1.0), (eps, -leaf_prob[l])], Cmp::Ge, 0.0);
    }
    let interior = match lp.solve()? {
        LpOutcome::Optimal { objective, x } if objective > 1e-12 => x[..nl].to_vec(),
        LpOutcome::Optimal { .. } | LpOutcome::Infeasible => {
            return Err(Error::NoPositiveDeflator("the market admits arbitrage".into()))
        }
        LpOutcome::Unbounded => return Err(Error::Lp("interior program unbounded".into())),
    };

    let mut poly = DeflatorPolytope {
        tree: tree.signature(),
        below,
        node_prob,
        leaf_prob,
        eq_rows,
        eq_rhs,
        vertices: None,
        center: Vec::new(),
    };
    if nl <= cap {
        let a: Vec<Vec<f64>> = (0..nl)
            .map(|l| {
                let mut r = vec![0.0; nl];
                r[l] = -1.0;
                r
            })
            .collect();
        let qs = enumerate_vertices(&a, &vec![0.0; nl], &poly.eq_rows, &poly.eq_rhs)?;
        let mut vs: Vec<DeflatorVertex> = qs
            .into_iter()
            .map(|mut q| {
                q.iter_mut().for_each(|v| {
                    if v.abs() < 1e-12 {
                        *v = 0.0
                    }
                });
                DeflatorVertex {
                    density: q.iter().zip(&poly.leaf_prob).map(|(a, p)| a / p).collect(),
                    process: poly.process_of(&q),
                }
            })
            .collect();
        vs.sort_by(|a, b| b.density.partial_cmp(&a.density).unwrap());
        let k = vs.len() as f64;
        poly.center = (0..tree.len()).map(|n| vs.iter().map(|v| v.process[n]).sum::<f64>() / k).collect();
        poly.vertices = Some(vs);
    } else {
        poly.center = poly.process_of(&interior);
    }
    Ok(poly)
}

/// Outcome of the superreplication test for a consumption plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradingVerdict {
    pub admissible: bool,
    /// Least initial capital that finances the plan.
    pub required_capital: f64,
    /// Strategy financing the plan from `required_capital`.
    pub witness: Strategy,
}

/// Backward superreplication: `need_n = min w` with
/// `w + H·(S_j - S_n) ≥ c_j Δκ_j + need_j` for every child `j`.
pub fn superhedge(
    tree: &EventTree,
    prices: &PriceProcess,
    clock: &StochasticClock,
    c: &OptionalProcess,
) -> Result<(f64, Strategy)> {
    if c.tree_signature() != tree.signature() || prices.tree_signature() != tree.signature() {
        return Err(Error::TreeMismatch);
    }
    let d = prices.assets();
    let mut need = vec![0.0; tree.len()];
    let mut holdings = vec![vec![0.0; d]; tree.len()];
    for n in (0..tree.len()).rev() {
        if tree.is_leaf(n) {
            continue;
        }
        let kids = tree.children(n);
        let ds = DMatrix::from_fn(kids.len(), d, |k, i| prices.at(kids[k])[i] - prices.at(n)[i]);
        // holdings along the null space of the increments do nothing, but
        // roundoff there reads as arbitrage, so trade on the row space only
        let basis = row_space(&ds);
        let dg = &ds * &basis;
        let mut lp = LinearProgram::minimize();
        let w = lp.free(1.0);
        let g: Vec<usize> = (0..basis.ncols()).map(|_| lp.free(0.0)).collect();
        for (k, &j) in kids.iter().enumerate() {
            let mut terms = vec![(w, 1.0)];
            for (r, &gi) in g.iter().enumerate() {
                terms.push((gi, dg[(k, r)]));
            }
            lp.constraint(terms, Cmp::Ge, c.at(j) * clock.increment(j) + need[j]);
        }
        match lp.solve()? {
            LpOutcome::Optimal { x, .. } => {
                need[n] = x[w];
                let gv = DVector::from_iterator(g.len(), g.iter().map(|&i| x[i]));
                holdings[n] = (&basis * gv).iter().copied().collect();
            }
            LpOutcome::Unbounded => {
                return Err(Error::NoPositiveDeflator(format!("arbitrage at node {}", tree.id(n))))
            }
            LpOutcome::Infeasible => return Err(Error::Lp("replication program infeasible".into())),
        }
    }
    Ok((need[0] + c.at(0) * clock.increment(0), Strategy { holdings }))
}

/// Orthonormal basis (as columns) of the row space of `m`.
fn row_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.ncols();
    if m.nrows() == 0 || d == 0 {
        return DMatrix::zeros(d, 0);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| top > 0.0 && svd.singular_values[k] > 1e-10 * top).collect();
    DMatrix::from_fn(d, keep.len(), |i, r| vt[(keep[r], i)])
}

pub fn is_admissible_trading(
    tree: &EventTree,
    prices: &PriceProcess,
    clock: &StochasticClock,
    c: &OptionalProcess,
    x: f64,
) -> Result<TradingVerdict> {
    let (need, witness) = superhedge(tree, prices, clock, c)?;
    Ok(TradingVerdict { admissible: x >= need - AE_TOL, required_capital: need, witness })
}

/// `sup_Z E[∫ c Z dκ] ≤ x` over deflator vertices.
pub fn budget_cost(tree: &EventTree, deflators: &DeflatorPolytope, clock: &StochasticClock, c: &OptionalProcess) -> Result<f64> {
    if deflators.tree_signature() != tree.signature() || c.tree_signature() != tree.signature() {
        return Err(Error::TreeMismatch);
    }
    let w: Vec<f64> = (0..tree.len()).map(|k| tree.prob(k) * clock.increment(k) * c.at(k)).collect();
    deflators.max_linear(&w)
}

pub fn is_admissible_budget(
    tree: &EventTree,
    deflators: &DeflatorPolytope,
    clock: &StochasticClock,
    c: &OptionalProcess,
    x: f64,
) -> Result<bool> {
    Ok(budget_cost(tree, deflators, clock, c)? <= x + AE_TOL)
}

/// A complete model: tree, prices, clock, utilities and its deflators.
#[derive(Debug, Clone)]
pub struct MarketModel {
    pub tree: EventTree,
    pub prices: PriceProcess,
    pub clock: StochasticClock,
    pub utility: UtilityField,
    pub deflators: DeflatorPolytope,
    pub measure: AtomMeasure,
    support: Vec<usize>,
}

impl MarketModel {
    pub fn new(tree: EventTree, prices: PriceProcess, clock: StochasticClock, utility: UtilityField, cap: usize) -> Result<Self> {
        let sig = tree.signature();
        if prices.tree_signature() != sig || clock.tree_signature() != sig || utility.tree_signature() != sig {
            return Err(Error::TreeMismatch);
        }
        let deflators = enumerate_deflators(&tree, &prices, cap)?;
        let measure = clock.measure(&tree)?;
        let support = measure.support();
        Ok(MarketModel { tree, prices, clock, utility, deflators, measure, support })
    }

    /// Atoms of positive `P ⊗ dκ` mass, the coordinates of the bridged problem.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn support_weights(&self) -> Vec<f64> {
        self.support.iter().map(|&k| self.measure.mass()[k]).collect()
    }

    pub fn restrict(&self, values: &[f64]) -> Vec<f64> {
        self.support.iter().map(|&k| values[k]).collect()
    }

    /// Extends atom values to every node, with `fill` on null atoms.
    pub fn embed(&self, atoms: &[f64], fill: f64) -> OptionalProcess {
        let mut v = vec![fill; self.tree.len()];
        for (&k, &a) in self.support.iter().zip(atoms) {
            v[k] = a;
        }
        OptionalProcess::new(&self.tree, v).expect("length matches the tree")
    }

    pub fn deflator_generators(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.deflators.require_vertices()?.iter().map(|v| self.restrict(&v.process)).collect())
    }

    /// Deflator process with convex weights `lambda` over the vertices.
    pub fn deflator_mix(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let vs = self.deflators.require_vertices()?;
        Ok((0..self.tree.len()).map(|n| vs.iter().zip(lambda).map(|(v, l)| l * v.process[n]).sum()).collect())
    }

    pub fn utilities(&self) -> Vec<ScalarUtility> {
        self.support.iter().map(|&k| self.utility.at(k)).collect()
    }

    /// `A(1) = {c ≥ 0 : sup_Z ⟨c, Z⟩ ≤ 1}` on the support atoms.
    pub fn admissible_set(&self) -> Result<PolytopeSet> {
        PolytopeSet::from_normals(self.support_weights(), self.deflator_generators()?)
    }

    /// Solid hull of deflator processes restricted to the support atoms.
    pub fn dual_domain(&self) -> Result<PolytopeSet> {
        PolytopeSet::from_generators(self.support_weights(), self.deflator_generators()?)
    }

    /// The abstract problem with `C = A(1)` and `D` the solid deflator hull.
    pub fn bridge(&self) -> Result<AbstractProblem> {
        AbstractProblem::new(self.admissible_set()?, self.dual_domain()?, self.utilities())
    }

    /// `sup {⟨c, w⟩_μ : c financed from unit capital}` by one linear program
    /// over consumption, holdings and wealth.
    pub fn trading_support(&self, w: &[f64]) -> Result<f64> {
        let t = &self.tree;
        let d = self.prices.assets();
        let mass = self.measure.mass();
        let mut lp = LinearProgram::maximize();
        let mut cvar = vec![None; t.len()];
        for (k, &node) in self.support.iter().enumerate() {
            cvar[node] = Some(lp.nonneg(mass[node] * w[k]));
        }
        let wealth: Vec<usize> = (0..t.len()).map(|_| lp.nonneg(0.0)).collect();
        let hold: Vec<Vec<usize>> = (0..t.len())
            .map(|n| if t.is_leaf(n) { Vec::new() } else { (0..d).map(|_| lp.free(0.0)).collect() })
            .collect();
        lp.constraint(vec![(wealth[0], 1.0)], Cmp::Eq, 1.0);
        for k in 1..t.len() {
            let p = t.parent(k).unwrap();
            let mut terms = vec![(wealth[k], 1.0), (wealth[p], -1.0)];
            for i in 0..d {
                terms.push((hold[p][i], -(self.prices.at(k)[i] - self.prices.at(p)[i])));
            }
            if let Some(cv) = cvar[k] {
                terms.push((cv, self.clock.increment(k)));
            }
            lp.constraint(terms, Cmp::Eq, 0.0);
        }
        Ok(lp.solve_optimal()?.0)
    }

    /// Least capital financing the atom plan `c` by trading.
    pub fn trading_price(&self, c_atoms: &[f64]) -> Result<f64> {
        let c = self.embed(c_atoms, 0.0);
        Ok(superhedge(&self.tree, &self.prices, &self.clock, &c)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility_field::Family;

    pub(crate) fn binomial() -> (EventTree, PriceProcess) {
        let t = EventTree::regular(1, &[0.5, 0.5]).unwrap();
        let s = PriceProcess::from_assets(&t, &[vec![1.0, 2.0, 0.5]]).unwrap();
        (t, s)
    }

    fn trinomial() -> (EventTree, PriceProcess) {
        let t = EventTree::regular(1, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let s = PriceProcess::from_assets(&t, &[vec![1.0, 2.0, 1.0, 0.5]]).unwrap();
        (t, s)
    }

    #[test]
    fn binomial_deflator_is_unique() {
        let (t, s) = binomial();
        let d = enumerate_deflators(&t, &s, 20).unwrap();
        let vs = d.vertices().unwrap();
        assert_eq!(vs.len(), 1);
        assert!((vs[0].density[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((vs[0].density[1] - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn trinomial_deflator_vertices() {
        let (t, s) = trinomial();
        let d = enumerate_deflators(&t, &s, 20).unwrap();
        let mut dens: Vec<Vec<f64>> = d.vertices().unwrap().iter().map(|v| v.density.clone()).collect();
        dens.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(dens.len(), 2);
        let expect = [vec![0.0, 3.0, 0.0], vec![1.0, 0.0, 2.0]];
        for (a, b) in dens.iter().zip(&expect) {
            assert!(crate::polytope::max_abs_diff(a, b) < 1e-12, "{dens:?}");
        }
        // beyond the cap only the interior point is kept
        let capped = enumerate_deflators(&t, &s, 2).unwrap();
        assert!(capped.vertices().is_none());
        assert!(capped.center().iter().all(|&z| z > 0.0));
    }

    #[test]
    fn arbitrage_is_detected() {
        let t = EventTree::regular(1, &[0.5, 0.5]).unwrap();
        let s = PriceProcess::from_assets(&t, &[vec![1.0, 2.0, 1.5]]).unwrap();
        assert!(matches!(enumerate_deflators(&t, &s, 20), Err(Error::NoPositiveDeflator(_))));
    }

    #[test]
    fn wealth_and_superhedging_agree() {
        let (t, s) = binomial();
        let clock = StochasticClock::terminal(&t).unwrap();
        let c = OptionalProcess::new(&t, vec![0.0, 1.5, 0.75]).unwrap();
        let v = is_admissible_trading(&t, &s, &clock, &c, 1.0).unwrap();
        assert!(v.admissible);
        assert!((v.required_capital - 1.0).abs() < 1e-12);
        let w = wealth_process(&t, 1.0, &v.witness, &c, &s, &clock).unwrap();
        assert!((w.at(0) - 1.0).abs() < 1e-12 && w.at(1).abs() < 1e-12 && w.at(2).abs() < 1e-12);
        let d = enumerate_deflators(&t, &s, 20).unwrap();
        assert!((budget_cost(&t, &d, &clock, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bridge_uses_support_atoms() {
        let (t, s) = trinomial();
        let clock = StochasticClock::explicit(&t, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let u = UtilityField::uniform(&t, Family::power(2.0).unwrap()).unwrap();
        let m = MarketModel::new(t, s, clock, u, 20).unwrap();
        assert_eq!(m.support(), &[1, 3]);
        let p = m.bridge().unwrap();
        assert_eq!(p.dim(), 2);
        // trading support and normal-form support agree on a direction
        let w = [1.0, 0.3];
        let a = m.admissible_set().unwrap().support(&w).unwrap();
        assert!((m.trading_support(&w).unwrap() - a).abs() < 1e-9);
    }

    #[test]
    fn zero_clock_cannot_be_bridged() {
        let (t, _) = trinomial();
        assert!(StochasticClock::explicit(&t, vec![0.0; 4]).is_err());
    }
}
