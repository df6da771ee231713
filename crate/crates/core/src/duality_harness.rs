//! Numerical verification of the duality relations on concrete markets and
//! on abstract polar pairs. Every check yields one [`CheckRecord`]; records
//! are collected into a [`VerificationReport`] that serializes to JSON lines
//! and a CSV summary.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abstract_core::{self as ac, AbstractProblem, SolveOptions};
use crate::corpus::{self, Instance};
use crate::error::{Error, Result};
use crate::finite_basis::OptionalProcess;
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::market::{self, MarketModel, DEFAULT_ENUMERATION_CAP};
use crate::models;
use crate::oracle;
use crate::polytope::{max_abs_diff, PolytopeSet};
use crate::solvers::MarketSolver;
use crate::utility_field::Family;

pub const ORACLE_TOL: f64 = 1e-5;
pub const BICONJUGACY_TOL: f64 = 1e-5;
pub const SUBCONJUGACY_TOL: f64 = 1e-7;
pub const DUAL_RELATION_TOL: f64 = 1e-5;
pub const BUDGET_TOL: f64 = 1e-6;
pub const KKT_TOL: f64 = 1e-8;
pub const FEASIBILITY_TOL: f64 = 1e-8;
pub const INADA_LOW_X: f64 = 1e-4;
pub const INADA_HIGH_X: f64 = 1e4;
pub const INADA_LOW_THRESHOLD: f64 = 1e3;
pub const INADA_HIGH_THRESHOLD: f64 = 1e-3;
pub const RESTRICTED_TOL: f64 = 1e-5;
pub const POLAR_TOL: f64 = 1e-8;
pub const MARTINGALE_TOL: f64 = 1e-9;
pub const WEALTH_TOL: f64 = 1e-9;
pub const MINIMAX_GAP_TOL: f64 = 1e-7;
pub const MINIMAX_LIMIT_TOL: f64 = 1e-5;
pub const UNIQUENESS_TOL: f64 = 1e-7;
/// Leaf density below which a deflator counts as outside `Z`.
pub const NON_ATTAINMENT_TOL: f64 = 1e-8;

pub const X_GRID: [f64; 3] = [0.5, 1.0, 2.0];
pub const Y_GRID: [f64; 3] = [0.5, 1.0, 2.0];
pub const MINIMAX_CAPS: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];
pub const LEMMA5_INSTANCES: usize = 200;
pub const RANDOM_POLYTOPES: usize = 50;
pub const ABSTRACT_INSTANCES: usize = 12;
/// Largest atom count for the full vertex cross-check.
pub const VERTEX_CHECK_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theorem1,
    Theorem2,
    Prop1,
    Abstract,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Theorem1, Suite::Theorem2, Suite::Prop1, Suite::Abstract];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Prop1 => "prop1",
            Suite::Abstract => "abstract",
        }
    }
}

/// Which subset of `A` generates the restricted primal problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BSpec {
    /// Convex hull of the maximal vertices of `A(1)`.
    #[default]
    Maximal,
    /// `A(1)` itself.
    All,
    /// Convex hull of the vertices priced exactly 1 by every deflator.
    Replicable,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckRecord {
    pub suite: String,
    pub check: String,
    pub instance: String,
    pub anchor: String,
    pub gap: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attained_in_z: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SummaryRow {
    pub check: String,
    pub instances: usize,
    pub max_gap: Option<f64>,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn of_check<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a CheckRecord> {
        self.records.iter().filter(move |r| r.check == check)
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut by: BTreeMap<&str, (usize, usize, Option<f64>)> = BTreeMap::new();
        for r in &self.records {
            let e = by.entry(&r.check).or_insert((0, 0, None));
            e.0 += 1;
            e.1 += r.pass as usize;
            if let Some(g) = r.gap {
                e.2 = Some(e.2.map_or(g, |m: f64| m.max(g)));
            }
        }
        by.into_iter()
            .map(|(check, (n, ok, gap))| SummaryRow {
                check: check.to_string(),
                instances: n,
                max_gap: gap,
                pass_rate: ok as f64 / n as f64,
            })
            .collect()
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("check,instances,max_gap,pass_rate\n");
        for row in self.summary() {
            let gap = row.max_gap.map_or(String::new(), |g| format!("{g:e}"));
            out.push_str(&format!("{},{},{},{}\n", row.check, row.instances, gap, row.pass_rate));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct HarnessOptions {
    pub seed: u64,
    pub b_spec: BSpec,
    pub solve: SolveOptions,
}

impl HarnessOptions {
    pub fn new(seed: u64) -> Self {
        HarnessOptions { seed, b_spec: BSpec::default(), solve: SolveOptions::default() }
    }
}

/// Record builder for one suite and instance.
struct Ctx<'a> {
    suite: Suite,
    instance: &'a str,
}

impl Ctx<'_> {
    fn base(&self, check: &str, anchor: &str, tol: f64) -> CheckRecord {
        CheckRecord {
            suite: self.suite.name().into(),
            check: check.into(),
            instance: self.instance.into(),
            anchor: anchor.into(),
            gap: None,
            tolerance: tol,
            pass: false,
            status: String::new(),
            attained_in_z: None,
            detail: None,
        }
    }

    /// Passes when `gap <= tol`.
    fn measured(&self, check: &str, anchor: &str, gap: f64, tol: f64) -> CheckRecord {
        let mut r = self.base(check, anchor, tol);
        r.pass = gap <= tol;
        r.gap = gap.is_finite().then_some(gap);
        r.status = if r.pass { "pass".into() } else { "fail".into() };
        r
    }

    fn skipped(&self, check: &str, anchor: &str, tol: f64, reason: &str, pass: bool) -> CheckRecord {
        let mut r = self.base(check, anchor, tol);
        r.pass = pass;
        r.status = format!("skipped: {reason}");
        r
    }

    fn outcome(&self, check: &str, anchor: &str, tol: f64, res: Result<CheckRecord>) -> CheckRecord {
        res.unwrap_or_else(|e| {
            let mut r = self.base(check, anchor, tol);
            r.status = format!("error: {e}");
            r
        })
    }
}

fn with_detail(mut r: CheckRecord, detail: String) -> CheckRecord {
    r.detail = Some(detail);
    r
}

/// Independent random stream for one purpose under a seed.
pub fn instance_rng(seed: u64, salt: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in salt.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

// ---------------------------------------------------------------- oracle gate

const ANCHOR_ORACLE: &str = "interior-point value agrees with a derivative-free search on small instances";

/// Compares the barrier values of `u(1)` and `v(1)` with the search oracle;
/// returns the records and whether the gate is open.
pub fn oracle_gate(suite: Suite, id: &str, p: &AbstractProblem, opts: &HarnessOptions) -> (Vec<CheckRecord>, bool) {
    let ctx = Ctx { suite, instance: id };
    let (np, nd) = oracle::oracle_sizes(p);
    let mut out = Vec::new();
    for (check, n, primal) in [("oracle_primal", np, true), ("oracle_dual", nd, false)] {
        if n > oracle::ORACLE_MAX_VARS {
            let reason = format!("{n} variables exceed the oracle limit of {}", oracle::ORACLE_MAX_VARS);
            out.push(ctx.skipped(check, ANCHOR_ORACLE, ORACLE_TOL, &reason, true));
            continue;
        }
        let res = (|| {
            let (solver, reference) = if primal {
                (ac::solve_abstract_primal(p, 1.0, &opts.solve)?.value_f64(), oracle::oracle_primal(p, 1.0, opts.seed)?)
            } else {
                (ac::solve_abstract_dual(p, 1.0, &opts.solve)?.value_f64(), oracle::oracle_dual(p, 1.0, opts.seed)?)
            };
            let gap = (solver - reference).abs();
            Ok(with_detail(
                ctx.measured(check, ANCHOR_ORACLE, gap, ORACLE_TOL),
                format!("{n} variables, solver {solver:.12e}, oracle {reference:.12e}"),
            ))
        })();
        out.push(ctx.outcome(check, ANCHOR_ORACLE, ORACLE_TOL, res));
    }
    let open = out.iter().all(|r| r.pass);
    (out, open)
}

// ----------------------------------------------------------------- theorem 1

const ANCHOR_BICONJ_V: &str = "v(y) = sup_x [u(x) - x y]";
const ANCHOR_BICONJ_U: &str = "u(x) = inf_y [v(y) + x y]";
const ANCHOR_SUBCONJ: &str = "v(y) >= u(x) - x y for all x, y > 0";
const ANCHOR_INADA: &str = "u and -v are strictly increasing, strictly concave and satisfy the Inada conditions";
const ANCHOR_DUAL_REL: &str = "optimal dual process equals the marginal utility of optimal consumption";
const ANCHOR_BUDGET: &str = "E[int c Y dkappa] = x y at the optimum";
const ANCHOR_KKT: &str = "barrier solves meet first-order conditions";
const ANCHOR_FEASIBLE: &str = "optimal consumption is financed from x with nonnegative wealth";

/// `-v'(y) = ⟨I(η̂), η̂⟩ / y`, a cheap bracket centre for the conjugate search.
fn dual_slope(p: &AbstractProblem, y: f64, opts: &SolveOptions) -> Result<f64> {
    let r = ac::solve_abstract_dual(p, y, opts)?;
    let s: f64 = p
        .weights()
        .iter()
        .zip(p.utilities())
        .zip(&r.optimizer)
        .map(|((m, u), &e)| m * u.inv_marginal(e) * e)
        .sum();
    Ok(s / y)
}

/// `u'(x) = ⟨U'(ξ̂), ξ̂⟩ / x`.
fn primal_slope(p: &AbstractProblem, x: f64, opts: &SolveOptions) -> Result<f64> {
    let r = ac::solve_abstract_primal(p, x, opts)?;
    let s: f64 = p.weights().iter().zip(p.utilities()).zip(&r.optimizer).map(|((m, u), &c)| m * u.u1(c) * c).sum();
    Ok(s / x)
}

pub fn check_biconjugacy(ctx_suite: Suite, id: &str, p: &AbstractProblem, opts: &HarnessOptions) -> Vec<CheckRecord> {
    let ctx = Ctx { suite: ctx_suite, instance: id };
    let o = &opts.solve;
    let v_side = (|| {
        let mut worst: f64 = 0.0;
        for &y in &Y_GRID {
            let v = ac::solve_abstract_dual(p, y, o)?.value_f64();
            let (_, conj) = ac::conjugate_of_primal(p, y, dual_slope(p, y, o)?, o)?;
            worst = worst.max((v - conj).abs());
        }
        Ok(ctx.measured("biconjugacy_v", ANCHOR_BICONJ_V, worst, BICONJUGACY_TOL))
    })();
    let u_side = (|| {
        let mut worst: f64 = 0.0;
        for &x in &X_GRID {
            let u = ac::solve_abstract_primal(p, x, o)?.value_f64();
            let (_, conj) = ac::conjugate_of_dual(p, x, primal_slope(p, x, o)?, o)?;
            worst = worst.max((u - conj).abs());
        }
        Ok(ctx.measured("biconjugacy_u", ANCHOR_BICONJ_U, worst, BICONJUGACY_TOL))
    })();
    let sub = (|| {
        let grid = geometric(0.1, 10.0, 7);
        let viol = ac::subconjugacy_violation(p, &grid, &grid, o)?;
        Ok(ctx.measured("subconjugacy", ANCHOR_SUBCONJ, viol.max(0.0), SUBCONJUGACY_TOL))
    })();
    vec![
        ctx.outcome("biconjugacy_v", ANCHOR_BICONJ_V, BICONJUGACY_TOL, v_side),
        ctx.outcome("biconjugacy_u", ANCHOR_BICONJ_U, BICONJUGACY_TOL, u_side),
        ctx.outcome("subconjugacy", ANCHOR_SUBCONJ, SUBCONJUGACY_TOL, sub),
    ]
}

/// Shape of a value function's slope on the geometric grid `1e-4 .. 1e4`:
/// `f` is `u` (concave, `sign = 1`) or `v` (convex, `sign = -1`).
fn inada_records(
    ctx: &Ctx,
    name: &str,
    sign: f64,
    value: &dyn Fn(f64) -> Result<f64>,
) -> Result<(CheckRecord, CheckRecord)> {
    let grid = geometric(INADA_LOW_X, INADA_HIGH_X, 9);
    let vals: Vec<f64> = grid.iter().map(|&x| value(x)).collect::<Result<_>>()?;
    let slopes: Vec<f64> =
        grid.iter().map(|&x| crate::scalar::richardson_derivative(value, x).map(|d| sign * d)).collect::<Result<_>>()?;
    // violations: nonpositive slope, non-decreasing slope, midpoint concavity
    let mut worst: f64 = f64::NEG_INFINITY;
    for &s in &slopes {
        worst = worst.max(-s);
    }
    for w in slopes.windows(2) {
        worst = worst.max(w[1] - w[0]);
    }
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let mid = sign * value(0.5 * (grid[i] + grid[j]))?;
            let avg = 0.5 * sign * (vals[i] + vals[j]);
            worst = worst.max(avg - mid);
        }
    }
    let mut shape = ctx.measured(&format!("inada_shape_{name}"), ANCHOR_INADA, worst.max(0.0), 0.0);
    shape.pass = worst < 0.0;
    shape.status = if shape.pass { "pass".into() } else { "fail".into() };
    let lo = slopes[0];
    let hi = *slopes.last().unwrap();
    let ratio = (INADA_LOW_THRESHOLD / lo).max(hi / INADA_HIGH_THRESHOLD);
    let label = if name == "u" { "u'" } else { "-v'" };
    let threshold = with_detail(
        ctx.measured(&format!("inada_threshold_{name}"), ANCHOR_INADA, ratio, 1.0 - f64::EPSILON),
        format!(
            "{label}({INADA_LOW_X:e}) = {lo:.6e} (needs > {INADA_LOW_THRESHOLD:e}), {label}({INADA_HIGH_X:e}) = {hi:.6e} (needs < {INADA_HIGH_THRESHOLD:e})"
        ),
    );
    Ok((shape, threshold))
}

pub fn check_inada(suite: Suite, id: &str, p: &AbstractProblem, opts: &HarnessOptions) -> Vec<CheckRecord> {
    let ctx = Ctx { suite, instance: id };
    let o = &opts.solve;
    let mut out = Vec::new();
    for (name, sign) in [("u", 1.0), ("v", -1.0)] {
        let value = |s: f64| -> Result<f64> {
            if sign > 0.0 {
                Ok(ac::solve_abstract_primal(p, s, o)?.value_f64())
            } else {
                Ok(ac::solve_abstract_dual(p, s, o)?.value_f64())
            }
        };
        match inada_records(&ctx, name, sign, &value) {
            Ok((a, b)) => {
                out.push(a);
                out.push(b);
            }
            Err(e) => {
                for check in [format!("inada_shape_{name}"), format!("inada_threshold_{name}")] {
                    out.push(ctx.outcome(&check, ANCHOR_INADA, 0.0, Err(Error::Solver(e.to_string()))));
                }
            }
        }
    }
    out
}

/// Dual relations at `y = u'(x)`, plus solver residuals and, for markets,
/// replication of the optimal plan.
pub fn check_dual_relations(suite: Suite, id: &str, p: &AbstractProblem, model: Option<&MarketModel>, opts: &HarnessOptions) -> Vec<CheckRecord> {
    let ctx = Ctx { suite, instance: id };
    let o = &opts.solve;
    let res: Result<(f64, f64, f64, f64)> = (|| {
        let (mut rel, mut budget, mut kkt, mut feas): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
        for &x in &X_GRID {
            let y = ac::primal_derivative(p, x, o)?;
            let pr = ac::solve_abstract_primal(p, x, o)?;
            let du = ac::solve_abstract_dual(p, y, o)?;
            for ((u, &c), &e) in p.utilities().iter().zip(&pr.optimizer).zip(&du.optimizer) {
                rel = rel.max((e - u.u1(c)).abs());
            }
            budget = budget.max((p.pairing(&pr.optimizer, &du.optimizer) - x * y).abs());
            kkt = kkt.max(pr.stationarity).max(du.stationarity);
            if let Some(m) = model {
                let r = MarketSolver { model: m, problem: p.clone(), options: o.clone() }.primal(x)?;
                let need = r.required_capital.unwrap_or(f64::INFINITY);
                let low = r.min_wealth.unwrap_or(f64::NEG_INFINITY);
                feas = feas.max(need - x).max(-low);
            }
        }
        Ok((rel, budget, kkt, feas))
    })();
    match res {
        Ok((rel, budget, kkt, feas)) => {
            let mut out = vec![
                ctx.measured("dual_relation", ANCHOR_DUAL_REL, rel, DUAL_RELATION_TOL),
                ctx.measured("budget_identity", ANCHOR_BUDGET, budget, BUDGET_TOL),
                ctx.measured("kkt_residual", ANCHOR_KKT, kkt, KKT_TOL),
            ];
            if model.is_some() {
                out.push(ctx.measured("primal_feasibility", ANCHOR_FEASIBLE, feas.max(0.0), FEASIBILITY_TOL));
            }
            out
        }
        Err(e) => {
            let mut checks = vec![("dual_relation", ANCHOR_DUAL_REL), ("budget_identity", ANCHOR_BUDGET), ("kkt_residual", ANCHOR_KKT)];
            if model.is_some() {
                checks.push(("primal_feasibility", ANCHOR_FEASIBLE));
            }
            checks.into_iter().map(|(c, a)| ctx.outcome(c, a, 0.0, Err(Error::Solver(e.to_string())))).collect()
        }
    }
}

// ----------------------------------------------------------------- theorem 2

const ANCHOR_Z_INF: &str = "v(y) = inf over strictly positive deflators Z of E[int V(y Z) dkappa]";
const ANCHOR_B_SUP: &str = "u(x) = sup over a generating subset B of A of E[int U(x c) dkappa]";
const ANCHOR_NON_ATTAIN: &str = "the dual minimizer may lie outside the set of strictly positive deflators";

pub const SHRINK_STEPS: [f64; 10] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10];

/// Aitken's delta-squared on the last three terms.
pub fn aitken(s: &[f64]) -> f64 {
    let n = s.len();
    if n < 3 {
        return *s.last().unwrap_or(&f64::NAN);
    }
    let (a, b, c) = (s[n - 3], s[n - 2], s[n - 1]);
    let den = (c - b) - (b - a);
    let corr = (c - b) * (c - b) / den;
    if den == 0.0 || !corr.is_finite() || corr.abs() > 10.0 * (c - b).abs().max(f64::MIN_POSITIVE) {
        c
    } else {
        c - corr
    }
}

/// Infimum of the dual objective over strictly positive deflators, from the
/// ε-shrunk problems extrapolated to ε → 0.
pub fn z_infimum(model: &MarketModel, p: &AbstractProblem, y: f64, opts: &SolveOptions) -> Result<(f64, Vec<f64>)> {
    let center = model.restrict(model.deflators.center());
    let seq: Vec<f64> = SHRINK_STEPS
        .iter()
        .map(|&e| ac::solve_shrunk_dual(p, y, e, &center, opts).map(|r| r.value_f64()))
        .collect::<Result<_>>()?;
    Ok((aitken(&seq), seq))
}

fn lp_max_over_a(p: &AbstractProblem, g: &[f64], replicable: bool) -> Result<Option<Vec<f64>>> {
    let set = p.primal_set();
    let normals = set.normals().ok_or_else(|| Error::InvalidSet("A(1) must be given by normals".into()))?;
    let mu = p.weights();
    let mut lp = LinearProgram::maximize();
    let c: Vec<usize> = g.iter().map(|&w| lp.nonneg(w)).collect();
    let cmp = if replicable { Cmp::Eq } else { Cmp::Le };
    for w in normals {
        lp.constraint(c.iter().enumerate().map(|(i, &v)| (v, mu[i] * w[i])).collect(), cmp, 1.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => Ok(Some(c.iter().map(|&i| x[i].max(0.0)).collect())),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Unbounded("A(1) is unbounded".into())),
    }
}

/// `sup` of the primal objective over the convex hull of the chosen vertices
/// of `A(1)`, by column generation: each new column is an LP vertex for a
/// strictly positive gradient, hence a maximal vertex.
pub fn b_supremum(p: &AbstractProblem, x: f64, spec: BSpec, opts: &SolveOptions) -> Result<(f64, usize)> {
    if spec == BSpec::All {
        return Ok((ac::solve_abstract_primal(p, x, opts)?.value_f64(), 0));
    }
    let replicable = spec == BSpec::Replicable;
    let m = p.dim();
    let mu = p.weights().to_vec();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let push = |cols: &mut Vec<Vec<f64>>, c: Vec<f64>| -> bool {
        if cols.iter().any(|d| max_abs_diff(d, &c) <= 1e-12) {
            false
        } else {
            cols.push(c);
            true
        }
    };
    let none = || Error::InvalidSet("no plan in A(1) is priced 1 by every deflator".into());
    for i in 0..m {
        let g: Vec<f64> = (0..m).map(|k| mu[k] * if k == i { 1.0 } else { 1e-3 }).collect();
        let c = lp_max_over_a(p, &g, replicable)?.ok_or_else(none)?;
        push(&mut cols, c);
    }
    if (0..m).any(|i| cols.iter().all(|c| c[i] <= 0.0)) {
        return Err(Error::InvalidSet("the chosen vertices leave an atom uncovered".into()));
    }
    let mut value = f64::NEG_INFINITY;
    for _ in 0..200 {
        let r = ac::solve_primal_over_hull(p, &cols, x, opts)?;
        value = r.value_f64();
        let g: Vec<f64> = (0..m).map(|i| mu[i] * p.utilities()[i].u1(r.optimizer[i])).collect();
        let c = lp_max_over_a(p, &g, replicable)?.ok_or_else(none)?;
        let gain: f64 = g.iter().zip(&c).zip(&r.optimizer).map(|((w, a), b)| w * (x * a - b)).sum();
        if gain <= 1e-11 * (1.0 + value.abs()) || !push(&mut cols, c) {
            break;
        }
    }
    Ok((value, cols.len()))
}

pub fn check_theorem2(id: &str, model: &MarketModel, p: &AbstractProblem, opts: &HarnessOptions) -> Vec<CheckRecord> {
    let ctx = Ctx { suite: Suite::Theorem2, instance: id };
    let o = &opts.solve;
    let z = (|| {
        let mut worst: f64 = 0.0;
        for &y in &Y_GRID {
            let v = ac::solve_abstract_dual(p, y, o)?.value_f64();
            let (lim, _) = z_infimum(model, p, y, o)?;
            worst = worst.max((lim - v).abs());
        }
        let solver = MarketSolver { model, problem: p.clone(), options: o.clone() };
        let r = solver.dual(1.0)?;
        let mut rec = ctx.measured("z_infimum", ANCHOR_Z_INF, worst, RESTRICTED_TOL);
        rec.attained_in_z = r.attained_in_z;
        Ok(with_detail(rec, format!("min leaf density of the dual optimizer at y = 1: {:.3e}", r.min_deflator_density.unwrap_or(f64::NAN))))
    })();
    let b = (|| {
        let mut worst: f64 = 0.0;
        let mut cols = 0;
        for &x in &X_GRID {
            let u = ac::solve_abstract_primal(p, x, o)?.value_f64();
            let (sup, k) = b_supremum(p, x, opts.b_spec, o)?;
            cols = cols.max(k);
            worst = worst.max((sup - u).abs());
        }
        Ok(with_detail(
            ctx.measured("b_supremum", ANCHOR_B_SUP, worst, RESTRICTED_TOL),
            format!("B = {:?}, up to {cols} generating vertices", opts.b_spec).to_lowercase(),
        ))
    })();
    vec![ctx.outcome("z_infimum", ANCHOR_Z_INF, RESTRICTED_TOL, z), ctx.outcome("b_supremum", ANCHOR_B_SUP, RESTRICTED_TOL, b)]
}

/// Searches trinomial power-utility markets, from full clock mass on the
/// middle state down to none, for a dual optimizer outside `Z`.
pub fn non_attainment_search(opts: &HarnessOptions) -> CheckRecord {
    let ctx = Ctx { suite: Suite::Theorem2, instance: "trinomial-search" };
    let res = (|| {
        let mut tried = 0;
        for middle in [1.0, 0.5, 0.1, 0.0] {
            for gamma in [2.0, 3.0] {
                for &y in &Y_GRID {
                    tried += 1;
                    let model = models::trinomial(Family::power(gamma)?, middle)?;
                    let p = model.bridge()?;
                    let solver = MarketSolver { model: &model, problem: p.clone(), options: opts.solve.clone() };
                    let r = solver.dual(y)?;
                    let density = r.min_deflator_density.unwrap_or(f64::INFINITY);
                    if r.attained_in_z == Some(false) && density < NON_ATTAINMENT_TOL {
                        let v = r.value.finite().unwrap_or(f64::NAN);
                        let (lim, _) = z_infimum(&model, &p, y, &opts.solve)?;
                        let mut rec = ctx.measured("non_attainment", ANCHOR_NON_ATTAIN, (lim - v).abs(), RESTRICTED_TOL);
                        rec.attained_in_z = Some(false);
                        return Ok(with_detail(
                            rec,
                            format!(
                                "found after {tried} candidates: power({gamma}), middle clock mass {middle}, y = {y}; min leaf density {density:.3e}; v(y) = {v:.12e}, infimum over Z = {lim:.12e}"
                            ),
                        ));
                    }
                }
            }
        }
        let mut rec = ctx.base("non_attainment", ANCHOR_NON_ATTAIN, RESTRICTED_TOL);
        rec.status = format!("fail: no candidate out of {tried} has a dual optimizer outside Z");
        Ok(rec)
    })();
    ctx.outcome("non_attainment", ANCHOR_NON_ATTAIN, RESTRICTED_TOL, res)
}

// -------------------------------------------------------------- proposition 1

const ANCHOR_A_POLAR: &str = "A is the polar of Y: gauge of A equals support of Y";
const ANCHOR_Y_POLAR: &str = "Y is the polar of A: gauge of Y equals support of A";
const ANCHOR_VERTEX: &str = "vertex sets of A, Y and their polars agree";
const ANCHOR_STRUCTURE: &str = "A and Y are convex, solid, closed and contain a strictly positive element";
const ANCHOR_BRIDGING: &str = "sup over deflators equals sup over the dual domain, both at most x for admissible c";
const ANCHOR_MARTINGALE: &str = "deflator vertices make prices martingales";
const ANCHOR_LEMMA5: &str = "c is financed by trading from x iff its deflator cost is at most x";
const ANCHOR_WITNESS: &str = "the financing strategy keeps wealth nonnegative";

fn directions(model: &MarketModel, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let m = model.support().len();
    let mut dirs: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            e
        })
        .collect();
    dirs.push(vec![1.0; m]);
    dirs.extend(model.deflator_generators()?);
    for _ in 0..8 {
        dirs.push((0..m).map(|_| rng.random_range(0.05..1.0)).collect());
    }
    Ok(dirs)
}

/// Largest distance from a point of either list to the nearest point of the other.
pub fn vertex_set_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let one = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter().map(|p| y.iter().map(|q| max_abs_diff(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

pub fn check_proposition1(id: &str, model: &MarketModel, opts: &HarnessOptions) -> Vec<CheckRecord> {
    let ctx = Ctx { suite: Suite::Prop1, instance: id };
    let mut rng = instance_rng(opts.seed, id);
    let mut out = Vec::new();

    let polar_a = (|| {
        let y = model.dual_domain()?;
        let mut worst: f64 = 0.0;
        for w in directions(model, &mut rng)? {
            let gauge_a = model.trading_price(&w)?;
            let support_y = y.support(&w)?;
            worst = worst.max((gauge_a - support_y).abs() / support_y.max(1.0));
        }
        Ok(ctx.measured("a_polar_of_y", ANCHOR_A_POLAR, worst, POLAR_TOL))
    })();
    out.push(ctx.outcome("a_polar_of_y", ANCHOR_A_POLAR, POLAR_TOL, polar_a));

    let polar_y = (|| {
        let y = model.dual_domain()?;
        let mut worst: f64 = 0.0;
        for w in directions(model, &mut rng)? {
            let gauge_y = y.gauge(&w)?;
            let support_a = model.trading_support(&w)?;
            worst = worst.max((gauge_y - support_a).abs() / support_a.max(1.0));
        }
        Ok(ctx.measured("y_polar_of_a", ANCHOR_Y_POLAR, worst, POLAR_TOL))
    })();
    out.push(ctx.outcome("y_polar_of_a", ANCHOR_Y_POLAR, POLAR_TOL, polar_y));

    let m = model.support().len();
    if m > VERTEX_CHECK_DIM {
        let reason = format!("{m} atoms exceed the vertex check limit of {VERTEX_CHECK_DIM}");
        out.push(ctx.skipped("vertex_cross_check", ANCHOR_VERTEX, POLAR_TOL, &reason, true));
    } else {
        let vertex = (|| {
            let a = model.admissible_set()?;
            let y = model.dual_domain()?;
            let va = a.vertices()?;
            // every vertex of Y° is financed from unit capital
            let mut worst: f64 = 0.0;
            for v in &va {
                worst = worst.max(model.trading_price(v)? - 1.0);
            }
            // A° recomputed from the vertices of A has the vertices of Y
            let a_polar = PolytopeSet::from_generators(a.weights().to_vec(), va.clone())?.polar()?;
            worst = worst.max(vertex_set_distance(&a_polar.vertices()?, &y.vertices()?));
            Ok(with_detail(
                ctx.measured("vertex_cross_check", ANCHOR_VERTEX, worst.max(0.0), POLAR_TOL),
                format!("{} vertices of A", va.len()),
            ))
        })();
        out.push(ctx.outcome("vertex_cross_check", ANCHOR_VERTEX, POLAR_TOL, vertex));
    }

    let structure = (|| {
        let ones = vec![1.0; m];
        let price = model.trading_price(&ones)?;
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::InvalidMarket(format!("unit plan has price {price}")));
        }
        let mut worst: f64 = 0.0;
        // strictly positive elements
        let c_pos: Vec<f64> = ones.iter().map(|v| v / price).collect();
        worst = worst.max(model.trading_price(&c_pos)? - 1.0);
        let center = model.restrict(model.deflators.center());
        if center.iter().any(|&z| z <= 0.0) {
            worst = worst.max(1.0);
        }
        // solidity and convexity on random plans scaled into A
        let y = model.dual_domain()?;
        for _ in 0..4 {
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
            let s = model.trading_price(&raw)?;
            let c: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let cut: Vec<f64> = c.iter().map(|&v| if rng.random_bool(0.5) { v } else { 0.0 }).collect();
            worst = worst.max(model.trading_price(&cut)? - 1.0);
            let mid: Vec<f64> = c.iter().zip(&c_pos).map(|(a, b)| 0.5 * (a + b)).collect();
            worst = worst.max(model.trading_price(&mid)? - 1.0);
            let eta: Vec<f64> = center.iter().map(|&z| z * rng.random_range(0.0..1.0)).collect();
            worst = worst.max(y.gauge(&eta)? - 1.0);
        }
        Ok(ctx.measured("structure", ANCHOR_STRUCTURE, worst.max(0.0), POLAR_TOL))
    })();
    out.push(ctx.outcome("structure", ANCHOR_STRUCTURE, POLAR_TOL, structure));

    let bridging = (|| {
        let y = model.dual_domain()?;
        let mut worst: f64 = 0.0;
        for _ in 0..4 {
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
            let s = model.trading_price(&raw)?;
            let c = model.embed(&raw.iter().map(|v| v / s).collect::<Vec<_>>(), 0.0);
            let over_z = market::budget_cost(&model.tree, &model.deflators, &model.clock, &c)?;
            let over_y = y.support(&model.restrict(c.values()))?;
            worst = worst.max((over_z - over_y).abs()).max(over_z - 1.0).max(over_y - 1.0);
        }
        Ok(ctx.measured("bridging", ANCHOR_BRIDGING, worst.max(0.0), POLAR_TOL))
    })();
    out.push(ctx.outcome("bridging", ANCHOR_BRIDGING, POLAR_TOL, bridging));

    let mart = (|| {
        let t = &model.tree;
        let mut worst: f64 = 0.0;
        for v in model.deflators.require_vertices()? {
            let z = &v.process;
            worst = worst.max((z[0] - 1.0).abs());
            for n in 0..t.len() {
                worst = worst.max(-z[n]);
                if t.is_leaf(n) {
                    continue;
                }
                let e: f64 = t.children(n).iter().map(|&j| t.cond_prob(j) * z[j]).sum();
                worst = worst.max((e - z[n]).abs());
                for a in 0..model.prices.assets() {
                    let e: f64 = t.children(n).iter().map(|&j| t.cond_prob(j) * z[j] * model.prices.at(j)[a]).sum();
                    worst = worst.max((e - z[n] * model.prices.at(n)[a]).abs());
                }
            }
        }
        Ok(ctx.measured("deflator_martingale", ANCHOR_MARTINGALE, worst, MARTINGALE_TOL))
    })();
    out.push(ctx.outcome("deflator_martingale", ANCHOR_MARTINGALE, MARTINGALE_TOL, mart));
    out
}

/// One random plan and capital for the admissibility equivalence.
pub struct Lemma5Case {
    pub model: MarketModel,
    pub plan: OptionalProcess,
    pub x: f64,
}

pub fn lemma5_case(rng: &mut ChaCha8Rng) -> Result<Lemma5Case> {
    let depth = rng.random_range(1..=3);
    let tree = corpus::random_tree(rng, depth, corpus::MAX_LEAVES)?;
    let assets = rng.random_range(1..=2);
    let prices = corpus::random_prices(rng, &tree, assets)?;
    let clock = corpus::random_clock(rng, &tree)?;
    let utility = crate::utility_field::UtilityField::uniform(&tree, Family::Log)?;
    let model = MarketModel::new(tree, prices, clock, utility, DEFAULT_ENUMERATION_CAP)?;
    let vals: Vec<f64> = (0..model.tree.len()).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..2.0) }).collect();
    let plan = OptionalProcess::new(&model.tree, vals)?;
    let cost = market::budget_cost(&model.tree, &model.deflators, &model.clock, &plan)?;
    let x = cost * rng.random_range(0.5..1.5);
    Ok(Lemma5Case { model, plan, x })
}

/// Admissibility by trading against admissibility by deflator budget on
/// seeded random markets and plans.
pub fn check_lemma5(seed: u64, count: usize) -> Vec<CheckRecord> {
    let ctx = Ctx { suite: Suite::Prop1, instance: "lemma5-batch" };
    let mut rng = instance_rng(seed, "lemma5");
    let res: Result<(usize, f64, f64)> = (|| {
        let mut disagree = 0usize;
        let mut wealth: f64 = 0.0;
        let mut price_gap: f64 = 0.0;
        for _ in 0..count {
            let case = lemma5_case(&mut rng)?;
            let m = &case.model;
            let trade = market::is_admissible_trading(&m.tree, &m.prices, &m.clock, &case.plan, case.x)?;
            let budget = market::is_admissible_budget(&m.tree, &m.deflators, &m.clock, &case.plan, case.x)?;
            if trade.admissible != budget {
                disagree += 1;
            }
            let cost = market::budget_cost(&m.tree, &m.deflators, &m.clock, &case.plan)?;
            price_gap = price_gap.max((trade.required_capital - cost).abs());
            if trade.admissible {
                let w = market::wealth_process(&m.tree, case.x, &trade.witness, &case.plan, &m.prices, &m.clock)?;
                wealth = wealth.max(-w.values().iter().copied().fold(f64::INFINITY, f64::min));
            }
        }
        Ok((disagree, wealth.max(0.0), price_gap))
    })();
    match res {
        Ok((d, w, g)) => vec![
            with_detail(
                ctx.measured("admissibility_equivalence", ANCHOR_LEMMA5, d as f64, 0.0),
                format!("{count} instances, {d} disagreements, largest price gap {g:.3e}"),
            ),
            ctx.measured("witness_wealth", ANCHOR_WITNESS, w, WEALTH_TOL),
        ],
        Err(e) => vec![
            ctx.outcome("admissibility_equivalence", ANCHOR_LEMMA5, 0.0, Err(Error::Solver(e.to_string()))),
            ctx.outcome("witness_wealth", ANCHOR_WITNESS, WEALTH_TOL, Err(e)),
        ],
    }
}

// ------------------------------------------------------------------- abstract

const ANCHOR_MINIMAX_GAP: &str = "sup-inf equals inf-sup over the truncated sets";
const ANCHOR_MINIMAX_MONO: &str = "v^n <= v and v^n is nondecreasing in n";
const ANCHOR_MINIMAX_LIMIT: &str = "v^n(y) converges to v(y)";
const ANCHOR_UNIQUE: &str = "the primal maximizer is unique";
const ANCHOR_BIPOLAR: &str = "the bipolar of a solid convex set is its closure";

pub fn check_minimax(suite: Suite, id: &str, p: &AbstractProblem, opts: &HarnessOptions) -> Vec<CheckRecord> {
    let ctx = Ctx { suite, instance: id };
    let o = &opts.solve;
    let y = 1.0;
    let res: Result<(f64, f64, f64)> = (|| {
        let v = ac::solve_abstract_dual(p, y, o)?.value_f64();
        let mut gap: f64 = 0.0;
        let mut mono: f64 = 0.0;
        let mut prev = f64::NEG_INFINITY;
        let mut last = f64::NAN;
        for &n in &MINIMAX_CAPS {
            let inf_sup = ac::solve_truncated_dual(p, y, n, o)?.value_f64();
            let sup_inf = ac::solve_sup_inf(p, y, n, o)?.value_f64();
            gap = gap.max((inf_sup - sup_inf).abs());
            mono = mono.max(prev - inf_sup).max(inf_sup - v);
            prev = inf_sup;
            last = inf_sup;
        }
        Ok((gap, mono.max(0.0), (last - v).abs()))
    })();
    match res {
        Ok((g, mo, l)) => vec![
            ctx.measured("minimax_gap", ANCHOR_MINIMAX_GAP, g, MINIMAX_GAP_TOL),
            ctx.measured("minimax_monotone", ANCHOR_MINIMAX_MONO, mo, 1e-9),
            ctx.measured("minimax_limit", ANCHOR_MINIMAX_LIMIT, l, MINIMAX_LIMIT_TOL),
        ],
        Err(e) => [("minimax_gap", ANCHOR_MINIMAX_GAP), ("minimax_monotone", ANCHOR_MINIMAX_MONO), ("minimax_limit", ANCHOR_MINIMAX_LIMIT)]
            .into_iter()
            .map(|(c, a)| ctx.outcome(c, a, 0.0, Err(Error::Solver(e.to_string()))))
            .collect(),
    }
}

/// Random strictly feasible start in the primal solver's own variables.
pub fn random_primal_start(p: &AbstractProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let set = p.primal_set();
    match set.normals() {
        Some(normals) => {
            let raw: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(0.05..1.0)).collect();
            let g = normals.iter().map(|w| set.pairing(&raw, w)).fold(0.0, f64::max);
            let t = rng.random_range(0.1..0.9);
            raw.iter().map(|v| t * v / g).collect()
        }
        None => {
            let k = set.generators().map_or(0, |g| g.len());
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        }
    }
}

pub fn check_uniqueness(suite: Suite, id: &str, p: &AbstractProblem, opts: &HarnessOptions) -> CheckRecord {
    let ctx = Ctx { suite, instance: id };
    let mut rng = instance_rng(opts.seed, &format!("{id}/unique"));
    let res = (|| {
        let base = ac::solve_abstract_primal(p, 1.0, &opts.solve)?;
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let o = SolveOptions { start: Some(random_primal_start(p, &mut rng)), ..opts.solve.clone() };
            let r = ac::solve_abstract_primal(p, 1.0, &o)?;
            worst = worst.max(max_abs_diff(&r.optimizer, &base.optimizer));
        }
        Ok(ctx.measured("uniqueness", ANCHOR_UNIQUE, worst, UNIQUENESS_TOL))
    })();
    ctx.outcome("uniqueness", ANCHOR_UNIQUE, UNIQUENESS_TOL, res)
}

/// Bipolar of random solid polytopes against brute-force solid-hull vertices.
pub fn check_random_bipolar(seed: u64, count: usize) -> Vec<CheckRecord> {
    let mut rng = instance_rng(seed, "bipolar");
    (0..count)
        .map(|i| {
            let id = format!("polytope-{i:02}");
            let ctx = Ctx { suite: Suite::Abstract, instance: &id };
            let m = rng.random_range(2..=4);
            let k = rng.random_range(1..=4);
            let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
            // every coordinate is reached by some generator, so the polar is bounded
            let gens: Vec<Vec<f64>> = loop {
                let g: Vec<Vec<f64>> = (0..k)
                    .map(|_| (0..m).map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.1..2.0) }).collect())
                    .collect();
                if (0..m).all(|i| g.iter().any(|v| v[i] > 0.0)) {
                    break g;
                }
            };
            let res = (|| {
                let c = PolytopeSet::from_generators(weights.clone(), gens.clone())?;
                let expected = oracle::solid_hull_vertices(&gens)?;
                let bipolar = PolytopeSet::from_generators(weights.clone(), c.polar()?.vertices()?)?.polar()?;
                let gap = vertex_set_distance(&bipolar.vertices()?, &expected);
                Ok(with_detail(ctx.measured("bipolar", ANCHOR_BIPOLAR, gap, POLAR_TOL), format!("{m} coordinates, {k} generators")))
            })();
            ctx.outcome("bipolar", ANCHOR_BIPOLAR, POLAR_TOL, res)
        })
        .collect()
}

/// A random abstract pair: `C` the solid hull of random generators and
/// `D = C°`.
pub fn random_abstract(rng: &mut ChaCha8Rng) -> Result<AbstractProblem> {
    let m = rng.random_range(2..=4);
    let k = rng.random_range(1..=3);
    let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let gens: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| rng.random_range(0.2..2.0)).collect()).collect();
    let c = PolytopeSet::from_generators(weights.clone(), gens)?;
    let d = c.polar()?;
    let family = corpus::random_family(rng)?;
    let utils = (0..m)
        .map(|_| crate::utility_field::ScalarUtility::new(family.clone(), rng.random_range(0.5..2.0), 1.0))
        .collect::<Result<Vec<_>>>()?;
    AbstractProblem::new(c, d, utils)
}

// -------------------------------------------------------------------- drivers

fn gated(suite: Suite, id: &str, checks: &[&str], open: bool) -> Option<Vec<CheckRecord>> {
    if open {
        return None;
    }
    let ctx = Ctx { suite, instance: id };
    Some(checks.iter().map(|c| ctx.skipped(c, "", 0.0, "oracle gate failed", false)).collect())
}

/// Runs `suite` on one market instance.
pub fn verify_instance(suite: Suite, inst: &Instance, opts: &HarnessOptions) -> Vec<CheckRecord> {
    let id = inst.id.as_str();
    let p = match inst.model.bridge() {
        Ok(p) => p,
        Err(e) => {
            let ctx = Ctx { suite, instance: id };
            return vec![ctx.skipped("bridge", "", 0.0, &format!("construction failed: {e}"), true)];
        }
    };
    let (mut out, open) = oracle_gate(suite, id, &p, opts);
    match suite {
        Suite::Theorem1 => {
            let names = [
                "biconjugacy_v",
                "biconjugacy_u",
                "subconjugacy",
                "inada_shape_u",
                "inada_threshold_u",
                "inada_shape_v",
                "inada_threshold_v",
                "dual_relation",
                "budget_identity",
                "kkt_residual",
                "primal_feasibility",
            ];
            if let Some(g) = gated(suite, id, &names, open) {
                out.extend(g);
            } else {
                out.extend(check_biconjugacy(suite, id, &p, opts));
                out.extend(check_inada(suite, id, &p, opts));
                out.extend(check_dual_relations(suite, id, &p, Some(&inst.model), opts));
            }
        }
        Suite::Theorem2 => match gated(suite, id, &["z_infimum", "b_supremum"], open) {
            Some(g) => out.extend(g),
            None => out.extend(check_theorem2(id, &inst.model, &p, opts)),
        },
        Suite::Prop1 => out.extend(check_proposition1(id, &inst.model, opts)),
        Suite::Abstract => match gated(suite, id, &["minimax_gap", "minimax_monotone", "minimax_limit", "uniqueness"], open) {
            Some(g) => out.extend(g),
            None => {
                out.extend(check_minimax(suite, id, &p, opts));
                out.push(check_uniqueness(suite, id, &p, opts));
            }
        },
    }
    out
}

/// Checks that do not belong to a single market instance.
pub fn verify_batch(suite: Suite, opts: &HarnessOptions) -> Vec<CheckRecord> {
    match suite {
        Suite::Theorem1 => Vec::new(),
        Suite::Theorem2 => vec![non_attainment_search(opts)],
        Suite::Prop1 => check_lemma5(opts.seed, LEMMA5_INSTANCES),
        Suite::Abstract => {
            let mut out = check_random_bipolar(opts.seed, RANDOM_POLYTOPES);
            let mut rng = instance_rng(opts.seed, "abstract");
            for i in 0..ABSTRACT_INSTANCES {
                let id = format!("abstract-{i:02}");
                let p = match random_abstract(&mut rng) {
                    Ok(p) => p,
                    Err(e) => {
                        let ctx = Ctx { suite, instance: &id };
                        out.push(ctx.outcome("construction", "", 0.0, Err(e)));
                        continue;
                    }
                };
                let (gate, open) = oracle_gate(suite, &id, &p, opts);
                out.extend(gate);
                let names = ["biconjugacy_v", "biconjugacy_u", "subconjugacy", "minimax_gap", "minimax_monotone", "minimax_limit", "uniqueness"];
                if let Some(g) = gated(suite, &id, &names, open) {
                    out.extend(g);
                    continue;
                }
                out.extend(check_biconjugacy(suite, &id, &p, opts));
                out.extend(check_minimax(suite, &id, &p, opts));
                out.push(check_uniqueness(suite, &id, &p, opts));
            }
            out
        }
    }
}

/// Runs the suites on the given instances; batch checks are added when
/// `with_batch` is set (the corpus run).
pub fn verify(suites: &[Suite], instances: &[Instance], with_batch: bool, opts: &HarnessOptions) -> VerificationReport {
    let mut report = VerificationReport::default();
    for &suite in suites {
        for inst in instances {
            report.records.extend(verify_instance(suite, inst, opts));
        }
        if with_batch {
            report.records.extend(verify_batch(suite, opts));
        }
    }
    report
}

/// The seeded corpus run behind `verify` without a model file.
pub fn verify_corpus(suites: &[Suite], opts: &HarnessOptions) -> Result<VerificationReport> {
    let instances = corpus::corpus(opts.seed)?;
    Ok(verify(suites, &instances, true, opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aitken_recovers_geometric_limit() {
        let s: Vec<f64> = (0..6).map(|k| 2.0 + 0.3 * 0.1f64.powi(k)).collect();
        assert!((aitken(&s) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn aitken_keeps_flat_sequences() {
        assert_eq!(aitken(&[1.0, 1.0, 1.0]), 1.0);
    }

    #[test]
    fn summary_groups_by_check() {
        let ctx = Ctx { suite: Suite::Theorem1, instance: "a" };
        let report = VerificationReport {
            records: vec![ctx.measured("x", "", 1e-9, 1e-8), ctx.measured("x", "", 1e-7, 1e-8), ctx.measured("y", "", 0.0, 0.0)],
        };
        let rows = report.summary();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].instances, 2);
        assert_eq!(rows[0].pass_rate, 0.5);
        assert_eq!(rows[0].max_gap, Some(1e-7));
        assert!(!report.all_pass());
    }

    #[test]
    fn binomial_theorem_checks_pass() {
        let inst = Instance { id: "binomial".into(), description: String::new(), model: models::binomial_log().unwrap() };
        let opts = HarnessOptions::new(1);
        for suite in Suite::ALL {
            for r in verify_instance(suite, &inst, &opts) {
                if r.check.starts_with("inada_threshold") {
                    continue;
                }
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn search_finds_non_attainment() {
        let r = non_attainment_search(&HarnessOptions::new(1));
        assert!(r.pass && r.attained_in_z == Some(false), "{r:?}");
    }
}
