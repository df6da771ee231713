//! Small dense front end over the `microlp` simplex solver.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    maximize: bool,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn maximize() -> Self {
        LinearProgram { maximize: true, objective: Vec::new(), bounds: Vec::new(), rows: Vec::new() }
    }

    pub fn minimize() -> Self {
        LinearProgram { maximize: false, ..Self::maximize() }
    }

    /// Adds a variable with objective coefficient `c` and bounds `[lo, hi]`
    /// (infinite bounds allowed) and returns its index.
    pub fn var(&mut self, c: f64, lo: f64, hi: f64) -> usize {
        self.objective.push(c);
        self.bounds.push((lo, hi));
        self.objective.len() - 1
    }

    pub fn nonneg(&mut self, c: f64) -> usize {
        self.var(c, 0.0, f64::INFINITY)
    }

    pub fn free(&mut self, c: f64) -> usize {
        self.var(c, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn constraint(&mut self, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push((terms.into_iter().filter(|t| t.1 != 0.0).collect(), cmp, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let dir = if self.maximize { OptimizationDirection::Maximize } else { OptimizationDirection::Minimize };
        let mut p = Problem::new(dir);
        let vars: Vec<_> = self.objective.iter().zip(&self.bounds).map(|(&c, &b)| p.add_var(c, b)).collect();
        for (terms, cmp, rhs) in &self.rows {
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            let expr: Vec<_> = terms.iter().map(|&(i, a)| (vars[i], a)).collect();
            p.add_constraint(expr.as_slice(), op, *rhs);
        }
        match p.solve() {
            Ok(outcome) => match outcome.solution() {
                Some(sol) => {
                    let x: Vec<f64> = vars.iter().map(|&v| sol.var_value(v)).collect();
                    let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                    Ok(LpOutcome::Optimal { objective, x })
                }
                None => Err(Error::Lp("solve interrupted".into())),
            },
            Err(microlp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(microlp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
            Err(e) => Err(Error::Lp(e.to_string())),
        }
    }

    /// Solves and insists on a finite optimum.
    pub fn solve_optimal(&self) -> Result<(f64, Vec<f64>)> {
        match self.solve()? {
            LpOutcome::Optimal { objective, x } => Ok((objective, x)),
            LpOutcome::Infeasible => Err(Error::Lp("infeasible".into())),
            LpOutcome::Unbounded => Err(Error::Lp("unbounded".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::maximize();
        let x = lp.nonneg(1.0);
        let y = lp.nonneg(1.0);
        lp.constraint(vec![(x, 1.0), (y, 2.0)], Cmp::Le, 4.0);
        lp.constraint(vec![(x, 3.0), (y, 1.0)], Cmp::Le, 6.0);
        let (obj, sol) = lp.solve_optimal().unwrap();
        assert!((obj - 2.8).abs() < 1e-12);
        assert!((sol[0] - 1.6).abs() < 1e-12 && (sol[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::maximize();
        let x = lp.nonneg(1.0);
        lp.constraint(vec![(x, 1.0)], Cmp::Ge, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
        lp.constraint(vec![(x, 1.0)], Cmp::Le, 0.5);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }
}
