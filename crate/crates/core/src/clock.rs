//! Stochastic clocks: nondecreasing, bounded processes `κ` with `κ_0 = 0`,
//! stored as per-node increments `Δκ(node) = κ(step) - κ(step - 1)` along
//! the path to the node.

use crate::error::{Error, Result};
use crate::finite_basis::{AtomMeasure, EventTree};

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticClock {
    tree: u64,
    increments: Vec<f64>,
    bound: f64,
    truncation_error: f64,
    label: String,
}

impl StochasticClock {
    /// Clock with caller-supplied increments. The bound is the largest path total.
    pub fn explicit(tree: &EventTree, increments: Vec<f64>) -> Result<Self> {
        Self::build(tree, increments, None, 0.0, "explicit")
    }

    /// `κ(t) = min(t, T)`: unit weight on every step up to the horizon.
    pub fn finite_horizon(tree: &EventTree, horizon: usize) -> Result<Self> {
        check_horizon(tree, horizon)?;
        let inc = (0..tree.len())
            .map(|k| {
                let s = tree.step(k);
                if s >= 1 && s <= horizon {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self::build(tree, inc, None, 0.0, &format!("finite_horizon({horizon})"))
    }

    /// Running consumption up to `T` plus a unit jump at `T` for terminal
    /// wealth, so step `T` carries weight 2.
    pub fn consumption_terminal(tree: &EventTree, horizon: usize) -> Result<Self> {
        check_horizon(tree, horizon)?;
        let inc = (0..tree.len())
            .map(|k| {
                let s = tree.step(k);
                if s >= 1 && s < horizon {
                    1.0
                } else if s == horizon {
                    2.0
                } else {
                    0.0
                }
            })
            .collect();
        Self::build(tree, inc, None, 0.0, &format!("consumption_terminal({horizon})"))
    }

    /// All weight on the last step of the tree.
    pub fn terminal(tree: &EventTree) -> Result<Self> {
        if tree.depth() == 0 {
            return Err(Error::InvalidClock("terminal clock needs a tree of depth at least 1".into()));
        }
        let inc = (0..tree.len()).map(|k| if tree.step(k) == tree.depth() { 1.0 } else { 0.0 }).collect();
        Self::build(tree, inc, None, 0.0, "terminal")
    }

    /// `κ(t) = (1 - e^{-νt}) / ν` sampled at `t = step · dt`. The tree truncates
    /// the infinite horizon; the missing mass `e^{-ν·dt·depth} / ν` is kept as
    /// [`Self::truncation_error`].
    pub fn discounted(tree: &EventTree, nu: f64, dt: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidClock(format!("discount rate must be positive, got {nu}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidClock(format!("step length must be positive, got {dt}")));
        }
        if tree.depth() == 0 {
            return Err(Error::InvalidClock("discounted clock needs a tree of depth at least 1".into()));
        }
        let inc = (0..tree.len())
            .map(|k| {
                let s = tree.step(k) as f64;
                if tree.step(k) == 0 {
                    0.0
                } else {
                    (-(nu * dt * (s - 1.0))).exp() * (-(-nu * dt).exp_m1()) / nu
                }
            })
            .collect();
        let tail = (-(nu * dt * tree.depth() as f64)).exp() / nu;
        Self::build(tree, inc, Some(1.0 / nu), tail, &format!("discounted({nu})"))
    }

    /// Unit mass at each listed step.
    pub fn discrete(tree: &EventTree, times: &[usize]) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidClock("discrete clock needs at least one time".into()));
        }
        let mut sorted = times.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidClock(format!("time {} listed twice", w[0])));
            }
        }
        if let Some(&t) = sorted.iter().find(|&&t| t == 0 || t > tree.depth()) {
            return Err(Error::InvalidClock(format!("time {t} outside 1..={}", tree.depth())));
        }
        let inc = (0..tree.len()).map(|k| if sorted.binary_search(&tree.step(k)).is_ok() { 1.0 } else { 0.0 }).collect();
        Self::build(tree, inc, None, 0.0, &format!("discrete({sorted:?})"))
    }

    fn build(tree: &EventTree, increments: Vec<f64>, bound: Option<f64>, tail: f64, label: &str) -> Result<Self> {
        if increments.len() != tree.len() {
            return Err(Error::InvalidClock(format!(
                "{} increments for {} nodes",
                increments.len(),
                tree.len()
            )));
        }
        if let Some((k, v)) = increments.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidClock(format!("increment {v} at node {} is not a finite nonnegative number", tree.id(k))));
        }
        if increments[0] != 0.0 {
            return Err(Error::InvalidClock("the clock starts at 0, so the root increment must vanish".into()));
        }
        let mut total = vec![0.0; tree.len()];
        for k in 1..tree.len() {
            total[k] = total[tree.parent(k).unwrap()] + increments[k];
        }
        let max_path = tree.leaves().iter().map(|&l| total[l]).fold(0.0, f64::max);
        if max_path <= 0.0 {
            return Err(Error::InvalidClock("the clock never moves: no path carries positive mass".into()));
        }
        let bound = bound.unwrap_or(max_path);
        if max_path > bound * (1.0 + 1e-12) {
            return Err(Error::InvalidClock(format!("path total {max_path} exceeds bound {bound}")));
        }
        Ok(StochasticClock { tree: tree.signature(), increments, bound, truncation_error: tail, label: label.into() })
    }

    pub fn tree_signature(&self) -> u64 {
        self.tree
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn increment(&self, node: usize) -> f64 {
        self.increments[node]
    }

    /// Bound `A` on `κ_∞`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `κ` at each node: the sum of increments along the path.
    pub fn levels(&self, tree: &EventTree) -> Result<Vec<f64>> {
        if tree.signature() != self.tree {
            return Err(Error::TreeMismatch);
        }
        let mut total = vec![0.0; tree.len()];
        for k in 1..tree.len() {
            total[k] = total[tree.parent(k).unwrap()] + self.increments[k];
        }
        Ok(total)
    }

    pub fn measure(&self, tree: &EventTree) -> Result<AtomMeasure> {
        if tree.signature() != self.tree {
            return Err(Error::TreeMismatch);
        }
        AtomMeasure::new(tree, &self.increments)
    }
}

fn check_horizon(tree: &EventTree, horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidClock("horizon must be at least 1".into()));
    }
    if horizon > tree.depth() {
        return Err(Error::InvalidClock(format!("horizon {horizon} beyond tree depth {}", tree.depth())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_totals(tree: &EventTree, c: &StochasticClock) -> Vec<f64> {
        let lv = c.levels(tree).unwrap();
        tree.leaves().iter().map(|&l| lv[l]).collect()
    }

    #[test]
    fn consumption_terminal_totals() {
        let t1 = EventTree::regular(1, &[0.5, 0.5]).unwrap();
        let c = StochasticClock::consumption_terminal(&t1, 1).unwrap();
        assert_eq!(path_totals(&t1, &c), vec![2.0, 2.0]);
        let t2 = EventTree::regular(2, &[0.5, 0.5]).unwrap();
        let c = StochasticClock::consumption_terminal(&t2, 2).unwrap();
        assert!(path_totals(&t2, &c).iter().all(|&v| v == 3.0));
    }

    #[test]
    fn finite_horizon_rejects_zero() {
        let t = EventTree::regular(2, &[0.5, 0.5]).unwrap();
        assert!(StochasticClock::finite_horizon(&t, 0).is_err());
        assert!(StochasticClock::finite_horizon(&t, 3).is_err());
        let c = StochasticClock::finite_horizon(&t, 1).unwrap();
        assert_eq!(c.bound(), 1.0);
    }

    #[test]
    fn discounted_rejects_nonpositive_rate() {
        let t = EventTree::regular(2, &[0.5, 0.5]).unwrap();
        assert!(StochasticClock::discounted(&t, 0.0, 1.0).is_err());
        assert!(StochasticClock::discounted(&t, -1.0, 1.0).is_err());
    }

    #[test]
    fn discounted_increments_match_closed_form() {
        let t = EventTree::regular(3, &[0.5, 0.5]).unwrap();
        let c = StochasticClock::discounted(&t, 1.0, 1.0).unwrap();
        let e = std::f64::consts::E;
        // κ(1) = 1 - 1/e, κ(2) - κ(1) = 1/e - 1/e²
        let n1 = t.nodes_at(1).next().unwrap();
        let n2 = t.nodes_at(2).next().unwrap();
        assert!((c.increment(n1) - (1.0 - 1.0 / e)).abs() < 1e-15);
        assert!((c.increment(n2) - (1.0 / e - 1.0 / (e * e))).abs() < 1e-15);
        assert_eq!(c.bound(), 1.0);
        assert!((c.truncation_error() - (-3.0f64).exp()).abs() < 1e-15);
        for tot in path_totals(&t, &c) {
            assert!((tot + c.truncation_error() - c.bound()).abs() < 1e-14);
        }
    }

    #[test]
    fn discrete_and_terminal() {
        let t = EventTree::regular(3, &[0.5, 0.5]).unwrap();
        assert!(StochasticClock::discrete(&t, &[]).is_err());
        assert!(StochasticClock::discrete(&t, &[0]).is_err());
        assert!(StochasticClock::discrete(&t, &[4]).is_err());
        let c = StochasticClock::discrete(&t, &[1, 3]).unwrap();
        assert!(path_totals(&t, &c).iter().all(|&v| v == 2.0));
        let term = StochasticClock::terminal(&t).unwrap();
        assert!(path_totals(&t, &term).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn explicit_validation() {
        let t = EventTree::regular(1, &[0.5, 0.5]).unwrap();
        assert!(StochasticClock::explicit(&t, vec![0.0, 0.0, 0.0]).is_err());
        assert!(StochasticClock::explicit(&t, vec![1.0, 1.0, 0.0]).is_err());
        assert!(StochasticClock::explicit(&t, vec![0.0, -1.0, 1.0]).is_err());
        let c = StochasticClock::explicit(&t, vec![0.0, 0.0, 2.0]).unwrap();
        assert_eq!(c.bound(), 2.0);
        assert_eq!(c.measure(&t).unwrap().support(), vec![2]);
    }

    proptest! {
        #[test]
        fn constructed_clocks_are_nondecreasing_and_bounded(depth in 1usize..4, nu in 0.05f64..3.0, h in 1usize..4) {
            let t = EventTree::regular(depth, &[0.3, 0.7]).unwrap();
            let h = h.min(depth);
            let clocks = vec![
                StochasticClock::finite_horizon(&t, h).unwrap(),
                StochasticClock::consumption_terminal(&t, h).unwrap(),
                StochasticClock::terminal(&t).unwrap(),
                StochasticClock::discounted(&t, nu, 1.0).unwrap(),
                StochasticClock::discrete(&t, &[h]).unwrap(),
            ];
            for c in clocks {
                prop_assert!(c.increments().iter().all(|&v| v >= 0.0));
                prop_assert_eq!(c.increment(0), 0.0);
                let tot = path_totals(&t, &c);
                prop_assert!(tot.iter().all(|&v| v <= c.bound() * (1.0 + 1e-12)));
                prop_assert!(tot.iter().any(|&v| v > 0.0));
            }
        }

        #[test]
        fn discounted_truncation_shrinks_with_depth(nu in 0.05f64..3.0, depth in 1usize..5) {
            let a = StochasticClock::discounted(&EventTree::regular(depth, &[0.5, 0.5]).unwrap(), nu, 1.0).unwrap();
            let b = StochasticClock::discounted(&EventTree::regular(depth + 1, &[0.5, 0.5]).unwrap(), nu, 1.0).unwrap();
            prop_assert!(b.truncation_error() < a.truncation_error());
        }
    }
}
