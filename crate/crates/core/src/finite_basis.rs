//! Finite event trees, atoms of the optional σ-field and the product measure
//! `P ⊗ dκ` restricted to those atoms.
//!
//! An optional process on a tree is one number per node: the value on the
//! atom `{t = step(node)} × node`. Nodes are stored in breadth order so every
//! parent precedes its children.

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the number of nodes accepted by [`EventTree::new`].
pub const DEFAULT_NODE_CAP: usize = 10_000;

/// Tolerance for "almost everywhere" comparisons and probability sums.
pub const AE_TOL: f64 = 1e-9;

/// One node of a tree as given by a caller or a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: u64,
    pub parent: Option<u64>,
    /// Conditional probability of reaching this node from its parent.
    pub p: f64,
    /// Time step; the root sits at 0 and children at parent + 1.
    pub t: usize,
}

#[derive(Debug, Clone)]
pub struct EventTree {
    ids: Vec<u64>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    cond_prob: Vec<f64>,
    prob: Vec<f64>,
    step: Vec<usize>,
    depth: usize,
    leaves: Vec<usize>,
    signature: u64,
}

impl EventTree {
    pub fn new(nodes: &[NodeSpec]) -> Result<Self> {
        Self::with_cap(nodes, DEFAULT_NODE_CAP)
    }

    pub fn with_cap(nodes: &[NodeSpec], cap: usize) -> Result<Self> {
        if nodes.len() > cap {
            return Err(Error::NodeCap { nodes: nodes.len(), cap });
        }
        if nodes.is_empty() {
            return Err(Error::InvalidTree("no nodes".into()));
        }
        let mut by_id: HashMap<u64, usize> = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if by_id.insert(n.id, i).is_some() {
                return Err(Error::InvalidTree(format!("duplicate node id {}", n.id)));
            }
        }
        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!("expected exactly one root, found {}", roots.len())));
        }
        let root = roots[0];
        if nodes[root].t != 0 {
            return Err(Error::InvalidTree("root must sit at step 0".into()));
        }
        if (nodes[root].p - 1.0).abs() > AE_TOL {
            return Err(Error::InvalidTree("root probability must be 1".into()));
        }

        let mut input_parent = vec![None; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if let Some(pid) = n.parent {
                let &pi = by_id
                    .get(&pid)
                    .ok_or_else(|| Error::InvalidTree(format!("node {} has unknown parent {pid}", n.id)))?;
                if pi == i {
                    return Err(Error::InvalidTree(format!("node {} is its own parent", n.id)));
                }
                input_parent[i] = Some(pi);
            }
            if !(n.p.is_finite() && n.p > 0.0 && n.p <= 1.0 + AE_TOL) {
                return Err(Error::InvalidTree(format!("node {} has probability {} outside (0, 1]", n.id, n.p)));
            }
        }
        // every node must reach the root without revisiting anything
        for start in 0..nodes.len() {
            let mut cur = start;
            let mut hops = 0;
            while let Some(p) = input_parent[cur] {
                cur = p;
                hops += 1;
                if hops > nodes.len() {
                    return Err(Error::InvalidTree(format!("cyclic parent links through node {}", nodes[start].id)));
                }
            }
        }
        for (i, n) in nodes.iter().enumerate() {
            if let Some(pi) = input_parent[i] {
                if n.t != nodes[pi].t + 1 {
                    return Err(Error::InvalidTree(format!(
                        "node {} at step {} has parent at step {}",
                        n.id, n.t, nodes[pi].t
                    )));
                }
            }
        }

        // breadth order, ties kept in input order
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by_key(|&i| nodes[i].t);
        let mut pos = vec![0; nodes.len()];
        for (k, &i) in order.iter().enumerate() {
            pos[i] = k;
        }

        let n = nodes.len();
        let mut tree = EventTree {
            ids: order.iter().map(|&i| nodes[i].id).collect(),
            parent: order.iter().map(|&i| input_parent[i].map(|p| pos[p])).collect(),
            children: vec![Vec::new(); n],
            cond_prob: order.iter().map(|&i| nodes[i].p.min(1.0)).collect(),
            prob: vec![0.0; n],
            step: order.iter().map(|&i| nodes[i].t).collect(),
            depth: 0,
            leaves: Vec::new(),
            signature: 0,
        };
        tree.cond_prob[0] = 1.0;
        for k in 1..n {
            let p = tree.parent[k].expect("non-root has a parent");
            tree.children[p].push(k);
        }
        tree.prob[0] = 1.0;
        for k in 1..n {
            let p = tree.parent[k].unwrap();
            tree.prob[k] = tree.prob[p] * tree.cond_prob[k];
        }
        for k in 0..n {
            if !tree.children[k].is_empty() {
                let s: f64 = tree.children[k].iter().map(|&c| tree.cond_prob[c]).sum();
                if (s - 1.0).abs() > AE_TOL {
                    return Err(Error::InvalidTree(format!(
                        "children of node {} have probabilities summing to {s}",
                        tree.ids[k]
                    )));
                }
            }
        }
        tree.leaves = (0..n).filter(|&k| tree.children[k].is_empty()).collect();
        tree.depth = tree.step[tree.leaves[0]];
        if let Some(&bad) = tree.leaves.iter().find(|&&l| tree.step[l] != tree.depth) {
            return Err(Error::InvalidTree(format!(
                "leaf {} sits at step {} but other leaves sit at step {}",
                tree.ids[bad], tree.step[bad], tree.depth
            )));
        }
        tree.signature = tree.compute_signature();
        Ok(tree)
    }

    /// Full tree where every node has the same conditional branch probabilities.
    pub fn regular(depth: usize, branch_probs: &[f64]) -> Result<Self> {
        let branching: Vec<Vec<f64>> = vec![branch_probs.to_vec(); depth];
        Self::layered(&branching)
    }

    /// Full tree where every node at step `k` branches with `branching[k]`.
    pub fn layered(branching: &[Vec<f64>]) -> Result<Self> {
        let mut nodes = vec![NodeSpec { id: 0, parent: None, p: 1.0, t: 0 }];
        let mut frontier = vec![0u64];
        let mut next_id = 1u64;
        for (k, probs) in branching.iter().enumerate() {
            let mut next = Vec::new();
            for &parent in &frontier {
                for &p in probs {
                    nodes.push(NodeSpec { id: next_id, parent: Some(parent), p, t: k + 1 });
                    next.push(next_id);
                    next_id += 1;
                }
            }
            frontier = next;
        }
        Self::new(&nodes)
    }

    fn compute_signature(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.ids.hash(&mut h);
        self.parent.hash(&mut h);
        self.step.hash(&mut h);
        for p in &self.cond_prob {
            p.to_bits().hash(&mut h);
        }
        h.finish()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn signature(&self) -> u64 {
        self.signature
    }

    pub fn id(&self, node: usize) -> u64 {
        self.ids[node]
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn step(&self, node: usize) -> usize {
        self.step[node]
    }

    /// Unconditional probability of the node.
    pub fn prob(&self, node: usize) -> f64 {
        self.prob[node]
    }

    pub fn cond_prob(&self, node: usize) -> f64 {
        self.cond_prob[node]
    }

    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node].is_empty()
    }

    pub fn nodes_at(&self, step: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.step[k] == step)
    }

    /// Path from the root to `node`, both included.
    pub fn path_to(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Leaves below (or equal to) `node`.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(k) = stack.pop() {
            if self.is_leaf(k) {
                out.push(k);
            } else {
                stack.extend(self.children[k].iter().rev());
            }
        }
        out.sort_unstable();
        out
    }

    pub fn atoms(&self) -> Vec<Atom> {
        (0..self.len()).map(|k| Atom { node: k, step: self.step[k] }).collect()
    }

    pub fn node_specs(&self) -> Vec<NodeSpec> {
        (0..self.len())
            .map(|k| NodeSpec {
                id: self.ids[k],
                parent: self.parent[k].map(|p| self.ids[p]),
                p: self.cond_prob[k],
                t: self.step[k],
            })
            .collect()
    }
}

/// An atom `{t = step} × node` of the optional σ-field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    pub node: usize,
    pub step: usize,
}

/// A process measurable with respect to the optional σ-field: one value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionalProcess {
    tree: u64,
    values: Vec<f64>,
}

impl OptionalProcess {
    pub fn new(tree: &EventTree, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::InvalidTree(format!(
                "process has {} values for {} nodes",
                values.len(),
                tree.len()
            )));
        }
        Ok(OptionalProcess { tree: tree.signature(), values })
    }

    pub fn zeros(tree: &EventTree) -> Self {
        OptionalProcess { tree: tree.signature(), values: vec![0.0; tree.len()] }
    }

    pub fn constant(tree: &EventTree, v: f64) -> Self {
        OptionalProcess { tree: tree.signature(), values: vec![v; tree.len()] }
    }

    pub fn tree_signature(&self) -> u64 {
        self.tree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= -AE_TOL)
    }
}

/// The measure `μ = P ⊗ dκ` on atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomMeasure {
    tree: u64,
    mass: Vec<f64>,
}

impl AtomMeasure {
    /// `mass[k] = P(node k) · Δκ(node k)`.
    pub fn new(tree: &EventTree, increments: &[f64]) -> Result<Self> {
        if increments.len() != tree.len() {
            return Err(Error::TreeMismatch);
        }
        let mass = (0..tree.len()).map(|k| tree.prob(k) * increments[k]).collect();
        Ok(AtomMeasure { tree: tree.signature(), mass })
    }

    pub fn tree_signature(&self) -> u64 {
        self.tree
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Atoms carrying positive mass. Zero-mass atoms stay in the basis but
    /// are invisible to integrals.
    pub fn support(&self) -> Vec<usize> {
        (0..self.mass.len()).filter(|&k| self.mass[k] > 0.0).collect()
    }

    pub fn integrate(&self, xi: &OptionalProcess) -> Result<f64> {
        if xi.tree != self.tree {
            return Err(Error::TreeMismatch);
        }
        Ok(self.mass.iter().zip(&xi.values).map(|(m, v)| m * v).sum())
    }

    /// Equality up to `tol` on every atom of positive mass.
    pub fn ae_equal(&self, a: &OptionalProcess, b: &OptionalProcess, tol: f64) -> Result<bool> {
        if a.tree != self.tree || b.tree != self.tree {
            return Err(Error::TreeMismatch);
        }
        Ok((0..self.mass.len()).all(|k| self.mass[k] == 0.0 || (a.values[k] - b.values[k]).abs() <= tol))
    }
}

/// `⟨ξ, η⟩ = Σ ξ η μ` over atoms.
pub fn pair(xi: &OptionalProcess, eta: &OptionalProcess, mu: &AtomMeasure) -> Result<f64> {
    if xi.tree != mu.tree || eta.tree != mu.tree {
        return Err(Error::TreeMismatch);
    }
    Ok(mu.mass.iter().zip(xi.values.iter().zip(&eta.values)).map(|(m, (a, b))| m * a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial() -> EventTree {
        EventTree::regular(1, &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn one_step_binomial_shape() {
        let t = binomial();
        assert_eq!(t.len(), 3);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.leaves(), &[1, 2]);
        assert_eq!(t.atoms().len(), 3);
        assert!((t.prob(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let nodes = vec![
            NodeSpec { id: 0, parent: None, p: 1.0, t: 0 },
            NodeSpec { id: 1, parent: Some(0), p: 0.7, t: 1 },
            NodeSpec { id: 2, parent: Some(0), p: 0.5, t: 1 },
        ];
        assert!(matches!(EventTree::new(&nodes), Err(Error::InvalidTree(_))));
    }

    #[test]
    fn rejects_cycles_and_unknown_parents() {
        let cyc = vec![
            NodeSpec { id: 0, parent: None, p: 1.0, t: 0 },
            NodeSpec { id: 1, parent: Some(2), p: 1.0, t: 1 },
            NodeSpec { id: 2, parent: Some(1), p: 1.0, t: 1 },
        ];
        assert!(EventTree::new(&cyc).is_err());
        let orphan = vec![
            NodeSpec { id: 0, parent: None, p: 1.0, t: 0 },
            NodeSpec { id: 1, parent: Some(9), p: 1.0, t: 1 },
        ];
        assert!(EventTree::new(&orphan).is_err());
    }

    #[test]
    fn rejects_ragged_leaves() {
        let nodes = vec![
            NodeSpec { id: 0, parent: None, p: 1.0, t: 0 },
            NodeSpec { id: 1, parent: Some(0), p: 0.5, t: 1 },
            NodeSpec { id: 2, parent: Some(0), p: 0.5, t: 1 },
            NodeSpec { id: 3, parent: Some(1), p: 1.0, t: 2 },
        ];
        assert!(EventTree::new(&nodes).is_err());
    }

    #[test]
    fn node_cap_is_enforced() {
        let nodes: Vec<NodeSpec> = std::iter::once(NodeSpec { id: 0, parent: None, p: 1.0, t: 0 })
            .chain((1..5).map(|i| NodeSpec { id: i, parent: Some(0), p: 0.25, t: 1 }))
            .collect();
        assert!(matches!(EventTree::with_cap(&nodes, 4), Err(Error::NodeCap { .. })));
        assert!(EventTree::with_cap(&nodes, 5).is_ok());
    }

    #[test]
    fn input_order_does_not_matter() {
        let nodes = vec![
            NodeSpec { id: 5, parent: Some(1), p: 0.5, t: 1 },
            NodeSpec { id: 1, parent: None, p: 1.0, t: 0 },
            NodeSpec { id: 7, parent: Some(1), p: 0.5, t: 1 },
        ];
        let t = EventTree::new(&nodes).unwrap();
        assert_eq!(t.id(0), 1);
        assert_eq!(t.children(0), &[1, 2]);
        assert_eq!(t.index_of(7), Some(2));
    }

    #[test]
    fn pairing_and_mismatch() {
        let t = binomial();
        let mu = AtomMeasure::new(&t, &[0.0, 1.0, 1.0]).unwrap();
        let a = OptionalProcess::new(&t, vec![5.0, 1.0, 2.0]).unwrap();
        let b = OptionalProcess::new(&t, vec![9.0, 3.0, 4.0]).unwrap();
        assert!((pair(&a, &b, &mu).unwrap() - 5.5).abs() < 1e-15);
        let other = EventTree::regular(1, &[0.25, 0.75]).unwrap();
        let c = OptionalProcess::zeros(&other);
        assert_eq!(pair(&a, &c, &mu), Err(Error::TreeMismatch));
    }

    #[test]
    fn zero_mass_atoms_are_ignored_ae() {
        let t = binomial();
        let mu = AtomMeasure::new(&t, &[0.0, 1.0, 1.0]).unwrap();
        let a = OptionalProcess::new(&t, vec![5.0, 1.0, 2.0]).unwrap();
        let b = OptionalProcess::new(&t, vec![-3.0, 1.0, 2.0]).unwrap();
        assert!(mu.ae_equal(&a, &b, 1e-12).unwrap());
        assert_eq!(mu.support(), vec![1, 2]);
    }
}
