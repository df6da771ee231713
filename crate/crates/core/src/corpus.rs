//! Seeded random instances for the verification suites.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clock::StochasticClock;
use crate::error::Result;
use crate::finite_basis::EventTree;
use crate::market::{MarketModel, PriceProcess, DEFAULT_ENUMERATION_CAP};
use crate::utility_field::{Family, UtilityField};

pub const CORPUS_SIZE: usize = 50;
pub const MAX_LEAVES: usize = 20;
/// Instances with more deflator vertices are redrawn to keep dual solves small.
pub const MAX_DEFLATOR_VERTICES: usize = 32;

#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub description: String,
    pub model: MarketModel,
}

fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|r| r / s).collect()
}

/// Per-node price vectors, a martingale under random interior conditional
/// probabilities, with child returns spread over `[-0.4, 0.4]` before centring.
pub fn random_prices(rng: &mut ChaCha8Rng, tree: &EventTree, assets: usize) -> Result<PriceProcess> {
    let mut s = vec![vec![1.0; assets]; tree.len()];
    for n in 0..tree.len() {
        let kids = tree.children(n).to_vec();
        if kids.is_empty() {
            continue;
        }
        let q = random_probs(rng, kids.len());
        for a in 0..assets {
            let mut r: Vec<f64>;
            loop {
                r = (0..kids.len()).map(|_| rng.random_range(-0.4..0.4)).collect();
                let spread = r.iter().copied().fold(f64::MIN, f64::max) - r.iter().copied().fold(f64::MAX, f64::min);
                if spread >= 0.1 {
                    break;
                }
            }
            let mean: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
            for (k, &j) in kids.iter().enumerate() {
                s[j][a] = s[n][a] * (1.0 + r[k] - mean);
            }
        }
    }
    PriceProcess::new(tree, s)
}

/// A tree with per-level branching in `{2, 3}` and random branch probabilities.
pub fn random_tree(rng: &mut ChaCha8Rng, depth: usize, max_leaves: usize) -> Result<EventTree> {
    loop {
        let branching: Vec<usize> = (0..depth).map(|_| rng.random_range(2..=3)).collect();
        if branching.iter().product::<usize>() > max_leaves {
            continue;
        }
        let mut specs = vec![crate::finite_basis::NodeSpec { id: 0, parent: None, p: 1.0, t: 0 }];
        let mut frontier = vec![0u64];
        let mut next_id = 1u64;
        for (level, &b) in branching.iter().enumerate() {
            let mut next = Vec::new();
            for &parent in &frontier {
                for p in random_probs(rng, b) {
                    specs.push(crate::finite_basis::NodeSpec { id: next_id, parent: Some(parent), p, t: level + 1 });
                    next.push(next_id);
                    next_id += 1;
                }
            }
            frontier = next;
        }
        return EventTree::new(&specs);
    }
}

pub fn random_clock(rng: &mut ChaCha8Rng, tree: &EventTree) -> Result<StochasticClock> {
    let depth = tree.depth();
    match rng.random_range(0..5) {
        0 => StochasticClock::finite_horizon(tree, rng.random_range(1..=depth)),
        1 => StochasticClock::consumption_terminal(tree, rng.random_range(1..=depth)),
        2 => StochasticClock::terminal(tree),
        3 => StochasticClock::discounted(tree, rng.random_range(0.05..0.5), 1.0),
        _ => {
            let mut times: Vec<usize> = (1..=depth).filter(|_| rng.random_bool(0.5)).collect();
            if times.is_empty() {
                times.push(rng.random_range(1..=depth));
            }
            StochasticClock::discrete(tree, &times)
        }
    }
}

pub fn random_family(rng: &mut ChaCha8Rng) -> Result<Family> {
    match rng.random_range(0..4) {
        0 => Ok(Family::Log),
        1 => Family::power(0.5),
        2 => Family::power(2.0),
        _ => Family::power(3.0),
    }
}

/// One single-asset market with random clock, utility family and weights.
pub fn random_instance(rng: &mut ChaCha8Rng, index: usize) -> Result<Instance> {
    loop {
        let depth = rng.random_range(2..=3);
        let tree = random_tree(rng, depth, MAX_LEAVES)?;
        let prices = random_prices(rng, &tree, 1)?;
        let clock = random_clock(rng, &tree)?;
        let family = random_family(rng)?;
        let weights: Vec<f64> = (0..tree.len()).map(|_| rng.random_range(0.5..2.0)).collect();
        let utility = UtilityField::new(&tree, family.clone(), weights, vec![1.0; tree.len()])?;
        let description = format!(
            "depth {depth}, {} leaves, clock {}, utility {}",
            tree.leaves().len(),
            clock.label(),
            family.name()
        );
        let model = MarketModel::new(tree, prices, clock, utility, DEFAULT_ENUMERATION_CAP)?;
        if model.deflators.vertices().is_none_or(|v| v.len() > MAX_DEFLATOR_VERTICES) {
            continue;
        }
        return Ok(Instance { id: format!("corpus-{index:02}"), description, model });
    }
}

/// The verification corpus for a seed.
pub fn corpus(seed: u64) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CORPUS_SIZE).map(|i| random_instance(&mut rng, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_respects_shape_limits() {
        let c = corpus(7).unwrap();
        assert_eq!(c.len(), CORPUS_SIZE);
        for inst in &c {
            let t = &inst.model.tree;
            assert!((2..=3).contains(&t.depth()));
            assert!(t.leaves().len() <= MAX_LEAVES);
            assert!(!inst.model.deflators.require_vertices().unwrap().is_empty());
        }
    }

    #[test]
    fn corpus_is_reproducible() {
        let a: Vec<String> = corpus(3).unwrap().into_iter().map(|i| i.description).collect();
        let b: Vec<String> = corpus(3).unwrap().into_iter().map(|i| i.description).collect();
        assert_eq!(a, b);
    }
}
