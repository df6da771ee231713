//! JSON model files: tree, prices, clock, utility, solver settings and the
//! restricted-domain choice. Unknown keys are rejected and every error
//! carries the path of the offending entry.

use serde::{Deserialize, Serialize};

use crate::abstract_core::SolveOptions;
use crate::clock::StochasticClock;
use crate::duality_harness::{BSpec, HarnessOptions};
use crate::error::{Error, Result};
use crate::finite_basis::{EventTree, NodeSpec, DEFAULT_NODE_CAP};
use crate::ipm::BarrierOptions;
use crate::market::{MarketModel, PriceProcess, DEFAULT_ENUMERATION_CAP};
use crate::utility_field::{Family, UtilityField};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub schema_version: u32,
    pub tree: TreeConfig,
    pub assets: Vec<AssetConfig>,
    pub clock: ClockConfig,
    pub utility: UtilityConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub theorem2: Theorem2Config,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    pub nodes: Vec<NodeSpec>,
}

/// Prices listed in the order of `tree.nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub prices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClockConfig {
    FiniteHorizon { horizon: usize },
    ConsumptionTerminal { horizon: usize },
    Terminal,
    Discounted {
        nu: f64,
        #[serde(default = "unit")]
        dt: f64,
    },
    Discrete { times: Vec<usize> },
    /// Per-node increments in the order of `tree.nodes`.
    Explicit { increments: Vec<f64> },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Log,
    Power,
    Tabulated,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    pub family: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// `(x, U(x))` knots for the tabulated family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<(f64, f64)>>,
    /// Per-node weights in the order of `tree.nodes`; 1 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub enumeration_cap: usize,
    pub node_cap: usize,
    pub seed: u64,
    pub tau_start: f64,
    pub tau_end: f64,
    pub max_newton: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let b = BarrierOptions::default();
        SolverConfig {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            node_cap: DEFAULT_NODE_CAP,
            seed: DEFAULT_SEED,
            tau_start: b.tau_start,
            tau_end: b.tau_end,
            max_newton: b.max_newton,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem2Config {
    #[serde(default)]
    pub b_spec: BSpec,
}

fn located(path: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{path}: {m}")),
        other => Error::Config(format!("{path}: {other}")),
    }
}

/// Reorders a per-node list given in file order into tree order.
fn by_node(tree: &EventTree, order: &[u64], values: &[f64], path: &str) -> Result<Vec<f64>> {
    if values.len() != order.len() {
        return Err(Error::Config(format!("{path}: expected {} values (one per node), got {}", order.len(), values.len())));
    }
    let mut out = vec![0.0; tree.len()];
    for (id, v) in order.iter().zip(values) {
        let k = tree.index_of(*id).expect("ids come from the tree spec");
        out[k] = *v;
    }
    Ok(out)
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ModelConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version: unsupported version {}, expected {SCHEMA_VERSION}",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn family(&self) -> Result<Family> {
        let u = &self.utility;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::Config(format!("utility.{key}: required for this family")));
        let fam = match u.family {
            FamilyKind::Log => Ok(Family::Log),
            FamilyKind::Power => Family::power(need(u.gamma, "gamma")?),
            FamilyKind::Exponential => Family::exponential(need(u.alpha, "alpha")?),
            FamilyKind::Tabulated => {
                let pts = u.points.as_ref().ok_or_else(|| Error::Config("utility.points: required for this family".into()))?;
                Family::tabulated(pts)
            }
        };
        fam.map_err(|e| located("utility.family", e))
    }

    pub fn build(&self) -> Result<MarketModel> {
        let s = &self.solver;
        let tree = EventTree::with_cap(&self.tree.nodes, s.node_cap).map_err(|e| located("tree.nodes", e))?;
        let order: Vec<u64> = self.tree.nodes.iter().map(|n| n.id).collect();
        if self.assets.is_empty() {
            return Err(Error::Config("assets: at least one asset is required".into()));
        }
        let mut per_node = vec![Vec::with_capacity(self.assets.len()); tree.len()];
        for (i, a) in self.assets.iter().enumerate() {
            let col = by_node(&tree, &order, &a.prices, &format!("assets[{i}].prices"))?;
            for (k, v) in col.into_iter().enumerate() {
                per_node[k].push(v);
            }
        }
        let prices = PriceProcess::new(&tree, per_node).map_err(|e| located("assets", e))?;
        let clock = match &self.clock {
            ClockConfig::FiniteHorizon { horizon } => StochasticClock::finite_horizon(&tree, *horizon),
            ClockConfig::ConsumptionTerminal { horizon } => StochasticClock::consumption_terminal(&tree, *horizon),
            ClockConfig::Terminal => StochasticClock::terminal(&tree),
            ClockConfig::Discounted { nu, dt } => StochasticClock::discounted(&tree, *nu, *dt),
            ClockConfig::Discrete { times } => StochasticClock::discrete(&tree, times),
            ClockConfig::Explicit { increments } => {
                StochasticClock::explicit(&tree, by_node(&tree, &order, increments, "clock.increments")?)
            }
        }
        .map_err(|e| located("clock", e))?;
        let family = self.family()?;
        let table = |v: &Option<Vec<f64>>, key: &str| match v {
            Some(v) => by_node(&tree, &order, v, &format!("utility.{key}")),
            None => Ok(vec![1.0; tree.len()]),
        };
        let weights = table(&self.utility.weights, "weights")?;
        let scales = table(&self.utility.scales, "scales")?;
        let utility = UtilityField::new(&tree, family, weights, scales).map_err(|e| located("utility", e))?;
        MarketModel::new(tree, prices, clock, utility, s.enumeration_cap).map_err(|e| located("model", e))
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solver;
        let mut o = SolveOptions::default();
        o.barrier.tau_start = s.tau_start;
        o.barrier.tau_end = s.tau_end;
        o.barrier.max_newton = s.max_newton;
        o
    }

    pub fn harness_options(&self, seed: Option<u64>) -> HarnessOptions {
        let mut h = HarnessOptions::new(seed.unwrap_or(self.solver.seed));
        h.b_spec = self.theorem2.b_spec;
        h.solve = self.solve_options();
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BINOMIAL: &str = r#"{
        "schema_version": 1,
        "tree": {"nodes": [
            {"id": 0, "parent": null, "p": 1.0, "t": 0},
            {"id": 1, "parent": 0, "p": 0.5, "t": 1},
            {"id": 2, "parent": 0, "p": 0.5, "t": 1}
        ]},
        "assets": [{"prices": [1.0, 2.0, 0.5]}],
        "clock": {"kind": "terminal"},
        "utility": {"family": "log"}
    }"#;

    #[test]
    fn binomial_builds_with_defaults() {
        let cfg = ModelConfig::parse(BINOMIAL).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.theorem2.b_spec, BSpec::Maximal);
        let m = cfg.build().unwrap();
        assert_eq!(m.tree.len(), 3);
        assert_eq!(m.deflators.require_vertices().unwrap().len(), 1);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ModelConfig::parse(BINOMIAL).unwrap();
        assert_eq!(ModelConfig::parse(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_located() {
        let text = BINOMIAL.replace(r#""family": "log""#, r#""family": "log", "gama": 2"#);
        let e = ModelConfig::parse(&text).unwrap_err().to_string();
        assert!(e.contains("utility") && e.contains("gama"), "{e}");
    }

    #[test]
    fn bad_value_is_located() {
        let text = BINOMIAL.replace(r#""p": 0.5, "t": 1}"#, r#""p": "half", "t": 1}"#);
        let e = ModelConfig::parse(&text).unwrap_err().to_string();
        assert!(e.contains("tree.nodes[1].p"), "{e}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let text = BINOMIAL.replace(r#""schema_version": 1"#, r#""schema_version": 2"#);
        assert!(ModelConfig::parse(&text).unwrap_err().to_string().contains("schema_version"));
    }

    #[test]
    fn exponential_family_is_rejected() {
        let text = BINOMIAL.replace(r#""family": "log""#, r#""family": "exponential", "alpha": 1.0"#);
        let e = ModelConfig::parse(&text).unwrap().build().unwrap_err().to_string();
        assert!(e.contains("utility.family") && e.contains("Inada"), "{e}");
    }

    #[test]
    fn price_count_mismatch_is_located() {
        let text = BINOMIAL.replace("[1.0, 2.0, 0.5]", "[1.0, 2.0]");
        let e = ModelConfig::parse(&text).unwrap().build().unwrap_err().to_string();
        assert!(e.contains("assets[0].prices"), "{e}");
    }

    #[test]
    fn node_order_in_file_is_free() {
        let text = BINOMIAL
            .replace(r#"{"id": 1, "parent": 0, "p": 0.5, "t": 1},"#, "")
            .replace(r#"{"id": 2, "parent": 0, "p": 0.5, "t": 1}"#, r#"{"id": 2, "parent": 0, "p": 0.5, "t": 1}, {"id": 1, "parent": 0, "p": 0.5, "t": 1}"#)
            .replace("[1.0, 2.0, 0.5]", "[1.0, 0.5, 2.0]");
        let a = ModelConfig::parse(BINOMIAL).unwrap().build().unwrap();
        let b = ModelConfig::parse(&text).unwrap().build().unwrap();
        for id in 0..3u64 {
            let (i, j) = (a.tree.index_of(id).unwrap(), b.tree.index_of(id).unwrap());
            assert_eq!(a.prices.at(i), b.prices.at(j));
        }
    }
}
