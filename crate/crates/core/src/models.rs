//! Small reference markets used by tests, the harness and the CLI.

use crate::clock::StochasticClock;
use crate::error::Result;
use crate::finite_basis::EventTree;
use crate::market::{MarketModel, PriceProcess, DEFAULT_ENUMERATION_CAP};
use crate::utility_field::{Family, UtilityField};

/// One period, `p = (1/2, 1/2)`, `S: 1 → {2, 1/2}`, log utility, unit
/// terminal clock. The unique deflator has density `(2/3, 4/3)`.
pub fn binomial_log() -> Result<MarketModel> {
    let tree = EventTree::regular(1, &[0.5, 0.5])?;
    let prices = PriceProcess::from_assets(&tree, &[vec![1.0, 2.0, 0.5]])?;
    let clock = StochasticClock::terminal(&tree)?;
    let utility = UtilityField::uniform(&tree, Family::Log)?;
    MarketModel::new(tree, prices, clock, utility, DEFAULT_ENUMERATION_CAP)
}

/// One period with three equally likely states, `S: 1 → {2, 1, 1/2}`, and
/// clock increment `middle` on the middle state (1 on the others). Deflator
/// vertices have densities `(0, 3, 0)` and `(1, 0, 2)`.
pub fn trinomial(family: Family, middle: f64) -> Result<MarketModel> {
    let third = 1.0 / 3.0;
    let tree = EventTree::regular(1, &[third, third, third])?;
    let prices = PriceProcess::from_assets(&tree, &[vec![1.0, 2.0, 1.0, 0.5]])?;
    let clock = StochasticClock::explicit(&tree, vec![0.0, 1.0, middle, 1.0])?;
    let utility = UtilityField::uniform(&tree, family)?;
    MarketModel::new(tree, prices, clock, utility, DEFAULT_ENUMERATION_CAP)
}

/// The trinomial with no clock mass on the middle state.
pub fn trinomial_null_middle(family: Family) -> Result<MarketModel> {
    trinomial(family, 0.0)
}
