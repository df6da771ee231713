use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("tree has {nodes} nodes, above the cap of {cap}")]
    NodeCap { nodes: usize, cap: usize },
    #[error("processes are defined on different trees")]
    TreeMismatch,
    #[error("invalid clock: {0}")]
    InvalidClock(String),
    #[error("invalid utility: {0}")]
    InvalidUtility(String),
    #[error("invalid market: {0}")]
    InvalidMarket(String),
    #[error("no strictly positive deflator: {0}")]
    NoPositiveDeflator(String),
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("unbounded: {0}")]
    Unbounded(String),
    #[error("{what} has {size} elements, above the enumeration cap of {cap}")]
    EnumerationCap { what: String, size: usize, cap: usize },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("linear program: {0}")]
    Lp(String),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
