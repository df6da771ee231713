//! Utility maximization from consumption on finite event trees.
//!
//! Primal and dual value functions, deflator polytopes, polar sets and a
//! verification harness for the duality relations between them.

pub mod abstract_core;
pub mod cli;
pub mod clock;
pub mod config;
pub mod corpus;
pub mod duality_harness;
pub mod error;
pub mod finite_basis;
pub mod ipm;
pub mod lp;
pub mod market;
pub mod models;
pub mod oracle;
pub mod polytope;
pub mod scalar;
pub mod solvers;
pub mod utility_field;

pub use error::{Error, Result};
