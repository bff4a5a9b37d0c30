//! Deterministic simulation of multi-turn secret-inference attacks against a
//! synthetic retrieval-augmented assistant, with exact information-theoretic
//! leakage accounting and a layered defense stack.

pub mod attacker;
pub mod defense;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod leakage;
pub mod oracle;
pub mod query;
pub mod secret;

pub use error::{Error, Result};
