//! Syllogistic theorem proving with optional hints from an assistant.

pub mod assistant;
pub mod bench;
pub mod closure;
pub mod dataset;
pub mod formula;
pub mod generate;
pub mod hybrid;
pub mod inference;
pub mod kb;
pub mod proof;
pub mod prover;
pub mod semantics;
pub mod text;
