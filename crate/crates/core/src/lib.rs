//! Lineage compilation for Boolean queries on treelike relational instances.

pub mod automaton;
pub mod circuit;
pub mod decomposition;
pub mod fixtures;
pub mod intricacy;
pub mod model;
pub mod obdd;
pub mod probability;
pub mod query;
pub mod unfold;
