//! Tree and path decompositions, elimination forests and tree encodings.

mod encoding;
mod pathwidth;
mod tree;
mod treedepth;
mod treewidth;

pub use encoding::{tree_encode, tree_encode_with_width, AnnotatedTreeEncoding, EncodingNode, NodeLabel, TreeEncoding};
pub use pathwidth::{decompose_pathwidth, path_decompose_graph, PathDecomposition, EXACT_PATHWIDTH_LIMIT};
pub use tree::{
    validate_decomposition, CoverViolation, DecompositionJson, DecompositionNode,
    DecompositionNodeJson, TreeDecomposition,
};
pub use treedepth::{elimination_forest, tree_depth, EliminationForest, EXACT_TREEDEPTH_LIMIT};
pub use treewidth::{
    decompose_graph, decompose_treewidth, exact_treewidth, from_elimination_order,
    EXACT_TREEWIDTH_LIMIT,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompositionError {
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("fact {0} is not covered by any bag")]
    FactNotCovered(usize),
    #[error("occurrences of `{0}` are not connected")]
    DisconnectedOccurrence(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("declared width {declared} but actual width is {actual}")]
    WidthMismatch { declared: usize, actual: usize },
    #[error("bag of size {size} does not fit width {width}")]
    WidthOverflow { size: usize, width: usize },
}
