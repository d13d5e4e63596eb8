//! Bottom-up tree automata over annotated tree encodings.
//!
//! A node is read together with its keep flag and the states of its (at most
//! two) children; a missing child contributes the automaton's absent state.

mod explicit;
mod query;

pub use explicit::{AutomatonJson, Bdta, Bnta, Projection};
pub use query::{compile_query, compile_query_with_cap, QueryAutomaton, DEFAULT_STATE_CAP};

use thiserror::Error;

use crate::decomposition::{AnnotatedTreeEncoding, NodeLabel};
use crate::model::Signature;

pub type StateId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("label `{0}` is not in the alphabet")]
    LabelNotInAlphabet(String),
    #[error("no transition for symbol `{symbol}` from ({left}, {right})")]
    MissingTransition {
        symbol: String,
        left: String,
        right: String,
    },
    #[error("state space exceeds the cap of {0} states")]
    WidthTooLarge(usize),
    #[error("subset construction exceeds the cap of {0} states")]
    StateExplosion(usize),
    #[error("malformed automaton: {0}")]
    Malformed(String),
}

/// A deterministic bottom-up automaton.
pub trait TreeAutomaton: Sync {
    fn absent(&self) -> StateId;

    fn step(
        &self,
        sig: &Signature,
        label: &NodeLabel,
        kept: bool,
        left: StateId,
        right: StateId,
    ) -> Result<StateId, AutomatonError>;

    fn is_accepting(&self, state: StateId) -> bool;

    fn describe(&self, state: StateId) -> String {
        format!("q{state}")
    }
}

/// Runs `a` bottom-up; returns acceptance and the state of every node.
pub fn run<A: TreeAutomaton + ?Sized>(
    a: &A,
    t: &AnnotatedTreeEncoding<'_>,
) -> Result<(bool, Vec<StateId>), AutomatonError> {
    let enc = t.encoding;
    let mut states = vec![a.absent(); enc.len()];
    for i in enc.bottom_up() {
        let node = enc.node(i);
        let child = |j: usize| node.children.get(j).map_or(a.absent(), |&c| states[c]);
        let (l, r) = (child(0), child(1));
        states[i] = a.step(enc.signature(), &node.label, t.kept(i), l, r)?;
    }
    let accepted = !enc.is_empty() && a.is_accepting(states[enc.root()]);
    Ok((accepted, states))
}
