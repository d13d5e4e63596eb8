//! Ordered binary decision diagrams compiled level by level from decomposed
//! circuits.

mod compile;

pub use compile::{
    compile_to_obdd, compile_to_obdd_pathwidth, compile_to_obdd_with, variable_order, EquivalenceStrategy,
    BRUTE_FORCE_SUFFIX_LIMIT,
};

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FactSet, ProbabilityValuation};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObddError {
    #[error("valuation covers {given} facts, diagram reads fact {needed}")]
    MissingInput { given: usize, needed: usize },
    #[error("no probability for fact {0}")]
    MissingProbability(usize),
    #[error("decomposition is not a path")]
    NotAPath,
    #[error("equivalence test exceeded its table cap at level {0}")]
    WidthTooLarge(usize),
    #[error("malformed diagram: {0}")]
    Malformed(String),
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
}

/// A total order on the facts read by a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableOrder {
    facts: Vec<usize>,
}

impl VariableOrder {
    pub fn new(facts: Vec<usize>) -> Result<Self, ObddError> {
        let mut sorted = facts.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ObddError::Malformed("repeated variable in order".into()));
        }
        Ok(VariableOrder { facts })
    }

    pub fn facts(&self) -> &[usize] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn position(&self, fact: usize) -> Option<usize> {
        self.facts.iter().position(|&f| f == fact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObddNode {
    Leaf(bool),
    /// Tests the variable at `level`; `lo` and `hi` sit on the next level.
    Branch { level: usize, lo: NodeId, hi: NodeId },
}

/// A quasi-reduced OBDD: every root-to-leaf path visits every level once, so
/// variables the function ignores still get a level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obdd {
    order: VariableOrder,
    nodes: Vec<ObddNode>,
    levels: Vec<Vec<NodeId>>,
}

impl Obdd {
    pub fn from_levels(order: VariableOrder, nodes: Vec<ObddNode>, levels: Vec<Vec<NodeId>>) -> Result<Self, ObddError> {
        let o = Obdd { order, nodes, levels };
        o.check_structure()?;
        Ok(o)
    }

    pub fn order(&self) -> &VariableOrder {
        &self.order
    }

    pub fn nodes(&self) -> &[ObddNode] {
        &self.nodes
    }

    pub fn levels(&self) -> &[Vec<NodeId>] {
        &self.levels
    }

    pub fn root(&self) -> NodeId {
        self.levels[0][0]
    }

    /// Largest number of nodes on one level, leaves included.
    pub fn width(&self) -> usize {
        self.levels.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Levels hold only their own nodes, edges go one level down, leaves
    /// sit on the last level.
    pub fn check_structure(&self) -> Result<(), ObddError> {
        let bad = |m: String| Err(ObddError::Malformed(m));
        if self.levels.len() != self.order.len() + 1 {
            return bad("one level per variable plus the leaf level".into());
        }
        if self.levels[0].len() != 1 {
            return bad("the first level holds only the root".into());
        }
        let mut level_of = vec![usize::MAX; self.nodes.len()];
        for (l, ids) in self.levels.iter().enumerate() {
            for &id in ids {
                if id >= self.nodes.len() || level_of[id] != usize::MAX {
                    return bad(format!("node {id} misplaced"));
                }
                level_of[id] = l;
            }
        }
        if level_of.contains(&usize::MAX) {
            return bad("node outside every level".into());
        }
        let last = self.order.len();
        for (id, node) in self.nodes.iter().enumerate() {
            match *node {
                ObddNode::Leaf(_) if level_of[id] != last => return bad(format!("leaf {id} above the last level")),
                ObddNode::Branch { level, lo, hi } => {
                    if level != level_of[id] || level == last {
                        return bad(format!("node {id} has the wrong level"));
                    }
                    if lo >= self.nodes.len() || hi >= self.nodes.len() {
                        return bad(format!("node {id} points outside the diagram"));
                    }
                    if level_of[lo] != level + 1 || level_of[hi] != level + 1 {
                        return bad(format!("node {id} skips a level"));
                    }
                }
                ObddNode::Leaf(_) => {}
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, v: &FactSet) -> Result<bool, ObddError> {
        if let Some(&f) = self.order.facts().iter().find(|&&f| f >= v.universe()) {
            return Err(ObddError::MissingInput {
                given: v.universe(),
                needed: f,
            });
        }
        let mut n = self.root();
        loop {
            match self.nodes[n] {
                ObddNode::Leaf(b) => return Ok(b),
                ObddNode::Branch { level, lo, hi } => {
                    n = if v.contains(self.order.facts()[level]) { hi } else { lo };
                }
            }
        }
    }

    /// Number of valuations of the ordered variables reaching the true leaf.
    pub fn model_count(&self) -> BigUint {
        let mut count = vec![BigUint::zero(); self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            count[id] = match self.nodes[id] {
                ObddNode::Leaf(b) => {
                    if b {
                        BigUint::one()
                    } else {
                        BigUint::zero()
                    }
                }
                ObddNode::Branch { lo, hi, .. } => &count[lo] + &count[hi],
            };
        }
        count.swap_remove(self.root())
    }

    pub fn probability(&self, pi: &ProbabilityValuation) -> Result<BigRational, ObddError> {
        if let Some(&f) = self.order.facts().iter().find(|&&f| f >= pi.len()) {
            return Err(ObddError::MissingProbability(f));
        }
        let mut p = vec![BigRational::zero(); self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            p[id] = match self.nodes[id] {
                ObddNode::Leaf(b) => {
                    if b {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                }
                ObddNode::Branch { level, lo, hi } => {
                    let q = &pi.as_slice()[self.order.facts()[level]];
                    (BigRational::one() - q) * &p[lo] + q * &p[hi]
                }
            };
        }
        Ok(p.swap_remove(self.root()))
    }

    /// Truth table of the suffix function of every node on `level`, over the
    /// variables from `level` on; `None` above `limit` remaining variables.
    pub fn suffix_tables(&self, level: usize, limit: usize) -> Option<Vec<Vec<bool>>> {
        let rest = self.order.len() - level;
        if rest > limit {
            return None;
        }
        let tables = self.levels[level]
            .iter()
            .map(|&start| {
                (0..1usize << rest)
                    .map(|m| {
                        let mut n = start;
                        loop {
                            match self.nodes[n] {
                                ObddNode::Leaf(b) => break b,
                                ObddNode::Branch { level: l, lo, hi } => {
                                    n = if m >> (l - level) & 1 == 1 { hi } else { lo };
                                }
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        Some(tables)
    }

    /// No two nodes of a level compute the same function; checked on the
    /// levels with at most `limit` remaining variables.
    pub fn check_canonical(&self, limit: usize) -> Result<(), ObddError> {
        for level in 0..self.levels.len() {
            if let Some(tables) = self.suffix_tables(level, limit) {
                let mut seen = std::collections::HashSet::new();
                for (k, t) in tables.into_iter().enumerate() {
                    if !seen.insert(t) {
                        return Err(ObddError::Malformed(format!(
                            "node {} on level {level} duplicates an earlier node",
                            self.levels[level][k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> ObddJson {
        ObddJson {
            order: self.order.facts().to_vec(),
            levels: self
                .levels
                .iter()
                .map(|ids| {
                    ids.iter()
                        .map(|&id| match self.nodes[id] {
                            ObddNode::Leaf(b) => ObddNodeJson {
                                id,
                                lo: None,
                                hi: None,
                                value: Some(b),
                            },
                            ObddNode::Branch { lo, hi, .. } => ObddNodeJson {
                                id,
                                lo: Some(lo),
                                hi: Some(hi),
                                value: None,
                            },
                        })
                        .collect()
                })
                .collect(),
            width: self.width(),
            size: self.size(),
        }
    }

    pub fn from_json(j: &ObddJson) -> Result<Self, ObddError> {
        let order = VariableOrder::new(j.order.clone())?;
        let size = j.levels.iter().map(Vec::len).sum();
        let mut nodes = vec![ObddNode::Leaf(false); size];
        let mut filled = vec![false; size];
        let mut levels = Vec::with_capacity(j.levels.len());
        for (l, row) in j.levels.iter().enumerate() {
            let mut ids = Vec::with_capacity(row.len());
            for n in row {
                if n.id >= size || std::mem::replace(&mut filled[n.id], true) {
                    return Err(ObddError::Malformed(format!("bad node id {}", n.id)));
                }
                nodes[n.id] = match (n.lo, n.hi, n.value) {
                    (Some(lo), Some(hi), None) => ObddNode::Branch { level: l, lo, hi },
                    (None, None, Some(b)) => ObddNode::Leaf(b),
                    _ => return Err(ObddError::Malformed(format!("node {} is neither leaf nor branch", n.id))),
                };
                ids.push(n.id);
            }
            levels.push(ids);
        }
        Obdd::from_levels(order, nodes, levels)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph obdd {\n");
        for (l, ids) in self.levels.iter().enumerate() {
            let _ = write!(out, "  {{ rank=same;");
            for id in ids {
                let _ = write!(out, " n{id};");
            }
            out.push_str(" }\n");
            for &id in ids {
                match self.nodes[id] {
                    ObddNode::Leaf(b) => {
                        let _ = writeln!(out, "  n{id} [label=\"{}\", shape=box];", u8::from(b));
                    }
                    ObddNode::Branch { lo, hi, .. } => {
                        let _ = writeln!(out, "  n{id} [label=\"x{}\"];", self.order.facts()[l]);
                        let _ = writeln!(out, "  n{id} -> n{lo} [style=dashed];");
                        let _ = writeln!(out, "  n{id} -> n{hi};");
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObddNodeJson {
    pub id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObddJson {
    pub order: Vec<usize>,
    pub levels: Vec<Vec<ObddNodeJson>>,
    pub width: usize,
    pub size: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio;

    fn single(x: usize) -> Obdd {
        Obdd::from_levels(
            VariableOrder::new(vec![x]).unwrap(),
            vec![
                ObddNode::Branch { level: 0, lo: 1, hi: 2 },
                ObddNode::Leaf(false),
                ObddNode::Leaf(true),
            ],
            vec![vec![0], vec![1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn constant_true() {
        let o = Obdd::from_levels(VariableOrder::new(vec![]).unwrap(), vec![ObddNode::Leaf(true)], vec![vec![0]]).unwrap();
        assert!(o.evaluate(&FactSet::empty(3)).unwrap());
        assert_eq!(o.width(), 1);
    }

    #[test]
    fn single_variable() {
        let o = single(0);
        assert!(o.evaluate(&FactSet::full(1)).unwrap());
        assert!(!o.evaluate(&FactSet::empty(1)).unwrap());
        assert_eq!(o.probability(&ProbabilityValuation::half(1)).unwrap(), ratio(1, 2));
        assert_eq!(o.evaluate(&FactSet::empty(0)), Err(ObddError::MissingInput { given: 0, needed: 0 }));
    }

    #[test]
    fn structure_violations() {
        let r = Obdd::from_levels(
            VariableOrder::new(vec![0]).unwrap(),
            vec![ObddNode::Branch { level: 0, lo: 0, hi: 0 }],
            vec![vec![0], vec![]],
        );
        assert!(matches!(r, Err(ObddError::Malformed(_))));
        assert!(VariableOrder::new(vec![1, 1]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let o = single(3);
        let text = serde_json::to_string(&o.to_json()).unwrap();
        assert_eq!(Obdd::from_json(&serde_json::from_str(&text).unwrap()).unwrap(), o);
        assert!(o.to_dot().contains("n0 -> n2"));
    }
}
