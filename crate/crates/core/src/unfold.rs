//! Lineage-preserving unfolding of ranked instances for inversion-free
//! queries.
//!
//! Each fact `R(a1..ak)` becomes `R(b1..bk)` where, reading the positions in
//! the relation's order `i1, i2, ...`, `b_{i1}` is the tuple `(a_{i1})` and
//! `b_{ij}` extends `b_{i(j-1)}` with `a_{ij}`. Tuples are named by joining
//! their elements with `.`; the homomorphism back keeps the last element and
//! the elimination forest links every tuple to its longest strict prefix.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::EliminationForest;
use crate::model::{gaifman_graph, ElementId, FactSet, Instance, InstanceJson, ModelError};
use crate::query::{evaluate_on, UcqNeq, ValidatedExpression};

pub const SEPARATOR: char = '.';
/// Largest instance for the exhaustive lineage comparison.
pub const VERIFY_LIMIT: usize = 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnfoldError {
    #[error("fact {fact} is not ranked: its arguments do not increase in the domain order")]
    InstanceNotRanked { fact: String },
    #[error("no position order for relation `{0}`")]
    MissingRelationOrder(String),
    #[error("element `{0}` contains the reserved separator")]
    ReservedSeparator(String),
    #[error("lineages differ on the valuation keeping facts {valuation:?}")]
    LineageMismatch { valuation: Vec<usize> },
    #[error("instance has {facts} facts, exhaustive verification is limited to {limit}")]
    InstanceTooLarge { facts: usize, limit: usize },
    #[error("invalid unfolding: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct Unfolding {
    /// Fact `i` of the unfolded instance corresponds to fact `i` of the input.
    pub instance: Instance,
    /// Image of every unfolded element, indexed by element id.
    pub homomorphism: Vec<ElementId>,
    pub forest: EliminationForest,
}

/// Position of every element in the declared domain order, or in order of
/// first occurrence when none is declared.
fn ranks(inst: &Instance) -> Vec<usize> {
    match inst.order() {
        Some(order) => {
            let mut r = vec![usize::MAX; inst.domain_size()];
            for (k, e) in order.iter().enumerate() {
                r[e.0] = k;
            }
            r
        }
        None => (0..inst.domain_size()).collect(),
    }
}

pub fn is_ranked(inst: &Instance) -> Result<(), UnfoldError> {
    let rank = ranks(inst);
    for f in inst.facts() {
        if f.args.windows(2).any(|w| rank[w[0].0] >= rank[w[1].0]) {
            return Err(UnfoldError::InstanceNotRanked {
                fact: inst.display_fact(f),
            });
        }
    }
    Ok(())
}

pub fn unfold(inst: &Instance, expr: &ValidatedExpression) -> Result<Unfolding, UnfoldError> {
    is_ranked(inst)?;
    if let Some((_, name)) = inst.elements().find(|(_, n)| n.contains(SEPARATOR)) {
        return Err(UnfoldError::ReservedSeparator(name.to_string()));
    }
    let sig = inst.signature();
    let mut out = Instance::new(sig.clone());
    for f in inst.facts() {
        let rel = sig.name(f.relation);
        let order = expr
            .orders
            .get(rel)
            .ok_or_else(|| UnfoldError::MissingRelationOrder(rel.to_string()))?;
        let mut tuples = vec![String::new(); f.args.len()];
        let mut prefix = String::new();
        for &p in order {
            if !prefix.is_empty() {
                prefix.push(SEPARATOR);
            }
            prefix.push_str(inst.element_name(f.args[p - 1]));
            tuples[p - 1] = prefix.clone();
        }
        out.add_fact(rel, &tuples)?;
    }
    let mut homomorphism = Vec::with_capacity(out.domain_size());
    let mut parent = Vec::with_capacity(out.domain_size());
    for (_, name) in out.elements() {
        let (head, last) = match name.rsplit_once(SEPARATOR) {
            Some((head, last)) => (Some(head), last),
            None => (None, name),
        };
        homomorphism.push(inst.element_id(last).expect("tuples end in input elements"));
        parent.push(head.map(|h| out.element_id(h).expect("prefixes are elements").0));
    }
    Ok(Unfolding {
        instance: out,
        homomorphism,
        forest: EliminationForest::new(parent),
    })
}

impl Unfolding {
    pub fn height(&self) -> usize {
        self.forest.height()
    }

    /// The homomorphism sends fact `i` onto fact `i` of `inst`, and the forest
    /// is an elimination forest of the unfolded instance.
    pub fn check(&self, inst: &Instance) -> Result<(), UnfoldError> {
        if self.instance.len() != inst.len() {
            return Err(UnfoldError::Invalid("fact counts differ".into()));
        }
        for (i, (g, f)) in self.instance.facts().iter().zip(inst.facts()).enumerate() {
            let image: Vec<ElementId> = g.args.iter().map(|e| self.homomorphism[e.0]).collect();
            if g.relation != f.relation || image != f.args {
                return Err(UnfoldError::Invalid(format!("fact {i} is not mapped onto its original")));
            }
        }
        if let Some((a, b)) = self.forest.violation(&gaifman_graph(&self.instance)) {
            return Err(UnfoldError::Invalid(format!(
                "edge {}-{} joins unrelated forest nodes",
                self.instance.element_name(ElementId(a)),
                self.instance.element_name(ElementId(b))
            )));
        }
        Ok(())
    }

    pub fn to_json(&self, inst: &Instance) -> UnfoldingJson {
        let name = |e: usize| self.instance.element_name(ElementId(e)).to_string();
        UnfoldingJson {
            instance: InstanceJson::from_instance(&self.instance, None),
            homomorphism: (0..self.homomorphism.len())
                .map(|e| (name(e), inst.element_name(self.homomorphism[e]).to_string()))
                .collect(),
            forest: (0..self.forest.len()).map(|e| (name(e), self.forest.parent(e).map(name))).collect(),
            height: self.height(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingJson {
    pub instance: InstanceJson,
    pub homomorphism: BTreeMap<String, String>,
    pub forest: BTreeMap<String, Option<String>>,
    pub height: usize,
}

fn sweep(
    inst: &Instance,
    unf: &Unfolding,
    q: &UcqNeq,
    bad: impl Fn(bool, bool) -> bool + Sync,
) -> Result<(), UnfoldError> {
    let n = inst.len();
    if n > VERIFY_LIMIT {
        return Err(UnfoldError::InstanceTooLarge {
            facts: n,
            limit: VERIFY_LIMIT,
        });
    }
    let hit = (0..1u64 << n).into_par_iter().find_first(|&m| {
        let v = FactSet::from_mask(m, n);
        bad(evaluate_on(q, inst, &v), evaluate_on(q, &unf.instance, &v))
    });
    match hit {
        Some(m) => Err(UnfoldError::LineageMismatch {
            valuation: FactSet::from_mask(m, n).iter().collect(),
        }),
        None => Ok(()),
    }
}

/// Same lineage on the instance and its unfolding, over every valuation.
pub fn verify_respects(inst: &Instance, unf: &Unfolding, q: &UcqNeq) -> Result<(), UnfoldError> {
    unf.check(inst)?;
    sweep(inst, unf, q, |orig, unfolded| orig != unfolded)
}

/// Whatever holds on a subinstance of the unfolding holds on its image.
pub fn verify_one_direction(inst: &Instance, unf: &Unfolding, q: &UcqNeq) -> Result<(), UnfoldError> {
    unf.check(inst)?;
    sweep(inst, unf, q, |orig, unfolded| unfolded && !orig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Signature;
    use crate::query::{Expr, InversionFreeExpression};
    fn atom(r: &str, v: &[&str]) -> Expr {
        Expr::atom(r, v)
    }
    fn exists(v: &str, b: Expr) -> Expr {
        Expr::exists(v, b)
    }

    fn rs() -> ValidatedExpression {
        InversionFreeExpression::new(exists(
            "x",
            Expr::And(vec![atom("R", &["x"]), exists("y", atom("S", &["x", "y"]))]),
        ))
        .validate()
        .unwrap()
    }

    fn s_only() -> ValidatedExpression {
        InversionFreeExpression::new(exists("x", exists("y", atom("S", &["x", "y"]))))
            .validate()
            .unwrap()
    }

    fn binary(facts: &[(&str, &str)]) -> Instance {
        Instance::from_facts(
            Signature::new([("S", 2)]).unwrap(),
            facts.iter().map(|(a, b)| ("S", vec![*a, *b])),
        )
        .unwrap()
    }

    #[test]
    fn single_fact() {
        let inst = binary(&[("a", "b")]);
        let u = unfold(&inst, &s_only()).unwrap();
        assert_eq!(u.instance.to_string(), "{S(a,a.b)}");
        let h: Vec<&str> = u.homomorphism.iter().map(|&e| inst.element_name(e)).collect();
        assert_eq!(h, ["a", "b"]);
    }

    #[test]
    fn shared_first_element() {
        let inst = binary(&[("a", "b"), ("a", "c")]);
        let u = unfold(&inst, &s_only()).unwrap();
        let a = u.instance.element_id("a").unwrap().0;
        for t in ["a.b", "a.c"] {
            assert_eq!(u.forest.parent(u.instance.element_id(t).unwrap().0), Some(a));
        }
        assert_eq!(u.height(), 2);
        u.check(&inst).unwrap();
    }

    #[test]
    fn unary_instance_is_unchanged() {
        let inst = Instance::from_facts(
            Signature::new([("R", 1)]).unwrap(),
            [("R", vec!["a"]), ("R", vec!["b"])],
        )
        .unwrap();
        let e = InversionFreeExpression::new(exists("x", atom("R", &["x"]))).validate().unwrap();
        let u = unfold(&inst, &e).unwrap();
        assert_eq!(u.instance.to_string(), inst.to_string());
        assert_eq!(u.height(), 1);
    }

    #[test]
    fn unranked_and_unordered_are_rejected() {
        let inst = binary(&[("a", "b"), ("b", "a")]);
        assert!(matches!(unfold(&inst, &s_only()), Err(UnfoldError::InstanceNotRanked { .. })));
        let mut inst = binary(&[("a", "b")]);
        inst.set_order(&["b", "a"]).unwrap();
        assert!(matches!(unfold(&inst, &s_only()), Err(UnfoldError::InstanceNotRanked { .. })));
        let t = Instance::from_facts(Signature::new([("T", 2)]).unwrap(), [("T", vec!["a", "b"])]).unwrap();
        assert_eq!(unfold(&t, &s_only()).unwrap_err(), UnfoldError::MissingRelationOrder("T".into()));
    }

    #[test]
    fn respects_the_query() {
        let mut inst = Instance::new(Signature::new([("R", 1), ("S", 2)]).unwrap());
        for (a, b) in [("a", "b"), ("a", "c"), ("b", "c"), ("c", "d")] {
            inst.add_fact("S", &[a, b]).unwrap();
        }
        for a in ["a", "b", "c"] {
            inst.add_fact("R", &[a]).unwrap();
        }
        let e = rs();
        let u = unfold(&inst, &e).unwrap();
        let q = e.to_ucq();
        verify_respects(&inst, &u, &q).unwrap();
        verify_one_direction(&inst, &u, &q).unwrap();
    }

    #[test]
    fn empty_instance_passes() {
        let inst = Instance::new(Signature::new([("R", 1), ("S", 2)]).unwrap());
        let e = rs();
        let u = unfold(&inst, &e).unwrap();
        verify_respects(&inst, &u, &e.to_ucq()).unwrap();
    }

    #[test]
    fn a_path_query_is_not_respected() {
        let inst = binary(&[("a", "b"), ("b", "c")]);
        let u = unfold(&inst, &s_only()).unwrap();
        let q = crate::query::parse_query("S(x,y) & S(y,z)").unwrap();
        assert!(matches!(verify_respects(&inst, &u, &q), Err(UnfoldError::LineageMismatch { .. })));
        verify_one_direction(&inst, &u, &q).unwrap();
    }
}
