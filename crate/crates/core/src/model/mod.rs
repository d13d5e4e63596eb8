//! Relational signatures, instances and probability valuations.
//!
//! Instances follow active-domain semantics: the domain is exactly the set of
//! elements occurring in facts. Elements are interned; the insertion order of
//! facts is the canonical fact index used for variable orders and lineage
//! variable naming throughout the crate.

mod factset;
mod gaifman;
mod generate;
mod json;
mod probability;

pub use factset::FactSet;
pub use gaifman::{gaifman_graph, GaifmanGraph};
pub use generate::{generate_instance, Direction, Family, LineStep};
pub use json::{parse_probabilities, probabilities_to_json, InstanceJson, ProbabilityJson};
pub use probability::{ratio, ProbabilityValuation};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate fact {0}")]
    DuplicateFact(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has arity {expected}, got {found} arguments")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("graph axiom violated: {0}")]
    GraphAxiomViolation(String),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("invalid domain order: {0}")]
    InvalidOrder(String),
}

/// Index of a relation inside its [`Signature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelId(pub usize);

/// Interned domain element of an [`Instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementId(pub usize);

/// Position of a fact in its instance (insertion order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    relations: Vec<Relation>,
    by_name: HashMap<String, RelId>,
}

impl Signature {
    pub fn new<S: Into<String>>(
        relations: impl IntoIterator<Item = (S, usize)>,
    ) -> Result<Self, ModelError> {
        let mut sig = Signature::default();
        for (name, arity) in relations {
            sig.add(name, arity)?;
        }
        Ok(sig)
    }

    pub fn add(&mut self, name: impl Into<String>, arity: usize) -> Result<RelId, ModelError> {
        let name = name.into();
        if arity == 0 {
            return Err(ModelError::InvalidSignature(format!(
                "relation `{name}` must have positive arity"
            )));
        }
        if self.by_name.contains_key(&name) {
            return Err(ModelError::InvalidSignature(format!(
                "relation `{name}` declared twice"
            )));
        }
        let id = RelId(self.relations.len());
        self.by_name.insert(name.clone(), id);
        self.relations.push(Relation { name, arity });
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<RelId> {
        self.by_name.get(name).copied()
    }

    pub fn relation(&self, id: RelId) -> &Relation {
        &self.relations[id.0]
    }

    pub fn name(&self, id: RelId) -> &str {
        &self.relations[id.0].name
    }

    pub fn arity(&self, id: RelId) -> usize {
        self.relations[id.0].arity
    }

    /// Maximal arity of the signature (0 for an empty signature).
    pub fn max_arity(&self) -> usize {
        self.relations.iter().map(|r| r.arity).max().unwrap_or(0)
    }

    pub fn relations(&self) -> impl Iterator<Item = (RelId, &Relation)> {
        self.relations.iter().enumerate().map(|(i, r)| (RelId(i), r))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub relation: RelId,
    pub args: Vec<ElementId>,
}

/// A finite set of ground facts over a signature.
#[derive(Debug, Clone)]
pub struct Instance {
    signature: Signature,
    elements: Vec<String>,
    element_ids: HashMap<String, ElementId>,
    facts: Vec<Fact>,
    fact_ids: HashMap<Fact, FactId>,
    order: Option<Vec<ElementId>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature
            && self.elements == other.elements
            && self.facts == other.facts
            && self.order == other.order
    }
}

impl Eq for Instance {}

impl Instance {
    pub fn new(signature: Signature) -> Self {
        Instance {
            signature,
            elements: Vec::new(),
            element_ids: HashMap::new(),
            facts: Vec::new(),
            fact_ids: HashMap::new(),
            order: None,
        }
    }

    /// Builds an instance from `(relation, args)` pairs, validating every fact.
    pub fn from_facts<'a>(
        signature: Signature,
        facts: impl IntoIterator<Item = (&'a str, Vec<&'a str>)>,
    ) -> Result<Self, ModelError> {
        let mut inst = Instance::new(signature);
        for (rel, args) in facts {
            inst.add_fact(rel, &args)?;
        }
        Ok(inst)
    }

    pub fn add_fact<S: AsRef<str>>(&mut self, relation: &str, args: &[S]) -> Result<FactId, ModelError> {
        let rel = self
            .signature
            .lookup(relation)
            .ok_or_else(|| ModelError::UnknownRelation(relation.to_string()))?;
        let arity = self.signature.arity(rel);
        if args.len() != arity {
            return Err(ModelError::ArityMismatch {
                relation: relation.to_string(),
                expected: arity,
                found: args.len(),
            });
        }
        let known: Option<Vec<ElementId>> =
            args.iter().map(|a| self.intern_peek(a.as_ref())).collect();
        if let Some(ids) = known {
            let fact = Fact {
                relation: rel,
                args: ids,
            };
            if self.fact_ids.contains_key(&fact) {
                return Err(ModelError::DuplicateFact(self.display_fact(&fact)));
            }
        }
        let args: Vec<ElementId> = args.iter().map(|a| self.intern(a.as_ref())).collect();
        let fact = Fact { relation: rel, args };
        Ok(self.push_fact(fact))
    }

    fn intern_peek(&self, name: &str) -> Option<ElementId> {
        self.element_ids.get(name).copied()
    }

    fn intern(&mut self, name: &str) -> ElementId {
        if let Some(id) = self.element_ids.get(name) {
            return *id;
        }
        let id = ElementId(self.elements.len());
        self.elements.push(name.to_string());
        self.element_ids.insert(name.to_string(), id);
        id
    }

    fn push_fact(&mut self, fact: Fact) -> FactId {
        let id = FactId(self.facts.len());
        self.fact_ids.insert(fact.clone(), id);
        self.facts.push(fact);
        id
    }

    /// Declares a total order on the domain, used by the ranking and unfolding
    /// constructions. Every element must appear exactly once.
    pub fn set_order<S: AsRef<str>>(&mut self, order: &[S]) -> Result<(), ModelError> {
        let mut seen = vec![false; self.elements.len()];
        let mut ids = Vec::with_capacity(order.len());
        for name in order {
            let id = self.element_id(name.as_ref()).ok_or_else(|| {
                ModelError::InvalidOrder(format!("`{}` is not in the domain", name.as_ref()))
            })?;
            if std::mem::replace(&mut seen[id.0], true) {
                return Err(ModelError::InvalidOrder(format!(
                    "`{}` listed twice",
                    name.as_ref()
                )));
            }
            ids.push(id);
        }
        if ids.len() != self.elements.len() {
            return Err(ModelError::InvalidOrder(
                "order must list every domain element".into(),
            ));
        }
        self.order = Some(ids);
        Ok(())
    }

    pub fn order(&self) -> Option<&[ElementId]> {
        self.order.as_deref()
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact(&self, id: FactId) -> &Fact {
        &self.facts[id.0]
    }

    pub fn fact_id(&self, fact: &Fact) -> Option<FactId> {
        self.fact_ids.get(fact).copied()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Number of domain elements, i.e. the size of the active domain.
    pub fn domain_size(&self) -> usize {
        self.elements.len()
    }

    pub fn element_name(&self, id: ElementId) -> &str {
        &self.elements[id.0]
    }

    pub fn element_id(&self, name: &str) -> Option<ElementId> {
        self.element_ids.get(name).copied()
    }

    pub fn elements(&self) -> impl Iterator<Item = (ElementId, &str)> {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, e)| (ElementId(i), e.as_str()))
    }

    pub fn display_fact(&self, fact: &Fact) -> String {
        let args: Vec<&str> = fact.args.iter().map(|a| self.element_name(*a)).collect();
        format!("{}({})", self.signature.name(fact.relation), args.join(","))
    }

    /// The subinstance induced by `keep`, with its own active domain.
    /// Fact indices are renumbered in increasing original order.
    pub fn subinstance(&self, keep: &FactSet) -> Instance {
        let mut sub = Instance::new(self.signature.clone());
        for (i, fact) in self.facts.iter().enumerate() {
            if keep.contains(i) {
                let args: Vec<&str> = fact.args.iter().map(|a| self.element_name(*a)).collect();
                sub.add_fact(self.signature.name(fact.relation), &args)
                    .expect("facts of a valid instance stay valid");
            }
        }
        sub
    }

    /// Checks the undirected-graph axioms for a graph-signature instance: no
    /// fact `E(x,x)` and `E(x,y)` present whenever `E(y,x)` is.
    pub fn validate_as_graph(&self) -> Result<(), ModelError> {
        for fact in &self.facts {
            if self.signature.arity(fact.relation) != 2 {
                return Err(ModelError::GraphAxiomViolation(format!(
                    "relation `{}` is not binary",
                    self.signature.name(fact.relation)
                )));
            }
            if fact.args[0] == fact.args[1] {
                return Err(ModelError::GraphAxiomViolation(format!(
                    "self-loop {}",
                    self.display_fact(fact)
                )));
            }
            let reverse = Fact {
                relation: fact.relation,
                args: vec![fact.args[1], fact.args[0]],
            };
            if !self.fact_ids.contains_key(&reverse) {
                return Err(ModelError::GraphAxiomViolation(format!(
                    "{} has no symmetric fact",
                    self.display_fact(fact)
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let facts: Vec<String> = self.facts.iter().map(|fact| self.display_fact(fact)).collect();
        write!(f, "{{{}}}", facts.join(", "))
    }
}

/// Validates a raw instance description, reporting the first violated invariant.
pub fn validate_instance(raw: &InstanceJson) -> Result<(), ModelError> {
    raw.to_instance().map(|_| ())
}
