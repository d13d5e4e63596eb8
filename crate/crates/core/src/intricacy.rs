//! Intricacy of connected queries, decided by enumerating line instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Direction, FactSet, Instance, LineStep, ModelError, Signature};
use crate::query::{connected, minimal_matches_with_limit, QueryError, UcqNeq};

/// Largest number of line instances [`is_intricate`] will enumerate for one
/// length.
pub const DEFAULT_LINE_BUDGET: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntricacyError {
    #[error("query is not connected")]
    NotConnected,
    #[error("{lines} line instances exceed the budget of {budget}")]
    QueryTooLarge { lines: u64, budget: u64 },
    #[error("signature has no binary relation")]
    NoBinaryRelation,
    #[error("query is intricate")]
    QueryIsIntricate,
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Path `a1..a{k+1}` with one binary fact per step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineInstance {
    pub steps: Vec<LineStep>,
}

impl LineInstance {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Fact `i` joins `a{i+1}` and `a{i+2}`.
    pub fn realize(&self, sig: &Signature) -> Result<Instance, ModelError> {
        let mut inst = Instance::new(sig.clone());
        for (i, s) in self.steps.iter().enumerate() {
            let (a, b) = (format!("a{}", i + 1), format!("a{}", i + 2));
            match s.direction {
                Direction::Forward => inst.add_fact(&s.relation, &[a, b])?,
                Direction::Backward => inst.add_fact(&s.relation, &[b, a])?,
            };
        }
        Ok(inst)
    }

    /// The two facts around the middle element, for an even number of facts.
    pub fn middle(&self) -> Option<(usize, usize)> {
        let k = self.steps.len();
        (k >= 2 && k % 2 == 0).then(|| (k / 2 - 1, k / 2))
    }

    /// `F`/`B` per step, prefixed by the relation when there are several.
    pub fn pattern(&self) -> String {
        let many = self.steps.iter().any(|s| s.relation != self.steps[0].relation);
        self.steps
            .iter()
            .map(|s| {
                let d = if s.direction == Direction::Forward { "F" } else { "B" };
                if many {
                    format!("{}{d}", s.relation)
                } else {
                    d.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join(if many { " " } else { "" })
    }
}

fn binary_relations(sig: &Signature) -> Vec<String> {
    sig.relations()
        .filter(|(_, r)| r.arity == 2)
        .map(|(_, r)| r.name.clone())
        .collect()
}

fn choices(sig: &Signature) -> Result<Vec<LineStep>, IntricacyError> {
    let rels = binary_relations(sig);
    if rels.is_empty() {
        return Err(IntricacyError::NoBinaryRelation);
    }
    Ok(rels
        .iter()
        .flat_map(|r| [LineStep::forward(r), LineStep::backward(r)])
        .collect())
}

fn nth_line(choices: &[LineStep], facts: usize, mut index: u64) -> LineInstance {
    let base = choices.len() as u64;
    let mut steps = vec![choices[0].clone(); facts];
    for slot in (0..facts).rev() {
        steps[slot] = choices[(index % base) as usize].clone();
        index /= base;
    }
    LineInstance { steps }
}

fn line_count(base: usize, facts: usize) -> Option<u64> {
    (base as u64).checked_pow(u32::try_from(facts).ok()?)
}

/// Every line instance with `facts` facts, in lexicographic order: the first
/// step varies slowest, and each step runs over the binary relations in
/// declaration order, forward before backward.
pub fn enumerate_line_instances(
    sig: &Signature,
    facts: usize,
) -> Result<impl Iterator<Item = LineInstance>, IntricacyError> {
    let choices = choices(sig)?;
    let count = if facts == 0 {
        0
    } else {
        line_count(choices.len(), facts).unwrap_or(u64::MAX)
    };
    Ok((0..count).map(move |i| nth_line(&choices, facts, i)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntricacyVerdict {
    pub intricate: bool,
    /// Smallest `n` for which the query was found `n`-intricate.
    pub level: Option<usize>,
    /// First line of `2|q|+2` facts on which no minimal match holds both
    /// middle facts.
    pub counterexample: Option<LineInstance>,
}

fn query_signature(q: &UcqNeq) -> Result<Signature, IntricacyError> {
    Ok(Signature::new(q.relations())?)
}

/// Does some minimal match of `q` on `line` hold both middle facts?
pub fn middle_covered(q: &UcqNeq, sig: &Signature, line: &LineInstance) -> Result<bool, IntricacyError> {
    let (f, g) = line.middle().expect("even line of at least two facts");
    let inst = line.realize(sig)?;
    let both = FactSet::from_indices(inst.len(), [f, g]);
    Ok(minimal_matches_with_limit(q, &inst, inst.len())?
        .iter()
        .any(|m| both.is_subset(&m.facts)))
}

/// First line of `2n+2` facts that witnesses that `q` is not `n`-intricate.
pub fn first_counterexample(q: &UcqNeq, n: usize, budget: u64) -> Result<Option<LineInstance>, IntricacyError> {
    let sig = query_signature(q)?;
    let choices = choices(&sig)?;
    let facts = 2 * n + 2;
    let lines = line_count(choices.len(), facts).unwrap_or(u64::MAX);
    if lines > budget {
        return Err(IntricacyError::QueryTooLarge { lines, budget });
    }
    let found = (0..lines).into_par_iter().find_map_first(|i| {
        let line = nth_line(&choices, facts, i);
        match middle_covered(q, &sig, &line) {
            Ok(true) => None,
            Ok(false) => Some(Ok(line)),
            Err(e) => Some(Err(e)),
        }
    });
    found.transpose()
}

pub fn is_intricate(q: &UcqNeq) -> Result<IntricacyVerdict, IntricacyError> {
    is_intricate_with_budget(q, DEFAULT_LINE_BUDGET)
}

/// Tries `n = 0, 1, ..., |q|`: being `n`-intricate implies being
/// `m`-intricate for all `m > n`, so the first success settles the question,
/// and the check at `n = |q|` is the definition.
pub fn is_intricate_with_budget(q: &UcqNeq, budget: u64) -> Result<IntricacyVerdict, IntricacyError> {
    if !connected(q) {
        return Err(IntricacyError::NotConnected);
    }
    let size = q.size();
    for n in 0..=size {
        match first_counterexample(q, n, budget)? {
            None => {
                return Ok(IntricacyVerdict {
                    intricate: true,
                    level: Some(n),
                    counterexample: None,
                })
            }
            Some(line) if n == size => {
                return Ok(IntricacyVerdict {
                    intricate: false,
                    level: None,
                    counterexample: Some(line),
                })
            }
            Some(_) => {}
        }
    }
    unreachable!("the loop ends at n = |q|")
}

pub fn find_non_intricacy_witness(q: &UcqNeq) -> Result<LineInstance, IntricacyError> {
    is_intricate(q)?.counterexample.ok_or(IntricacyError::QueryIsIntricate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::qp;
    use crate::query::parse_query;

    #[test]
    fn enumeration_counts() {
        let r = Signature::new([("R", 2)]).unwrap();
        assert_eq!(enumerate_line_instances(&r, 2).unwrap().count(), 4);
        let rs = Signature::new([("R", 2), ("S", 2)]).unwrap();
        let lines: Vec<_> = enumerate_line_instances(&rs, 1).unwrap().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].steps[0], LineStep::backward("R"));
        assert_eq!(lines[2].steps[0], LineStep::forward("S"));
        assert_eq!(enumerate_line_instances(&r, 0).unwrap().count(), 0);
        let u = Signature::new([("U", 1)]).unwrap();
        assert!(matches!(enumerate_line_instances(&u, 1), Err(IntricacyError::NoBinaryRelation)));
    }

    #[test]
    fn lexicographic_order() {
        let r = Signature::new([("R", 2)]).unwrap();
        let p: Vec<String> = enumerate_line_instances(&r, 2).unwrap().map(|l| l.pattern()).collect();
        assert_eq!(p, ["FF", "FB", "BF", "BB"]);
    }

    #[test]
    fn qp_is_zero_intricate() {
        let v = is_intricate(&qp()).unwrap();
        assert!(v.intricate);
        assert_eq!(v.level, Some(0));
        assert_eq!(find_non_intricacy_witness(&qp()), Err(IntricacyError::QueryIsIntricate));
    }

    #[test]
    fn directed_path_is_not_intricate() {
        let q = parse_query("R(x,y) & R(y,z)").unwrap();
        let w = find_non_intricacy_witness(&q).unwrap();
        assert_eq!(w.len(), 2 * q.size() + 2);
        assert_eq!(w.pattern(), "FFFBFF");
        let alternating = LineInstance {
            steps: (0..6)
                .map(|i| if i % 2 == 0 { LineStep::forward("R") } else { LineStep::backward("R") })
                .collect(),
        };
        let sig = Signature::new([("R", 2)]).unwrap();
        assert!(!middle_covered(&q, &sig, &alternating).unwrap());
        assert!(!crate::query::evaluate(&q, &alternating.realize(&sig).unwrap()));
    }

    #[test]
    fn single_atom_is_not_intricate() {
        let v = is_intricate(&parse_query("R(x,y)").unwrap()).unwrap();
        assert!(!v.intricate);
        assert_eq!(v.counterexample.unwrap().len(), 4);
    }

    #[test]
    fn disconnected_is_rejected() {
        let q = parse_query("R(x,y) & R(z,w)").unwrap();
        assert_eq!(is_intricate(&q), Err(IntricacyError::NotConnected));
    }

    #[test]
    fn budget_guard() {
        let q = parse_query("R(x,y) & R(y,z) & R(z,w)").unwrap();
        assert!(matches!(
            is_intricate_with_budget(&q, 8),
            Err(IntricacyError::QueryTooLarge { .. })
        ));
    }
}
