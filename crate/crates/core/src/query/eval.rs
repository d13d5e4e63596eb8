//! Backtracking homomorphism search, the ground-truth semantics for queries.

use std::collections::BTreeMap;

use super::{CqNeq, QueryError, UcqNeq};
use crate::model::{ElementId, FactSet, Instance};

pub const DEFAULT_MATCH_LIMIT: usize = 24;

/// Image of a homomorphism from one disjunct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub facts: FactSet,
    pub disjunct: usize,
    /// Image of every variable of the disjunct.
    pub assignment: Vec<ElementId>,
}

impl Match {
    pub fn binding<'a>(&self, q: &'a UcqNeq) -> BTreeMap<&'a str, ElementId> {
        q.disjuncts[self.disjunct]
            .variables
            .iter()
            .map(String::as_str)
            .zip(self.assignment.iter().copied())
            .collect()
    }
}

struct Search<'a> {
    cq: &'a CqNeq,
    inst: &'a Instance,
    candidates: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(cq: &'a CqNeq, inst: &'a Instance, keep: Option<&FactSet>) -> Self {
        let sig = inst.signature();
        let candidates: Vec<Vec<usize>> = cq
            .atoms
            .iter()
            .map(|atom| {
                let Some(rel) = sig.lookup(&atom.relation) else {
                    return Vec::new();
                };
                if sig.arity(rel) != atom.vars.len() {
                    return Vec::new();
                }
                inst.facts()
                    .iter()
                    .enumerate()
                    .filter(|(i, f)| {
                        f.relation == rel
                            && keep.is_none_or(|k| k.contains(*i))
                            && atom.vars.iter().enumerate().all(|(p, v)| {
                                atom.vars[..p]
                                    .iter()
                                    .zip(&f.args)
                                    .all(|(w, a)| w != v || *a == f.args[p])
                            })
                    })
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        // most constrained atoms first: many already-bound variables, high
        // variable degree, few candidates
        let mut degree = vec![0usize; cq.variables.len()];
        for atom in &cq.atoms {
            for &v in &atom.vars {
                degree[v] += 1;
            }
        }
        let mut bound = vec![false; cq.variables.len()];
        let mut left: Vec<usize> = (0..cq.atoms.len()).collect();
        let mut order = Vec::with_capacity(left.len());
        while !left.is_empty() {
            let (pos, &next) = left
                .iter()
                .enumerate()
                .max_by_key(|(_, &a)| {
                    let vars = &cq.atoms[a].vars;
                    (
                        vars.iter().filter(|&&v| bound[v]).count(),
                        vars.iter().map(|&v| degree[v]).sum::<usize>(),
                        std::cmp::Reverse(candidates[a].len()),
                        std::cmp::Reverse(a),
                    )
                })
                .unwrap();
            left.remove(pos);
            for &v in &cq.atoms[next].vars {
                bound[v] = true;
            }
            order.push(next);
        }
        Search {
            cq,
            inst,
            candidates,
            order,
        }
    }

    /// Calls `found` for every homomorphism; stops when it returns false.
    fn run(&self, found: &mut dyn FnMut(&[Option<ElementId>], &[usize]) -> bool) {
        if self.candidates.iter().any(Vec::is_empty) {
            return;
        }
        let mut assign = vec![None; self.cq.variables.len()];
        let mut chosen = vec![0; self.cq.atoms.len()];
        self.step(0, &mut assign, &mut chosen, found);
    }

    fn step(
        &self,
        depth: usize,
        assign: &mut Vec<Option<ElementId>>,
        chosen: &mut Vec<usize>,
        found: &mut dyn FnMut(&[Option<ElementId>], &[usize]) -> bool,
    ) -> bool {
        if depth == self.order.len() {
            return found(assign, chosen);
        }
        let a = self.order[depth];
        let atom = &self.cq.atoms[a];
        for &fi in &self.candidates[a] {
            let fact = &self.inst.facts()[fi];
            let mut newly = Vec::new();
            let mut ok = true;
            for (&v, &e) in atom.vars.iter().zip(&fact.args) {
                match assign[v] {
                    Some(x) if x != e => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        assign[v] = Some(e);
                        newly.push(v);
                    }
                }
            }
            if ok {
                ok = self.cq.diseqs.iter().all(|&(x, y)| match (assign[x], assign[y]) {
                    (Some(a), Some(b)) => a != b,
                    _ => true,
                });
            }
            if ok {
                chosen[a] = fi;
                if !self.step(depth + 1, assign, chosen, found) {
                    for v in newly {
                        assign[v] = None;
                    }
                    return false;
                }
            }
            for v in newly {
                assign[v] = None;
            }
        }
        true
    }
}

pub fn evaluate(q: &UcqNeq, inst: &Instance) -> bool {
    q.disjuncts.iter().any(|cq| {
        let mut hit = false;
        Search::new(cq, inst, None).run(&mut |_, _| {
            hit = true;
            false
        });
        hit
    })
}

/// Evaluates `q` on the subinstance made of the facts in `keep`.
pub fn evaluate_on(q: &UcqNeq, inst: &Instance, keep: &FactSet) -> bool {
    q.disjuncts.iter().any(|cq| {
        let mut hit = false;
        Search::new(cq, inst, Some(keep)).run(&mut |_, _| {
            hit = true;
            false
        });
        hit
    })
}

/// All matches of `q` on the facts in `keep`, one per distinct fact set, in
/// order of discovery.
pub fn matches(q: &UcqNeq, inst: &Instance, keep: Option<&FactSet>) -> Vec<Match> {
    let mut out: Vec<Match> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (d, cq) in q.disjuncts.iter().enumerate() {
        Search::new(cq, inst, keep).run(&mut |assign, chosen| {
            let facts = FactSet::from_indices(inst.len(), chosen.iter().copied());
            if seen.insert(facts.clone()) {
                out.push(Match {
                    facts,
                    disjunct: d,
                    assignment: assign.iter().map(|a| a.expect("every variable is in an atom")).collect(),
                });
            }
            true
        });
    }
    out
}

pub fn minimal_matches(q: &UcqNeq, inst: &Instance) -> Result<Vec<Match>, QueryError> {
    minimal_matches_with_limit(q, inst, DEFAULT_MATCH_LIMIT)
}

/// Inclusion-minimal matches, sorted by size then fact set.
pub fn minimal_matches_with_limit(
    q: &UcqNeq,
    inst: &Instance,
    limit: usize,
) -> Result<Vec<Match>, QueryError> {
    if inst.len() > limit {
        return Err(QueryError::InstanceTooLarge {
            facts: inst.len(),
            limit,
        });
    }
    let mut all = matches(q, inst, None);
    all.sort_by(|a, b| a.facts.count().cmp(&b.facts.count()).then_with(|| a.facts.cmp(&b.facts)));
    let mut minimal: Vec<Match> = Vec::new();
    for m in all {
        if !minimal.iter().any(|k| k.facts.is_subset(&m.facts)) {
            minimal.push(m);
        }
    }
    Ok(minimal)
}

/// True iff every disjunct's atom graph is connected.
pub fn connected(q: &UcqNeq) -> bool {
    q.disjuncts.iter().all(CqNeq::is_connected)
}
