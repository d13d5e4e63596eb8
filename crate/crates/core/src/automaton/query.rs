//! Deterministic automata for UCQ^≠ queries.
//!
//! A state is the set of partial matches achievable in the subtree read so
//! far. A partial match (profile) fixes a disjunct, the set of atoms already
//! mapped to kept facts and, per variable, whether it is unassigned, bound to
//! an element still in the current bag (by slot) or bound to an element that
//! has left the bag for good. Since the whole achievable set is tracked, the
//! automaton is deterministic by construction.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use super::{AutomatonError, Bdta, Projection, StateId, TreeAutomaton};
use crate::decomposition::NodeLabel;
use crate::model::Signature;
use crate::query::UcqNeq;

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

const UNASSIGNED: u8 = 0;
const DEAD: u8 = 1;
const LIVE: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Profile {
    disjunct: u16,
    matched: u64,
    /// `UNASSIGNED`, `DEAD` or `LIVE + slot` per variable.
    binding: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Content {
    Satisfied,
    Partial(BTreeSet<Profile>),
}

type Key = (u32, u32, Option<(String, Vec<u8>)>, bool, StateId, StateId);

#[derive(Default)]
struct Table {
    contents: Vec<Content>,
    ids: HashMap<Content, StateId>,
    memo: HashMap<Key, StateId>,
}

/// Automaton compiled from a query, built lazily as labels are met.
pub struct QueryAutomaton {
    query: UcqNeq,
    width: usize,
    cap: usize,
    table: Mutex<Table>,
}

pub fn compile_query(q: &UcqNeq, k: usize) -> Result<QueryAutomaton, AutomatonError> {
    compile_query_with_cap(q, k, DEFAULT_STATE_CAP)
}

pub fn compile_query_with_cap(q: &UcqNeq, k: usize, cap: usize) -> Result<QueryAutomaton, AutomatonError> {
    if k >= 32 {
        return Err(AutomatonError::WidthTooLarge(cap));
    }
    if q.disjuncts.iter().any(|d| d.atoms.len() > 64) || q.disjuncts.len() > u16::MAX as usize {
        return Err(AutomatonError::Malformed("query too large".into()));
    }
    let a = QueryAutomaton {
        query: q.clone(),
        width: k,
        cap,
        table: Mutex::new(Table::default()),
    };
    let absent = Content::Partial(a.empty_profiles());
    a.intern(&mut a.table.lock().unwrap(), absent)?;
    Ok(a)
}

impl QueryAutomaton {
    pub fn query(&self) -> &UcqNeq {
        &self.query
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of states discovered so far.
    pub fn state_count(&self) -> usize {
        self.table.lock().unwrap().contents.len()
    }

    fn empty_profiles(&self) -> BTreeSet<Profile> {
        self.query
            .disjuncts
            .iter()
            .enumerate()
            .map(|(d, cq)| Profile {
                disjunct: d as u16,
                matched: 0,
                binding: vec![UNASSIGNED; cq.variables.len()],
            })
            .collect()
    }

    fn intern(&self, t: &mut Table, c: Content) -> Result<StateId, AutomatonError> {
        if let Some(&id) = t.ids.get(&c) {
            return Ok(id);
        }
        if t.contents.len() >= self.cap {
            return Err(AutomatonError::WidthTooLarge(self.cap));
        }
        let id = t.contents.len();
        t.contents.push(c.clone());
        t.ids.insert(c, id);
        Ok(id)
    }

    fn diseqs_ok(&self, p: &Profile) -> bool {
        self.query.disjuncts[p.disjunct as usize]
            .diseqs
            .iter()
            .all(|&(x, y)| !(p.binding[x] >= LIVE && p.binding[x] == p.binding[y]))
    }

    fn complete(&self, p: &Profile) -> bool {
        let n = self.query.disjuncts[p.disjunct as usize].atoms.len();
        p.matched.count_ones() as usize == n
    }

    fn merge(&self, a: &Profile, b: &Profile) -> Option<Profile> {
        if a.disjunct != b.disjunct || a.matched & b.matched != 0 {
            return None;
        }
        let mut binding = Vec::with_capacity(a.binding.len());
        for (&x, &y) in a.binding.iter().zip(&b.binding) {
            binding.push(match (x, y) {
                (UNASSIGNED, v) | (v, UNASSIGNED) => v,
                (x, y) if x == y && x >= LIVE => x,
                _ => return None,
            });
        }
        let p = Profile {
            disjunct: a.disjunct,
            matched: a.matched | b.matched,
            binding,
        };
        self.diseqs_ok(&p).then_some(p)
    }

    /// Extends `p` by mapping atom `i` to the fact `args` (slots).
    fn extend(&self, p: &Profile, i: usize, args: &[u8]) -> Option<Profile> {
        let atom = &self.query.disjuncts[p.disjunct as usize].atoms[i];
        let mut binding = p.binding.clone();
        for (&v, &s) in atom.vars.iter().zip(args) {
            match binding[v] {
                UNASSIGNED => binding[v] = LIVE + s,
                b if b == LIVE + s => {}
                _ => return None,
            }
        }
        let q = Profile {
            disjunct: p.disjunct,
            matched: p.matched | 1 << i,
            binding,
        };
        self.diseqs_ok(&q).then_some(q)
    }

    fn compute(
        &self,
        t: &Table,
        sig: &Signature,
        label: &NodeLabel,
        kept: bool,
        left: StateId,
        right: StateId,
    ) -> Content {
        let (Content::Partial(l), Content::Partial(r)) = (&t.contents[left], &t.contents[right]) else {
            return Content::Satisfied;
        };
        let mut set: BTreeSet<Profile> = BTreeSet::new();
        for a in l {
            for b in r {
                if let Some(p) = self.merge(a, b) {
                    set.insert(p);
                }
            }
        }
        if let (true, Some((rel, args))) = (kept, &label.fact) {
            let name = sig.name(*rel);
            let mut work: Vec<Profile> = set.iter().cloned().collect();
            while let Some(p) = work.pop() {
                let atoms = &self.query.disjuncts[p.disjunct as usize].atoms;
                for (i, atom) in atoms.iter().enumerate() {
                    if p.matched >> i & 1 == 1 || atom.relation != name || atom.vars.len() != args.len() {
                        continue;
                    }
                    if let Some(q) = self.extend(&p, i, args) {
                        if set.insert(q.clone()) {
                            work.push(q);
                        }
                    }
                }
            }
        }
        if set.iter().any(|p| self.complete(p)) {
            return Content::Satisfied;
        }
        let projected = set
            .into_iter()
            .map(|mut p| {
                for b in p.binding.iter_mut() {
                    if *b >= LIVE && label.up >> (*b - LIVE) & 1 == 0 {
                        *b = DEAD;
                    }
                }
                p
            })
            .filter(|p| {
                // a variable that left the bag cannot be used by a pending atom
                let cq = &self.query.disjuncts[p.disjunct as usize];
                cq.atoms.iter().enumerate().all(|(i, atom)| {
                    p.matched >> i & 1 == 1 || atom.vars.iter().all(|&v| p.binding[v] != DEAD)
                })
            })
            .collect();
        Content::Partial(projected)
    }

    /// Explicit automaton over the states reachable from `labels`, using the
    /// full label as symbol.
    pub fn materialize(&self, sig: &Signature, labels: &[NodeLabel]) -> Result<Bdta, AutomatonError> {
        let mut labels: Vec<&NodeLabel> = labels.iter().collect();
        labels.sort();
        labels.dedup();
        let mut reached: BTreeSet<StateId> = BTreeSet::from([self.absent()]);
        let mut rows: Vec<(NodeLabel, bool, StateId, StateId, StateId)> = Vec::new();
        let mut done: std::collections::HashSet<(usize, bool, StateId, StateId)> = Default::default();
        loop {
            let current: Vec<StateId> = reached.iter().copied().collect();
            let mut grew = false;
            for (li, label) in labels.iter().enumerate() {
                for kept in [false, true] {
                    if kept && label.fact.is_none() {
                        continue;
                    }
                    for &l in &current {
                        for &r in &current {
                            if !done.insert((li, kept, l, r)) {
                                continue;
                            }
                            let s = self.step(sig, label, kept, l, r)?;
                            rows.push(((*label).clone(), kept, l, r, s));
                            grew |= reached.insert(s);
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let ids: Vec<StateId> = reached.into_iter().collect();
        let index = |s: StateId| ids.binary_search(&s).expect("reached state");
        let names: Vec<String> = ids.iter().map(|&s| self.describe(s)).collect();
        let accepting: Vec<bool> = ids.iter().map(|&s| self.is_accepting(s)).collect();
        let mut b = Bdta::empty(Projection::Full, names, index(self.absent()), accepting);
        for (label, kept, l, r, s) in rows {
            let sym = Projection::Full.symbol(sig, &label, kept);
            b.add_transition(&sym, index(l), index(r), index(s));
        }
        Ok(b)
    }
}

impl TreeAutomaton for QueryAutomaton {
    fn absent(&self) -> StateId {
        0
    }

    fn step(
        &self,
        sig: &Signature,
        label: &NodeLabel,
        kept: bool,
        left: StateId,
        right: StateId,
    ) -> Result<StateId, AutomatonError> {
        if label.slots >> (self.width + 1) != 0 {
            return Err(AutomatonError::LabelNotInAlphabet(label.render(sig)));
        }
        let key: Key = (
            label.slots,
            label.up,
            label.fact.as_ref().map(|(r, a)| (sig.name(*r).to_string(), a.clone())),
            kept && label.fact.is_some(),
            left,
            right,
        );
        let mut t = self.table.lock().unwrap();
        if let Some(&s) = t.memo.get(&key) {
            return Ok(s);
        }
        let c = self.compute(&t, sig, label, key.3, left, right);
        let s = self.intern(&mut t, c)?;
        t.memo.insert(key, s);
        Ok(s)
    }

    fn is_accepting(&self, state: StateId) -> bool {
        matches!(self.table.lock().unwrap().contents[state], Content::Satisfied)
    }

    fn describe(&self, state: StateId) -> String {
        match &self.table.lock().unwrap().contents[state] {
            Content::Satisfied => "sat".into(),
            Content::Partial(ps) => {
                let parts: Vec<String> = ps
                    .iter()
                    .filter(|p| p.matched != 0)
                    .map(|p| {
                        let b: String = p
                            .binding
                            .iter()
                            .map(|&b| match b {
                                UNASSIGNED => '_',
                                DEAD => '*',
                                s => char::from_digit((s - LIVE) as u32, 36).unwrap_or('?'),
                            })
                            .collect();
                        format!("{}:{:b}:{}", p.disjunct, p.matched, b)
                    })
                    .collect();
                format!("{{{}}}", parts.join(" "))
            }
        }
    }
}
