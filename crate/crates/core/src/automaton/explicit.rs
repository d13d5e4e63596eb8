//! Explicit automata given by transition tables over symbol strings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{AutomatonError, StateId, TreeAutomaton};
use crate::decomposition::NodeLabel;
use crate::model::Signature;

/// How a node label and its keep flag are turned into a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// `-` for nodes without fact, otherwise the relation name followed by
    /// `+` (kept) or `-` (dropped).
    Relation,
    /// The rendered label followed by `+`/`-` for fact nodes.
    Full,
}

impl Projection {
    pub fn symbol(&self, sig: &Signature, label: &NodeLabel, kept: bool) -> String {
        let flag = if kept { "+" } else { "-" };
        match (self, &label.fact) {
            (Projection::Relation, None) => "-".to_string(),
            (Projection::Relation, Some((rel, _))) => format!("{}{flag}", sig.name(*rel)),
            (Projection::Full, None) => label.render(sig),
            (Projection::Full, Some(_)) => format!("{}{flag}", label.render(sig)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Tables<T> {
    projection: Projection,
    states: Vec<String>,
    absent: StateId,
    accepting: Vec<bool>,
    alphabet: Vec<String>,
    symbols: HashMap<String, usize>,
    /// Keyed by (symbol, left, right); leaves use the absent state twice.
    delta: HashMap<(usize, StateId, StateId), T>,
}

impl<T: Clone> Tables<T> {
    fn new(projection: Projection, states: Vec<String>, absent: StateId, accepting: Vec<bool>) -> Self {
        Tables {
            projection,
            states,
            absent,
            accepting,
            alphabet: Vec::new(),
            symbols: HashMap::new(),
            delta: HashMap::new(),
        }
    }

    fn symbol_id(&mut self, sym: &str) -> usize {
        if let Some(&i) = self.symbols.get(sym) {
            return i;
        }
        self.alphabet.push(sym.to_string());
        self.symbols.insert(sym.to_string(), self.alphabet.len() - 1);
        self.alphabet.len() - 1
    }

    fn lookup(
        &self,
        sig: &Signature,
        label: &NodeLabel,
        kept: bool,
        l: StateId,
        r: StateId,
    ) -> Result<&T, AutomatonError> {
        let sym = self.projection.symbol(sig, label, kept);
        let &s = self
            .symbols
            .get(&sym)
            .ok_or_else(|| AutomatonError::LabelNotInAlphabet(sym.clone()))?;
        self.delta
            .get(&(s, l, r))
            .ok_or_else(|| AutomatonError::MissingTransition {
                symbol: sym,
                left: self.states[l].clone(),
                right: self.states[r].clone(),
            })
    }
}

/// Bottom-up deterministic tree automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bdta {
    t: Tables<StateId>,
}

/// Bottom-up nondeterministic tree automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bnta {
    t: Tables<Vec<StateId>>,
}

/// Wire form shared by both kinds of automata. `leaf` rows give the targets
/// when both children are absent; `binary` rows list left and right states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonJson {
    pub deterministic: bool,
    pub projection: Projection,
    pub states: Vec<String>,
    pub absent: String,
    pub accepting: Vec<String>,
    pub alphabet: Vec<String>,
    pub leaf: Vec<(String, Vec<String>)>,
    pub binary: Vec<(String, String, String, Vec<String>)>,
}

macro_rules! common {
    ($ty:ty) => {
        impl $ty {
            pub fn states(&self) -> &[String] {
                &self.t.states
            }

            pub fn state_count(&self) -> usize {
                self.t.states.len()
            }

            pub fn absent_state(&self) -> StateId {
                self.t.absent
            }

            pub fn alphabet(&self) -> &[String] {
                &self.t.alphabet
            }

            pub fn projection(&self) -> Projection {
                self.t.projection
            }

            pub fn accepts_state(&self, s: StateId) -> bool {
                self.t.accepting[s]
            }

            pub fn state_id(&self, name: &str) -> Option<StateId> {
                self.t.states.iter().position(|s| s == name)
            }

            /// Declares a symbol without transitions.
            pub fn add_symbol(&mut self, sym: &str) {
                self.t.symbol_id(sym);
            }
        }
    };
}

common!(Bdta);
common!(Bnta);

impl Bdta {
    pub fn empty(projection: Projection, states: Vec<String>, absent: StateId, accepting: Vec<bool>) -> Self {
        Bdta {
            t: Tables::new(projection, states, absent, accepting),
        }
    }

    pub fn add_transition(&mut self, sym: &str, left: StateId, right: StateId, target: StateId) {
        let s = self.t.symbol_id(sym);
        self.t.delta.insert((s, left, right), target);
    }

    pub fn transition(&self, sym: &str, left: StateId, right: StateId) -> Option<StateId> {
        let s = *self.t.symbols.get(sym)?;
        self.t.delta.get(&(s, left, right)).copied()
    }

    pub fn transition_count(&self) -> usize {
        self.t.delta.len()
    }

    pub fn to_json(&self) -> AutomatonJson {
        to_json(&self.t, true, |&s| vec![s])
    }

    pub fn from_json(j: &AutomatonJson) -> Result<Self, AutomatonError> {
        if !j.deterministic {
            return Err(AutomatonError::Malformed("automaton is not deterministic".into()));
        }
        let t = from_json(j, |targets| match targets {
            [s] => Ok(*s),
            _ => Err(AutomatonError::Malformed("deterministic rows need one target".into())),
        })?;
        Ok(Bdta { t })
    }

    /// Same automaton viewed as nondeterministic.
    pub fn to_nondeterministic(&self) -> Bnta {
        let t = Tables {
            projection: self.t.projection,
            states: self.t.states.clone(),
            absent: self.t.absent,
            accepting: self.t.accepting.clone(),
            alphabet: self.t.alphabet.clone(),
            symbols: self.t.symbols.clone(),
            delta: self.t.delta.iter().map(|(k, &v)| (*k, vec![v])).collect(),
        };
        Bnta { t }
    }
}

impl TreeAutomaton for Bdta {
    fn absent(&self) -> StateId {
        self.t.absent
    }

    fn step(
        &self,
        sig: &Signature,
        label: &NodeLabel,
        kept: bool,
        left: StateId,
        right: StateId,
    ) -> Result<StateId, AutomatonError> {
        self.t.lookup(sig, label, kept, left, right).copied()
    }

    fn is_accepting(&self, state: StateId) -> bool {
        self.t.accepting[state]
    }

    fn describe(&self, state: StateId) -> String {
        self.t.states[state].clone()
    }
}

impl Bnta {
    pub fn empty(projection: Projection, states: Vec<String>, absent: StateId, accepting: Vec<bool>) -> Self {
        Bnta {
            t: Tables::new(projection, states, absent, accepting),
        }
    }

    pub fn add_transition(&mut self, sym: &str, left: StateId, right: StateId, targets: &[StateId]) {
        let s = self.t.symbol_id(sym);
        let row = self.t.delta.entry((s, left, right)).or_default();
        for &x in targets {
            if !row.contains(&x) {
                row.push(x);
            }
        }
        row.sort_unstable();
    }

    /// Targets of a row; empty when the row is missing.
    pub fn targets(&self, sym: &str, left: StateId, right: StateId) -> &[StateId] {
        self.t
            .symbols
            .get(sym)
            .and_then(|&s| self.t.delta.get(&(s, left, right)))
            .map_or(&[], Vec::as_slice)
    }

    pub fn to_json(&self) -> AutomatonJson {
        to_json(&self.t, false, |v: &Vec<StateId>| v.clone())
    }

    pub fn from_json(j: &AutomatonJson) -> Result<Self, AutomatonError> {
        let t = from_json(j, |targets| Ok(targets.to_vec()))?;
        Ok(Bnta { t })
    }

    /// States reachable at a node given the reachable sets of its children.
    pub fn step_set(
        &self,
        sig: &Signature,
        label: &NodeLabel,
        kept: bool,
        left: &BTreeSet<StateId>,
        right: &BTreeSet<StateId>,
    ) -> Result<BTreeSet<StateId>, AutomatonError> {
        let sym = self.t.projection.symbol(sig, label, kept);
        let &s = self
            .t
            .symbols
            .get(&sym)
            .ok_or(AutomatonError::LabelNotInAlphabet(sym))?;
        Ok(self.post(s, left, right))
    }

    fn post(&self, s: usize, left: &BTreeSet<StateId>, right: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut out = BTreeSet::new();
        for &l in left {
            for &r in right {
                if let Some(ts) = self.t.delta.get(&(s, l, r)) {
                    out.extend(ts.iter().copied());
                }
            }
        }
        out
    }

    /// Subset construction restricted to reachable subsets. The subset made
    /// of the absent state alone is the absent state of the result; the empty
    /// subset, when reachable, is a rejecting sink.
    pub fn determinize(&self, cap: usize) -> Result<Bdta, AutomatonError> {
        let absent: BTreeSet<StateId> = BTreeSet::from([self.t.absent]);
        let mut subsets: Vec<BTreeSet<StateId>> = vec![absent.clone()];
        let mut index: BTreeMap<BTreeSet<StateId>, StateId> = BTreeMap::from([(absent, 0)]);
        let mut rows: Vec<(usize, StateId, StateId, StateId)> = Vec::new();
        let mut done = std::collections::HashSet::new();
        loop {
            let n = subsets.len();
            for s in 0..self.t.alphabet.len() {
                for l in 0..n {
                    for r in 0..n {
                        if !done.insert((s, l, r)) {
                            continue;
                        }
                        let target = self.post(s, &subsets[l], &subsets[r]);
                        let id = match index.get(&target) {
                            Some(&id) => id,
                            None => {
                                if subsets.len() >= cap {
                                    return Err(AutomatonError::StateExplosion(cap));
                                }
                                subsets.push(target.clone());
                                index.insert(target, subsets.len() - 1);
                                subsets.len() - 1
                            }
                        };
                        rows.push((s, l, r, id));
                    }
                }
            }
            if subsets.len() == n {
                break;
            }
        }
        let names = subsets
            .iter()
            .map(|set| {
                let parts: Vec<&str> = set.iter().map(|&q| self.t.states[q].as_str()).collect();
                format!("{{{}}}", parts.join(","))
            })
            .collect();
        let accepting = subsets.iter().map(|set| set.iter().any(|&q| self.t.accepting[q])).collect();
        let mut d = Bdta::empty(self.t.projection, names, 0, accepting);
        for sym in &self.t.alphabet {
            d.add_symbol(sym);
        }
        for (s, l, r, id) in rows {
            let sym = self.t.alphabet[s].clone();
            d.add_transition(&sym, l, r, id);
        }
        Ok(d)
    }
}

fn to_json<T>(t: &Tables<T>, deterministic: bool, targets: impl Fn(&T) -> Vec<StateId>) -> AutomatonJson {
    let name = |s: StateId| t.states[s].clone();
    let mut keys: Vec<&(usize, StateId, StateId)> = t.delta.keys().collect();
    keys.sort();
    let mut leaf = Vec::new();
    let mut binary = Vec::new();
    for key in keys {
        let &(s, l, r) = key;
        let ts: Vec<String> = targets(&t.delta[key]).into_iter().map(name).collect();
        if l == t.absent && r == t.absent {
            leaf.push((t.alphabet[s].clone(), ts));
        } else {
            binary.push((t.alphabet[s].clone(), name(l), name(r), ts));
        }
    }
    AutomatonJson {
        deterministic,
        projection: t.projection,
        states: t.states.clone(),
        absent: name(t.absent),
        accepting: (0..t.states.len()).filter(|&s| t.accepting[s]).map(name).collect(),
        alphabet: t.alphabet.clone(),
        leaf,
        binary,
    }
}

fn from_json<T>(
    j: &AutomatonJson,
    targets: impl Fn(&[StateId]) -> Result<T, AutomatonError>,
) -> Result<Tables<T>, AutomatonError>
where
    T: Clone,
{
    let mut ids: HashMap<&str, StateId> = HashMap::new();
    for (i, s) in j.states.iter().enumerate() {
        if ids.insert(s, i).is_some() {
            return Err(AutomatonError::Malformed(format!("state `{s}` declared twice")));
        }
    }
    let state = |s: &str| {
        ids.get(s)
            .copied()
            .ok_or_else(|| AutomatonError::Malformed(format!("unknown state `{s}`")))
    };
    let absent = state(&j.absent)?;
    let mut accepting = vec![false; j.states.len()];
    for s in &j.accepting {
        accepting[state(s)?] = true;
    }
    let mut t = Tables::new(j.projection, j.states.clone(), absent, accepting);
    for sym in &j.alphabet {
        t.symbol_id(sym);
    }
    let mut insert = |sym: &str, l: StateId, r: StateId, ts: &[String]| -> Result<(), AutomatonError> {
        let s = *t
            .symbols
            .get(sym)
            .ok_or_else(|| AutomatonError::Malformed(format!("symbol `{sym}` not in alphabet")))?;
        let ts: Vec<StateId> = ts.iter().map(|x| state(x)).collect::<Result<_, _>>()?;
        if t.delta.insert((s, l, r), targets(&ts)?).is_some() {
            return Err(AutomatonError::Malformed(format!("duplicate row for `{sym}`")));
        }
        Ok(())
    };
    for (sym, ts) in &j.leaf {
        insert(sym, absent, absent, ts)?;
    }
    for (sym, l, r, ts) in &j.binary {
        insert(sym, state(l)?, state(r)?, ts)?;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::run;
    use crate::decomposition::{decompose_pathwidth, tree_encode};
    use crate::fixtures::{parity_bdta, parity_instance, parity_nta};
    use crate::model::FactSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parity_accepts_three_kept_l_facts() {
        let inst = parity_instance(6);
        let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
        let a = parity_bdta();
        let l_facts: Vec<usize> = (0..inst.len())
            .filter(|&i| inst.signature().name(inst.facts()[i].relation) == "L")
            .collect();
        assert!(l_facts.len() >= 3);
        let keep = FactSet::from_indices(inst.len(), l_facts[..3].iter().copied());
        assert!(run(&a, &enc.annotate(&keep)).unwrap().0);
        let keep = FactSet::from_indices(inst.len(), l_facts[..2].iter().copied());
        assert!(!run(&a, &enc.annotate(&keep)).unwrap().0);
    }

    #[test]
    fn single_node_uses_the_leaf_row() {
        let inst = parity_instance(1);
        assert_eq!(inst.len(), 1);
        let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
        let a = parity_bdta();
        let (acc, states) = run(&a, &enc.annotate(&FactSet::full(1))).unwrap();
        assert!(acc);
        assert_eq!(a.describe(states[0]), "odd");
    }

    #[test]
    fn unknown_symbol_is_reported() {
        let inst = crate::model::generate_instance(&crate::model::Family::line(2)).unwrap();
        let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
        let err = run(&parity_bdta(), &enc.annotate(&FactSet::full(1))).unwrap_err();
        assert_eq!(err, AutomatonError::LabelNotInAlphabet("R+".into()));
    }

    #[test]
    fn json_round_trip() {
        let a = parity_bdta();
        let text = serde_json::to_string(&a.to_json()).unwrap();
        let back: AutomatonJson = serde_json::from_str(&text).unwrap();
        assert_eq!(Bdta::from_json(&back).unwrap(), a);
        let n = parity_nta();
        assert_eq!(Bnta::from_json(&n.to_json()).unwrap(), n);
    }

    #[test]
    fn determinizing_a_deterministic_automaton_is_a_fixpoint() {
        let a = parity_bdta();
        let d = a.to_nondeterministic().determinize(100).unwrap();
        // absent, even, odd
        assert_eq!(d.state_count(), 3);
        assert_eq!(d.transition_count(), a.transition_count());
    }

    #[test]
    fn nondeterministic_parity_has_few_subsets() {
        let d = parity_nta().determinize(100).unwrap();
        // absent plus at most four subsets of {even, odd}
        assert!(d.state_count() <= 5, "{:?}", d.states());
    }

    #[test]
    fn unreachable_states_are_pruned() {
        let mut n = parity_nta().to_json();
        n.states.push("limbo".into());
        n.binary.push(("L+".into(), "limbo".into(), "limbo".into(), vec!["limbo".into()]));
        let d = Bnta::from_json(&n).unwrap().determinize(100).unwrap();
        assert!(d.states().iter().all(|s| !s.contains("limbo")));
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(
            parity_nta().determinize(2).unwrap_err(),
            AutomatonError::StateExplosion(2)
        );
    }

    /// Acceptance of the nondeterministic automaton by trying every state
    /// assignment to the nodes.
    fn accepts_by_runs(a: &Bnta, enc: &crate::decomposition::TreeEncoding, flags: &[bool]) -> bool {
        let real: Vec<StateId> = (0..a.state_count()).filter(|&s| s != a.absent_state()).collect();
        let n = enc.len();
        let total = real.len().pow(n as u32);
        (0..total).any(|code| {
            let assign: Vec<StateId> = (0..n).map(|i| real[code / real.len().pow(i as u32) % real.len()]).collect();
            a.accepts_state(assign[0])
                && (0..n).all(|i| {
                    let node = enc.node(i);
                    let child = |j: usize| node.children.get(j).map_or(a.absent_state(), |&c| assign[c]);
                    let sym = a.projection().symbol(enc.signature(), &node.label, flags[i]);
                    a.targets(&sym, child(0), child(1)).contains(&assign[i])
                })
        })
    }

    #[test]
    fn determinization_preserves_acceptance_on_sampled_trees() {
        let nta = parity_nta();
        let dta = nta.determinize(100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let inst = parity_instance(n);
            let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
            if enc.len() > 9 {
                continue;
            }
            let keep = FactSet::from_indices(inst.len(), (0..inst.len()).filter(|_| rng.gen_bool(0.5)));
            let ann = enc.annotate(&keep);
            assert_eq!(run(&dta, &ann).unwrap().0, accepts_by_runs(&nta, &enc, ann.flags()));
        }
    }
}
