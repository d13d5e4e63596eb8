//! Lineage circuits from a deterministic automaton and a tree encoding.
//!
//! For every encoding node `n` and every state `q` reachable at `n` under
//! some annotation there is a gate `g^q_n` true exactly under the valuations
//! whose run reaches `q` at `n`:
//!
//! - `g^ι_n` is the input gate of the housed fact and `g^¬ι_n` its negation;
//! - `g^{qL,qR}_n` is the AND of the children's state gates;
//! - `g^{qL,qR,ι}_n` and `g^{qL,qR,¬ι}_n` conjoin it with `g^ι_n` or `g^¬ι_n`;
//! - `g^q_n` is the OR of those cases whose transition yields `q`;
//! - the output `g_0` is the OR of the accepting state gates at the root.
//!
//! Constant gates are folded away. The decomposition follows the encoding:
//! the bag of `n` holds the gates built at `n` and the state gates of `n`
//! and its children.

use std::collections::BTreeMap;

use super::{Circuit, CircuitBuilder, CircuitDecomposition, CircuitError, Gate, GateId};
use crate::automaton::{AutomatonError, StateId, TreeAutomaton};
use crate::decomposition::{TreeDecomposition, TreeEncoding};

/// A lineage circuit together with its decomposition.
#[derive(Debug, Clone)]
pub struct LineageCircuit {
    pub circuit: Circuit,
    pub decomposition: CircuitDecomposition,
    /// Number of reachable states at every encoding node.
    pub states_per_node: Vec<usize>,
}

/// `None` stands for the constant true.
type Ref = Option<GateId>;

pub fn build_lineage_circuit<A: TreeAutomaton + ?Sized>(
    a: &A,
    enc: &TreeEncoding,
) -> Result<LineageCircuit, CircuitError> {
    let mut b = CircuitBuilder::new();
    let n = enc.len();
    let mut reach: Vec<Vec<(StateId, Ref)>> = vec![Vec::new(); n];
    let mut bags: Vec<Vec<GateId>> = vec![Vec::new(); n];
    let sig = enc.signature();
    let map_err = |e: AutomatonError| match e {
        AutomatonError::LabelNotInAlphabet(_) | AutomatonError::MissingTransition { .. } => {
            CircuitError::AlphabetMismatch(e.to_string())
        }
        other => CircuitError::Automaton(other),
    };

    for i in enc.bottom_up() {
        let node = enc.node(i);
        let side = |j: usize| match node.children.get(j) {
            Some(&c) => reach[c].clone(),
            None => vec![(a.absent(), None)],
        };
        let (left, right) = (side(0), side(1));
        let mut made: Vec<GateId> = Vec::new();
        let mut add = |b: &mut CircuitBuilder, gate: Gate, name: String| {
            let g = b.add(gate, name);
            made.push(g);
            g
        };
        let literals = match node.fact_id {
            Some(f) => {
                let pos = add(&mut b, Gate::Input(f.0), format!("g^ι_{i}"));
                let neg = add(&mut b, Gate::Not(pos), format!("g^¬ι_{i}"));
                Some((pos, neg))
            }
            None => None,
        };
        let mut cases: BTreeMap<StateId, Vec<Ref>> = BTreeMap::new();
        for &(ql, gl) in &left {
            for &(qr, gr) in &right {
                let pair = match (gl, gr) {
                    (None, None) => None,
                    (Some(x), None) | (None, Some(x)) => Some(x),
                    (Some(x), Some(y)) => Some(add(&mut b, Gate::And(vec![x, y]), format!("g^{{{ql},{qr}}}_{i}"))),
                };
                match literals {
                    Some((pos, neg)) => {
                        for (kept, lit, tag) in [(true, pos, "ι"), (false, neg, "¬ι")] {
                            let q = a.step(sig, &node.label, kept, ql, qr).map_err(map_err)?;
                            let g = match pair {
                                None => lit,
                                Some(p) => add(&mut b, Gate::And(vec![p, lit]), format!("g^{{{ql},{qr},{tag}}}_{i}")),
                            };
                            cases.entry(q).or_default().push(Some(g));
                        }
                    }
                    None => {
                        let q = a.step(sig, &node.label, false, ql, qr).map_err(map_err)?;
                        cases.entry(q).or_default().push(pair);
                    }
                }
            }
        }
        let mut states = Vec::with_capacity(cases.len());
        for (q, refs) in cases {
            let r = match refs.as_slice() {
                [single] => *single,
                _ => {
                    let gates: Vec<GateId> = refs
                        .iter()
                        .map(|r| r.expect("only a leaf without fact yields the constant"))
                        .collect();
                    Some(add(&mut b, Gate::Or(gates), format!("g^{{{q}}}_{i}")))
                }
            };
            states.push((q, r));
        }
        let mut bag = made;
        for j in 0..node.children.len() {
            bag.extend(reach[node.children[j]].iter().filter_map(|(_, r)| *r));
        }
        bag.extend(states.iter().filter_map(|(_, r)| *r));
        bags[i] = bag;
        reach[i] = states;
    }

    let root = enc.root();
    let accepting: Vec<Ref> = reach[root]
        .iter()
        .filter(|(q, _)| a.is_accepting(*q))
        .map(|(_, r)| *r)
        .collect();
    let output = match accepting.as_slice() {
        [] => {
            let g = b.add(Gate::Const(false), "g_0");
            bags[root].push(g);
            g
        }
        [None] => {
            let g = b.add(Gate::Const(true), "g_0");
            bags[root].push(g);
            g
        }
        [Some(g)] => *g,
        many => {
            let gates: Vec<GateId> = many.iter().map(|r| r.expect("several states imply a fact")).collect();
            let g = b.add(Gate::Or(gates), "g_0");
            bags[root].push(g);
            g
        }
    };
    let states_per_node = reach.iter().map(Vec::len).collect();
    let circuit = b.finish(output, enc.fact_count())?;
    for bag in &mut bags {
        bag.sort_unstable();
        bag.dedup();
    }
    let children = enc.nodes().iter().map(|n| n.children.clone()).collect();
    let decomposition = TreeDecomposition::from_parts(bags, children).expect("encoding is a tree");
    Ok(LineageCircuit {
        circuit,
        decomposition,
        states_per_node,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::compile_query;
    use crate::decomposition::{decompose_pathwidth, decompose_treewidth, tree_encode};
    use crate::fixtures::{parity_bdta, parity_instance, qp, threshold_two};
    use crate::model::{generate_instance, FactSet, Family, Instance, Signature};
    use crate::query::{evaluate_on, parse_query, UcqNeq};

    fn lineage(q: &UcqNeq, inst: &Instance) -> LineageCircuit {
        let enc = tree_encode(inst, &decompose_treewidth(inst, None)).unwrap();
        let a = compile_query(q, enc.width()).unwrap();
        build_lineage_circuit(&a, &enc).unwrap()
    }

    fn unary(n: usize) -> Instance {
        let names: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
        Instance::from_facts(
            Signature::new([("R", 1)]).unwrap(),
            names.iter().map(|s| ("R", vec![s.as_str()])),
        )
        .unwrap()
    }

    #[test]
    fn single_fact_gives_identity_lineage() {
        let lc = lineage(&parse_query("R(x)").unwrap(), &unary(1));
        let c = &lc.circuit;
        assert!(!c.evaluate(&FactSet::empty(1)).unwrap());
        assert!(c.evaluate(&FactSet::full(1)).unwrap());
        c.check_decomposition(&lc.decomposition).unwrap();
    }

    #[test]
    fn threshold_two_on_three_facts_has_four_models() {
        let lc = lineage(&threshold_two(), &unary(3));
        let models = (0..8u64)
            .filter(|&m| lc.circuit.evaluate(&FactSet::from_mask(m, 3)).unwrap())
            .count();
        assert_eq!(models, 4);
    }

    #[test]
    fn parity_lineage_on_line_of_four() {
        let inst = parity_instance(4);
        let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
        let lc = build_lineage_circuit(&parity_bdta(), &enc).unwrap();
        let l: Vec<usize> = (0..inst.len()).filter(|&i| inst.facts()[i].args.len() == 1).collect();
        assert_eq!(l.len(), 2);
        for m in 0..4u64 {
            let mut v = FactSet::full(inst.len());
            for (k, &f) in l.iter().enumerate() {
                if m >> k & 1 == 0 {
                    v.remove(f);
                }
            }
            assert_eq!(lc.circuit.evaluate(&v).unwrap(), m.count_ones() % 2 == 1);
        }
    }

    #[test]
    fn lineage_matches_the_oracle() {
        let cases: Vec<(UcqNeq, Instance)> = vec![
            (qp(), generate_instance(&Family::line(8)).unwrap()),
            (parse_query("R(x,y) & R(y,z)").unwrap(), generate_instance(&Family::Grid { side: 3 }).unwrap()),
            (
                parse_query("R(x,y) & R(y,z) | R(x,x)").unwrap(),
                generate_instance(&Family::Tree { nodes: 9, seed: 2 }).unwrap(),
            ),
        ];
        for (q, inst) in cases {
            let inst = if inst.signature().lookup("R").is_none() {
                rename_to_r(&inst)
            } else {
                inst
            };
            let lc = lineage(&q, &inst);
            lc.circuit.check_decomposition(&lc.decomposition).unwrap();
            let n = inst.len();
            for m in 0..1u64 << n {
                let v = FactSet::from_mask(m, n);
                assert_eq!(lc.circuit.evaluate(&v).unwrap(), evaluate_on(&q, &inst, &v), "{q} mask {m:b}");
            }
        }
    }

    fn rename_to_r(inst: &Instance) -> Instance {
        let mut out = Instance::new(Signature::new([("R", 2)]).unwrap());
        for f in inst.facts() {
            let args: Vec<&str> = f.args.iter().map(|&e| inst.element_name(e)).collect();
            out.add_fact("R", &args).unwrap();
        }
        out
    }

    #[test]
    fn wrong_alphabet_is_reported() {
        let inst = generate_instance(&Family::line(3)).unwrap();
        let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
        assert!(matches!(
            build_lineage_circuit(&parity_bdta(), &enc),
            Err(CircuitError::AlphabetMismatch(_))
        ));
    }

    #[test]
    fn unsatisfiable_query_gives_constant_false() {
        let lc = lineage(&parse_query("S(x)").unwrap(), &unary(2));
        assert_eq!(lc.circuit.gate(lc.circuit.output()), &Gate::Const(false));
        lc.circuit.check_decomposition(&lc.decomposition).unwrap();
    }

    #[test]
    fn lineage_is_ddnnf() {
        let inst = generate_instance(&Family::line(7)).unwrap();
        for q in [qp(), parse_query("R(x,y) & R(y,z)").unwrap()] {
            let lc = lineage(&q, &inst);
            let r = crate::circuit::check_ddnnf(&lc.circuit).unwrap();
            assert!(r.is_ddnnf(), "{r:?}");
        }
    }
}
