//! Reference queries, automata and instance families.

use crate::automaton::{Bdta, Bnta, Projection};
use crate::model::{generate_instance, Family, Instance, Signature};
use crate::query::{parse_query, UcqNeq};

/// `R(x) & R(y) & x!=y`: at least two `R`-facts.
pub fn threshold_two() -> UcqNeq {
    parse_query("R(x) & R(y) & x!=y").expect("valid query")
}

pub const QP_TEXT: &str = "R(x,y) & R(y,z) & x!=y & y!=z & x!=z \
    | R(x,y) & R(z,y) & x!=y & y!=z & x!=z \
    | R(y,x) & R(y,z) & x!=y & y!=z & x!=z";

/// Two `R`-facts forming a path of length 2 in the Gaifman graph, in any
/// orientation.
pub fn qp() -> UcqNeq {
    parse_query(QP_TEXT).expect("valid query")
}

/// Line `a1..an` with `E(a_i,a_{i+1})` and `L(a_i)` for odd `i`.
pub fn parity_instance(n: usize) -> Instance {
    let sig = Signature::new([("E", 2), ("L", 1)]).expect("valid signature");
    let mut inst = Instance::new(sig);
    for i in 1..=n {
        let here = format!("a{i}");
        if i % 2 == 1 {
            inst.add_fact("L", &[&here]).expect("fresh fact");
        }
        if i < n {
            inst.add_fact("E", &[here, format!("a{}", i + 1)]).expect("fresh fact");
        }
    }
    inst
}

const PARITY_SYMBOLS: [&str; 5] = ["-", "L+", "L-", "E+", "E-"];

/// Accepts iff the number of kept `L`-facts is odd.
pub fn parity_bdta() -> Bdta {
    let states = vec!["absent".to_string(), "even".to_string(), "odd".to_string()];
    let mut a = Bdta::empty(Projection::Relation, states, 0, vec![false, false, true]);
    let bit = |s: usize| usize::from(s == 2);
    for sym in PARITY_SYMBOLS {
        for l in 0..3 {
            for r in 0..3 {
                let flip = usize::from(sym == "L+");
                a.add_transition(sym, l, r, 1 + (bit(l) ^ bit(r) ^ flip));
            }
        }
    }
    a
}

/// Parity automaton that may guess either parity at a dropped `L`-leaf.
pub fn parity_nta() -> Bnta {
    let det = parity_bdta();
    let mut a = det.to_nondeterministic();
    a.add_transition("L-", 0, 0, &[1, 2]);
    a
}

/// Queries of the lineage corpus, with short names.
pub fn corpus_queries() -> Vec<(&'static str, UcqNeq)> {
    [
        ("exists", "R(x)"),
        ("threshold", "R(x) & R(y) & x!=y"),
        ("qp", QP_TEXT),
        ("rst", "R(x) & S(x,y) & T(y)"),
        ("path", "R(x,y) & R(y,z)"),
        ("atoms", "R(x,y) | S(x)"),
    ]
    .into_iter()
    .map(|(name, text)| (name, parse_query(text).expect("valid query")))
    .collect()
}

/// Graph-shaped instances over one binary relation `E`: lines, random trees,
/// prefixes of a grid and sparse random graphs of treewidth at most 3.
pub fn corpus_shapes() -> Vec<(String, Instance)> {
    let mut out = Vec::new();
    for n in 2..=9 {
        let inst = generate_instance(&Family::line(n)).expect("line");
        out.push((format!("line{n}"), rename(&inst, "E")));
    }
    for nodes in 3..=8 {
        for seed in 0..2 {
            let inst = generate_instance(&Family::Tree { nodes, seed }).expect("tree");
            out.push((format!("tree{nodes}s{seed}"), inst));
        }
    }
    let grid = generate_instance(&Family::Grid { side: 3 }).expect("grid");
    for keep in 6..=12 {
        let mut inst = Instance::new(grid.signature().clone());
        for f in &grid.facts()[..keep] {
            let args: Vec<&str> = f.args.iter().map(|&e| grid.element_name(e)).collect();
            inst.add_fact("E", &args).expect("fresh fact");
        }
        out.push((format!("grid{keep}"), inst));
    }
    let mut seed = 0;
    let mut random = 0;
    while random < 8 {
        seed += 1;
        let inst = generate_instance(&Family::Random {
            elements: 6,
            relations: vec![("E".into(), 2, 0.22)],
            seed,
        })
        .expect("random");
        let small = inst.len() >= 3 && inst.len() <= 10;
        if small && crate::decomposition::decompose_treewidth(&inst, None).width() <= 3 {
            out.push((format!("random{seed}"), inst));
            random += 1;
        }
    }
    out
}

fn rename(inst: &Instance, relation: &str) -> Instance {
    let mut out = Instance::new(Signature::new([(relation, 2)]).expect("valid signature"));
    for f in inst.facts() {
        let args: Vec<&str> = f.args.iter().map(|&e| inst.element_name(e)).collect();
        out.add_fact(relation, &args).expect("fresh fact");
    }
    out
}

/// Moves a shape onto the relations of `q`: edges go to the binary relations
/// of `q` in turn (or stay `E` if there is none), and the `j`-th unary
/// relation holds on every element whose index has the parity of `j`. At
/// most `max_facts` facts are kept.
pub fn decorate(shape: &Instance, q: &UcqNeq, max_facts: usize) -> Instance {
    let rels = q.relations();
    let binary: Vec<&str> = rels.iter().filter(|(_, a)| *a == 2).map(|(r, _)| r.as_str()).collect();
    let unary: Vec<&str> = rels.iter().filter(|(_, a)| *a == 1).map(|(r, _)| r.as_str()).collect();
    let mut sig = Signature::new(rels.iter().map(|(r, a)| (r.clone(), *a))).expect("query arities agree");
    if binary.is_empty() {
        sig.add("E", 2).expect("fresh relation");
    }
    let mut inst = Instance::new(sig);
    let mut budget = max_facts;
    for (i, f) in shape.facts().iter().enumerate() {
        if budget == 0 {
            break;
        }
        let rel = if binary.is_empty() { "E" } else { binary[i % binary.len()] };
        let args: Vec<&str> = f.args.iter().map(|&e| shape.element_name(e)).collect();
        if inst.add_fact(rel, &args).is_ok() {
            budget -= 1;
        }
    }
    for (e, name) in shape.elements() {
        for (j, r) in unary.iter().enumerate() {
            if budget > 0 && e.0 % 2 == j % 2 {
                inst.add_fact(r, &[name]).expect("fresh fact");
                budget -= 1;
            }
        }
    }
    inst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_instance_shape() {
        assert_eq!(parity_instance(1).to_string(), "{L(a1)}");
        assert_eq!(
            parity_instance(4).to_string(),
            "{L(a1), E(a1,a2), E(a2,a3), L(a3), E(a3,a4)}"
        );
    }

    #[test]
    fn qp_has_six_atoms() {
        assert_eq!(qp().size(), 6);
        assert_eq!(threshold_two().size(), 2);
    }
}
