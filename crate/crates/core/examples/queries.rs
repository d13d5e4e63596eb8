//! Parse unions of conjunctive queries with disequalities and evaluate them.

use treelineage::fixtures::qp;
use treelineage::model::{generate_instance, FactId, FactSet, Family};
use treelineage::query::{connected, evaluate, evaluate_on, minimal_matches, parse_query};

fn main() {
    let inst = generate_instance(&Family::line(4)).unwrap();
    for text in ["R(x,y) & R(y,z)", "R(x,y) & R(y,x)", "R(x,y) & R(y,z) & R(z,w) & x!=w"] {
        let q = parse_query(text).unwrap();
        println!("{q}  on {inst}: {}", evaluate(&q, &inst));
    }

    let q = qp();
    println!("q_p connected: {}", connected(&q));
    for m in minimal_matches(&q, &inst).unwrap() {
        let facts: Vec<String> = m.facts.iter().map(|f| inst.display_fact(inst.fact(FactId(f)))).collect();
        println!("  minimal match {{{}}}", facts.join(", "));
    }
    let only_ends = FactSet::from_indices(inst.len(), [0, 2]);
    println!("q_p on the two end facts: {}", evaluate_on(&q, &inst, &only_ends));
}
