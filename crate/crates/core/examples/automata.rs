//! Run tree automata on tree encodings: the parity automaton, its
//! nondeterministic variant, and the automaton compiled from a query.

use treelineage::automaton::{compile_query, run};
use treelineage::decomposition::{decompose_pathwidth, tree_encode};
use treelineage::fixtures::{parity_bdta, parity_instance, parity_nta};
use treelineage::model::{FactSet, Instance};
use treelineage::query::parse_query;

fn main() {
    let inst = parity_instance(5);
    let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
    let parity = parity_bdta();
    println!("parity automaton: {} states, {} transitions", parity.state_count(), parity.transition_count());
    for keep in [FactSet::full(inst.len()), FactSet::from_indices(inst.len(), [0])] {
        let (accepted, _) = run(&parity, &enc.annotate(&keep)).unwrap();
        println!("  keep {:?}: odd number of L-facts = {accepted}", keep.iter().collect::<Vec<_>>());
    }
    let det = parity_nta().determinize(64).unwrap();
    println!("determinized guessing automaton: {} states", det.state_count());

    let q = parse_query("E(x,y) & L(x)").unwrap();
    let a = compile_query(&q, enc.width()).unwrap();
    let (accepted, _) = run(&a, &enc.annotate(&FactSet::full(inst.len()))).unwrap();
    println!("query automaton for {q} accepts the full instance: {accepted}");
    println!("  states materialized so far: {}", a.state_count());

    let sub: Instance = inst.subinstance(&FactSet::from_indices(inst.len(), [0, 2]));
    println!("  subinstance {sub}");
}
