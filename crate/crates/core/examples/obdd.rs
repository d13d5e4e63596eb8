//! Compile lineage circuits into OBDDs. On bounded-pathwidth families the
//! width stays constant while the number of facts grows.

use treelineage::automaton::compile_query;
use treelineage::circuit::build_lineage_circuit;
use treelineage::decomposition::{decompose_pathwidth, tree_encode};
use treelineage::fixtures::qp;
use treelineage::model::{generate_instance, Family};
use treelineage::obdd::{compile_to_obdd_pathwidth, compile_to_obdd_with, EquivalenceStrategy};

fn main() {
    let a = compile_query(&qp(), 1).unwrap();
    println!("q_p on lines:");
    for n in [4, 8, 16, 32] {
        let inst = generate_instance(&Family::line(n)).unwrap();
        let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
        let lc = build_lineage_circuit(&a, &enc).unwrap();
        let o = compile_to_obdd_pathwidth(&lc.circuit, &lc.decomposition).unwrap();
        println!("  {:>2} facts: width {}, size {}, models {}", inst.len(), o.width(), o.size(), o.model_count());
    }

    let inst = generate_instance(&Family::line(5)).unwrap();
    let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
    let lc = build_lineage_circuit(&a, &enc).unwrap();
    let brute = compile_to_obdd_with(&lc.circuit, &lc.decomposition, EquivalenceStrategy::BruteForce).unwrap();
    let diff = compile_to_obdd_with(&lc.circuit, &lc.decomposition, EquivalenceStrategy::DifferenceCircuit).unwrap();
    println!("both equivalence tests give the same OBDD: {}", brute == diff);
    println!("variable order {:?}", brute.order().facts());
    println!("{}", brute.to_dot());
}
