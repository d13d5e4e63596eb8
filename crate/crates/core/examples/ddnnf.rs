//! Lineage circuits of deterministic automata are d-DNNFs, so probabilities
//! follow from a single pass.

use treelineage::circuit::{build_lineage_circuit, check_ddnnf, CircuitBuilder};
use treelineage::decomposition::{decompose_pathwidth, tree_encode};
use treelineage::fixtures::{parity_bdta, parity_instance};
use treelineage::model::ProbabilityValuation;
use treelineage::probability::ddnnf_probability;

fn main() {
    let inst = parity_instance(6);
    let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
    let lc = build_lineage_circuit(&parity_bdta(), &enc).unwrap();
    let report = check_ddnnf(&lc.circuit).unwrap();
    println!("parity lineage: {report:?}");
    let p = ddnnf_probability(&lc.circuit, &ProbabilityValuation::half(inst.len())).unwrap();
    println!("P(odd number of L-facts) = {p}");

    let mut b = CircuitBuilder::new();
    let (x, y) = (b.input(0), b.input(1));
    let out = b.or(vec![x, y]);
    let c = b.finish(out, 2).unwrap();
    let report = check_ddnnf(&c).unwrap();
    println!("x | y: d-DNNF = {}, violation {:?}", report.is_ddnnf(), report.violation);
}
