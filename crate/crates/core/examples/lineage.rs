//! Build the lineage circuit of a query on a treelike instance and check it
//! against direct query evaluation.

use treelineage::automaton::compile_query;
use treelineage::circuit::build_lineage_circuit;
use treelineage::decomposition::{decompose_treewidth, tree_encode};
use treelineage::model::{generate_instance, FactSet, Family};
use treelineage::query::{evaluate_on, parse_query};

fn main() {
    let inst = generate_instance(&Family::Tree { nodes: 7, seed: 3 }).unwrap();
    let q = parse_query("E(x,y) & E(y,z)").unwrap();
    let enc = tree_encode(&inst, &decompose_treewidth(&inst, None)).unwrap();
    let a = compile_query(&q, enc.width()).unwrap();
    let lc = build_lineage_circuit(&a, &enc).unwrap();
    let c = &lc.circuit;
    println!("{q} on {inst}");
    println!(
        "circuit: {} gates, {} wires, decomposition width {}",
        c.size(),
        c.wire_count(),
        lc.decomposition.width()
    );
    c.check_decomposition(&lc.decomposition).unwrap();

    let n = inst.len();
    let models = (0..1u64 << n)
        .filter(|&m| {
            let v = FactSet::from_mask(m, n);
            let value = c.evaluate(&v).unwrap();
            assert_eq!(value, evaluate_on(&q, &inst, &v));
            value
        })
        .count();
    println!("{models} of {} valuations satisfy the query", 1u64 << n);

    let q = parse_query("R(x,y) & R(y,z)").unwrap();
    let small = generate_instance(&Family::line(3)).unwrap();
    let enc = tree_encode(&small, &decompose_treewidth(&small, None)).unwrap();
    let lc = build_lineage_circuit(&compile_query(&q, enc.width()).unwrap(), &enc).unwrap();
    println!("\nlineage on {small} in DOT:\n{}", lc.circuit.to_dot());
}
