//! Exact query probability on a tuple-independent database, four ways.

use treelineage::automaton::compile_query;
use treelineage::circuit::build_lineage_circuit;
use treelineage::decomposition::{decompose_treewidth, tree_encode};
use treelineage::model::{generate_instance, ratio, Family, ProbabilityValuation};
use treelineage::obdd::compile_to_obdd;
use treelineage::probability::{
    brute_force_probability, circuit_probability, ddnnf_probability, lineage_ddnnf_probability,
};
use treelineage::query::parse_query;

fn main() {
    let inst = generate_instance(&Family::Grid { side: 3 }).unwrap();
    let q = parse_query("E(x,y) & E(y,z) & E(z,w)").unwrap();
    let pi = ProbabilityValuation::new((0..inst.len()).map(|i| ratio(1 + i as i64 % 3, 4)).collect()).unwrap();

    let enc = tree_encode(&inst, &decompose_treewidth(&inst, None)).unwrap();
    let lc = build_lineage_circuit(&compile_query(&q, enc.width()).unwrap(), &enc).unwrap();
    let obdd = compile_to_obdd(&lc.circuit, &lc.decomposition).unwrap();

    println!("{q} on a 3x3 grid ({} facts)", inst.len());
    println!("  brute force      {}", brute_force_probability(&q, &inst, &pi).unwrap());
    println!("  message passing  {}", circuit_probability(&lc.circuit, &lc.decomposition, &pi).unwrap());
    println!("  d-DNNF           {}", ddnnf_probability(&lc.circuit, &pi).unwrap());
    println!("  OBDD             {}", obdd.probability(&pi).unwrap());

    let q = parse_query("R(x,y) & R(y,z) & R(z,w)").unwrap();
    let big = generate_instance(&Family::line(200)).unwrap();
    let enc = tree_encode(&big, &decompose_treewidth(&big, None)).unwrap();
    let lc = build_lineage_circuit(&compile_query(&q, enc.width()).unwrap(), &enc).unwrap();
    let p = lineage_ddnnf_probability(&lc, &ProbabilityValuation::uniform(big.len(), ratio(1, 10)).unwrap()).unwrap();
    println!("\nsame query on a line of {} facts at 1/10 each: {:.6}", big.len(), to_f64(&p));
}

fn to_f64(p: &num_rational::BigRational) -> f64 {
    use num_traits::ToPrimitive;
    p.to_f64().unwrap_or(f64::NAN)
}
