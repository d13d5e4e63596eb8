//! Decide intricacy of connected queries by enumerating line instances.

use treelineage::fixtures::qp;
use treelineage::intricacy::{find_non_intricacy_witness, is_intricate};
use treelineage::query::parse_query;

fn main() {
    let v = is_intricate(&qp()).unwrap();
    println!("q_p: intricate = {}, level {:?}", v.intricate, v.level);

    for text in ["R(x,y) & R(y,z)", "R(x,y) & R(y,z) & R(z,w)", "R(x,y) & R(y,z) | R(x,x)"] {
        let q = parse_query(text).unwrap();
        let line = find_non_intricacy_witness(&q).unwrap();
        println!("{text}: not intricate, witness line {}", line.pattern());
    }
}
