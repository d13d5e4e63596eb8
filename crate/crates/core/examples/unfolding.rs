//! Unfold a ranked instance for an inversion-free expression: the result has
//! the same lineage and a shallow elimination forest.

use treelineage::model::{Instance, Signature};
use treelineage::query::{Expr, InversionFreeExpression};
use treelineage::unfold::{unfold, verify_respects};

fn main() {
    let expr = InversionFreeExpression::new(Expr::exists(
        "x",
        Expr::And(vec![Expr::atom("R", &["x"]), Expr::exists("y", Expr::atom("S", &["x", "y"]))]),
    ))
    .validate()
    .unwrap();

    let mut inst = Instance::new(Signature::new([("R", 1), ("S", 2)]).unwrap());
    for a in ["a1", "a2", "a3"] {
        inst.add_fact("R", &[a]).unwrap();
        for b in ["b1", "b2"] {
            inst.add_fact("S", &[a, b]).unwrap();
        }
    }
    inst.set_order(&["a1", "a2", "a3", "b1", "b2"]).unwrap();

    let u = unfold(&inst, &expr).unwrap();
    println!("original: {inst}");
    println!("unfolded: {}", u.instance);
    println!("elimination forest height {}", u.height());
    verify_respects(&inst, &u, &expr.to_ucq()).unwrap();
    println!("lineage preserved on all {} valuations", 1u64 << inst.len());
    println!("{}", serde_json::to_string_pretty(&u.to_json(&inst)).unwrap());
}
