//! Tree, path and elimination-forest decompositions, and the tree encoding
//! that automata read.

use treelineage::decomposition::{decompose_pathwidth, decompose_treewidth, tree_depth, tree_encode};
use treelineage::model::{generate_instance, Family};

fn main() {
    let grid = generate_instance(&Family::Grid { side: 4 }).unwrap();
    let td = decompose_treewidth(&grid, None);
    let pd = decompose_pathwidth(&grid);
    let (forest, depth) = tree_depth(&grid);
    println!("4x4 grid: treewidth <= {}, pathwidth <= {}, tree-depth <= {depth}", td.width(), pd.width());
    println!("elimination forest height {}", forest.height());

    let line = generate_instance(&Family::line(4)).unwrap();
    let enc = tree_encode(&line, &decompose_pathwidth(&line).into_tree()).unwrap();
    println!("encoding of {line} (width {}):", enc.width());
    for i in 0..enc.len() {
        let node = enc.node(i);
        println!("  node {i}: {} children {:?}", node.label.render(enc.signature()), node.children);
    }
    println!("decoded back: {}", enc.decode());
}
