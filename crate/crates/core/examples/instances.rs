//! Generate instance families, look at their Gaifman graphs and serialize them.

use treelineage::model::{gaifman_graph, generate_instance, Family, InstanceJson, ProbabilityValuation};

fn main() {
    let families = [
        ("line", Family::line(5)),
        ("grid", Family::Grid { side: 3 }),
        ("tree", Family::Tree { nodes: 6, seed: 7 }),
        ("bipartite", Family::CompleteBipartite { left: 2, right: 3 }),
    ];
    for (name, fam) in families {
        let inst = generate_instance(&fam).expect("valid family");
        let g = gaifman_graph(&inst);
        println!(
            "{name:>9}: {} facts, {} elements, {} Gaifman edges",
            inst.len(),
            inst.domain_size(),
            g.edge_count()
        );
        println!("           {inst}");
    }

    let inst = generate_instance(&Family::line(3)).unwrap();
    let half = ProbabilityValuation::half(inst.len());
    let json = serde_json::to_string(&InstanceJson::from_instance(&inst, Some(&half))).unwrap();
    println!("as JSON with probabilities: {json}");
}
