//! Fan-in reduction and family covering for circuit decompositions.

use std::collections::{BTreeSet, VecDeque};

use super::{Circuit, CircuitDecomposition, Gate, GateId};
use crate::decomposition::TreeDecomposition;

/// Rewrites every AND and OR gate with more than two inputs into a chain of
/// binary gates. The chain takes the place of the original gate in every bag
/// holding it, and the result is patched so that each gate shares a bag with
/// all its inputs.
pub fn with_fanin_two(c: &Circuit, cd: &CircuitDecomposition) -> (Circuit, CircuitDecomposition) {
    let mut gates: Vec<Gate> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut map: Vec<GateId> = Vec::with_capacity(c.size());
    let mut chains: Vec<Vec<GateId>> = Vec::with_capacity(c.size());
    for (i, g) in c.gates().iter().enumerate() {
        let mut chain = Vec::new();
        let gate = match g {
            Gate::And(xs) | Gate::Or(xs) if xs.len() > 2 => {
                let and = matches!(g, Gate::And(_));
                let make = |a: GateId, b: GateId| if and { Gate::And(vec![a, b]) } else { Gate::Or(vec![a, b]) };
                let mut acc = map[xs[0]];
                for (j, &x) in xs[1..xs.len() - 1].iter().enumerate() {
                    gates.push(make(acc, map[x]));
                    names.push(format!("{}#{}", c.name(i), j + 1));
                    acc = gates.len() - 1;
                    chain.push(acc);
                }
                make(acc, map[xs[xs.len() - 1]])
            }
            Gate::And(xs) => Gate::And(xs.iter().map(|&x| map[x]).collect()),
            Gate::Or(xs) => Gate::Or(xs.iter().map(|&x| map[x]).collect()),
            Gate::Not(x) => Gate::Not(map[*x]),
            other => other.clone(),
        };
        gates.push(gate);
        names.push(c.name(i).to_string());
        map.push(gates.len() - 1);
        chains.push(chain);
    }
    let out = Circuit::from_gates(gates, names, map[c.output()], c.fact_count()).expect("rewrite keeps order");
    let bags: Vec<Vec<usize>> = cd
        .nodes()
        .iter()
        .map(|n| {
            let mut bag: Vec<usize> = n
                .bag
                .iter()
                .flat_map(|&g| chains[g].iter().copied().chain([map[g]]))
                .collect();
            bag.sort_unstable();
            bag
        })
        .collect();
    let children = cd.nodes().iter().map(|n| n.children.clone()).collect();
    let td = TreeDecomposition::from_parts(bags, children).expect("same tree");
    let td = cover_families(&out, &td);
    (out, td)
}

/// Extends bags so that every gate and its inputs lie together in some bag,
/// assuming `cd` already covers every wire.
pub(crate) fn cover_families(c: &Circuit, cd: &CircuitDecomposition) -> CircuitDecomposition {
    let occ = cd.occurrences(c.size());
    let mut bags: Vec<BTreeSet<usize>> = cd.nodes().iter().map(|n| n.bag.iter().copied().collect()).collect();
    for (g, gate) in c.gates().iter().enumerate() {
        let xs = gate.inputs();
        if xs.len() < 2 || occ[g].is_empty() {
            continue;
        }
        if occ[g].iter().any(|&n| xs.iter().all(|x| bags[n].contains(x))) {
            continue;
        }
        let start = occ[g][0];
        let inside: BTreeSet<usize> = occ[g].iter().copied().collect();
        for &x in xs {
            if bags[start].contains(&x) {
                continue;
            }
            let mut prev = vec![usize::MAX; cd.len()];
            prev[start] = start;
            let mut queue = VecDeque::from([start]);
            let mut hit = None;
            while let Some(n) = queue.pop_front() {
                if bags[n].contains(&x) {
                    hit = Some(n);
                    break;
                }
                let node = cd.node(n);
                for m in node.children.iter().copied().chain(node.parent) {
                    if inside.contains(&m) && prev[m] == usize::MAX {
                        prev[m] = n;
                        queue.push_back(m);
                    }
                }
            }
            let mut n = hit.expect("every wire is covered");
            while n != start {
                n = prev[n];
                bags[n].insert(x);
            }
        }
    }
    let bags = bags.into_iter().map(|b| b.into_iter().collect()).collect();
    let children = cd.nodes().iter().map(|n| n.children.clone()).collect();
    TreeDecomposition::from_parts(bags, children).expect("same tree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::model::FactSet;

    #[test]
    fn wide_or_becomes_a_chain() {
        let mut b = CircuitBuilder::new();
        let xs: Vec<GateId> = (0..4).map(|f| b.input(f)).collect();
        let o = b.or(xs);
        let c = b.finish(o, 4).unwrap();
        let td = TreeDecomposition::single((0..5).collect());
        let (c2, td2) = with_fanin_two(&c, &td);
        assert!(c2.gates().iter().all(|g| g.inputs().len() <= 2));
        assert_eq!(c2.size(), 7);
        c2.check_decomposition(&td2).unwrap();
        for m in 0..16 {
            let v = FactSet::from_mask(m, 4);
            assert_eq!(c.evaluate(&v).unwrap(), c2.evaluate(&v).unwrap());
        }
    }

    #[test]
    fn families_are_covered_along_a_path() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let a = b.and(vec![x, y]);
        let c = b.finish(a, 2).unwrap();
        let td = TreeDecomposition::from_parts(vec![vec![0, 2], vec![1, 2]], vec![vec![1], vec![]]).unwrap();
        c.check_decomposition(&td).unwrap();
        let patched = cover_families(&c, &td);
        patched.check_cover(3, [[0usize, 1, 2].as_slice()]).unwrap();
    }
}
