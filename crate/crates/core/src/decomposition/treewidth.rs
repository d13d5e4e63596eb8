//! Tree decompositions from vertex elimination orders.
//!
//! Graphs with at most [`EXACT_TREEWIDTH_LIMIT`] vertices are solved exactly by
//! dynamic programming over vertex subsets; larger graphs use the min-fill
//! heuristic with ties broken by the smaller vertex id.

use std::collections::BTreeSet;

use super::TreeDecomposition;
use crate::model::{gaifman_graph, GaifmanGraph, Instance};

pub const EXACT_TREEWIDTH_LIMIT: usize = 12;

/// Decomposes `inst`. `budget` overrides the domain size up to which the
/// exact search runs (at most 20); above it the min-fill heuristic is used.
pub fn decompose_treewidth(inst: &Instance, budget: Option<usize>) -> TreeDecomposition {
    let limit = budget.unwrap_or(EXACT_TREEWIDTH_LIMIT).min(20);
    decompose_graph(&gaifman_graph(inst), limit)
}

pub fn decompose_graph(graph: &GaifmanGraph, exact_limit: usize) -> TreeDecomposition {
    let n = graph.vertex_count();
    if n == 0 {
        return TreeDecomposition::empty();
    }
    let order = if n <= exact_limit {
        exact_elimination_order(graph)
    } else {
        min_fill_order(graph)
    };
    from_elimination_order(graph, &order).contract_redundant()
}

/// Vertices reachable from `v` through `inner` (excluding `inner` and `v`).
fn reach_through(graph: &GaifmanGraph, inner: u32, v: usize) -> u32 {
    let mut seen = inner & !(1 << v);
    let mut out = 0u32;
    let mut stack = vec![v];
    let mut visited = 1u32 << v;
    while let Some(u) = stack.pop() {
        for &w in graph.neighbors(u) {
            let bit = 1u32 << w;
            if visited & bit != 0 {
                continue;
            }
            visited |= bit;
            if seen & bit != 0 {
                seen &= !bit;
                stack.push(w);
            } else {
                out |= bit;
            }
        }
    }
    out
}

/// Optimal elimination order: `tw(S) = min_v max(tw(S - v), |Q(S - v, v)|)`
/// where `Q(S, v)` are the vertices outside `S ∪ {v}` reachable from `v`
/// through `S`.
fn exact_elimination_order(graph: &GaifmanGraph) -> Vec<usize> {
    let n = graph.vertex_count();
    assert!(n <= 20, "exact treewidth limited to 20 vertices");
    let full = (1u32 << n) - 1;
    let mut best = vec![i32::MAX; 1 << n];
    let mut choice = vec![0u8; 1 << n];
    best[0] = -1;
    for set in 1..=full {
        let mut s = set;
        while s != 0 {
            let v = s.trailing_zeros() as usize;
            s &= s - 1;
            let rest = set & !(1 << v);
            let q = reach_through(graph, rest, v).count_ones() as i32;
            let cost = best[rest as usize].max(q);
            if cost < best[set as usize] {
                best[set as usize] = cost;
                choice[set as usize] = v as u8;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut set = full;
    while set != 0 {
        let v = choice[set as usize] as usize;
        order.push(v);
        set &= !(1 << v);
    }
    order.reverse();
    order
}

fn min_fill_order(graph: &GaifmanGraph) -> Vec<usize> {
    let n = graph.vertex_count();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| graph.neighbors(v).clone()).collect();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !alive.is_empty() {
        let mut best: Option<(usize, usize, usize)> = None;
        for &v in &alive {
            let ns: Vec<usize> = adj[v].iter().copied().collect();
            let mut fill = 0;
            for (i, &a) in ns.iter().enumerate() {
                for &b in &ns[i + 1..] {
                    if !adj[a].contains(&b) {
                        fill += 1;
                    }
                }
            }
            let key = (fill, ns.len(), v);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let v = best.unwrap().2;
        let ns: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &ns {
            adj[a].remove(&v);
        }
        alive.remove(&v);
        order.push(v);
    }
    order
}

/// Standard construction: the bag of `v` is `v` plus its neighbours eliminated
/// later in the filled graph; its parent is the bag of the first of those.
/// Roots of separate components hang under the last root.
pub fn from_elimination_order(graph: &GaifmanGraph, order: &[usize]) -> TreeDecomposition {
    let n = graph.vertex_count();
    if n == 0 {
        return TreeDecomposition::empty();
    }
    let mut position = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| graph.neighbors(v).clone()).collect();
    let mut bags = Vec::with_capacity(n);
    let mut parent_vertex: Vec<Option<usize>> = Vec::with_capacity(n);
    for &v in order {
        let later: Vec<usize> = adj[v]
            .iter()
            .copied()
            .filter(|&w| position[w] > position[v])
            .collect();
        for (i, &a) in later.iter().enumerate() {
            for &b in &later[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        let mut bag = later.clone();
        bag.push(v);
        bags.push(bag);
        parent_vertex.push(later.iter().copied().min_by_key(|&w| position[w]));
    }
    let mut children = vec![Vec::new(); n];
    let roots: Vec<usize> = (0..n).filter(|&i| parent_vertex[i].is_none()).collect();
    let main_root = *roots.last().expect("some vertex is eliminated last");
    for i in 0..n {
        match parent_vertex[i] {
            Some(w) => children[position[w]].push(i),
            None if i != main_root => children[main_root].push(i),
            None => {}
        }
    }
    TreeDecomposition::from_parts(bags, children).expect("elimination yields a tree")
}

/// Exact treewidth of a small graph (used by tests and checks).
pub fn exact_treewidth(graph: &GaifmanGraph) -> usize {
    if graph.vertex_count() == 0 {
        return 0;
    }
    from_elimination_order(graph, &exact_elimination_order(graph)).width()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::validate_decomposition;
    use crate::model::{generate_instance, Family, Signature};

    #[test]
    fn single_edge_has_width_one() {
        let inst = Instance::from_facts(
            Signature::new([("R", 2)]).unwrap(),
            [("R", vec!["a", "b"])],
        )
        .unwrap();
        let td = decompose_treewidth(&inst, None);
        assert_eq!(td.width(), 1);
        assert_eq!(td.len(), 1);
        assert_eq!(td.bag(td.root()), &[0, 1]);
    }

    #[test]
    fn symmetrized_triangle_has_width_two() {
        let mut facts = Vec::new();
        for (a, b) in [("a", "b"), ("b", "c"), ("a", "c")] {
            facts.push(("E", vec![a, b]));
            facts.push(("E", vec![b, a]));
        }
        let inst = Instance::from_facts(Signature::new([("E", 2)]).unwrap(), facts).unwrap();
        let td = decompose_treewidth(&inst, None);
        assert_eq!(td.width(), 2);
        validate_decomposition(&inst, &td, Some(2)).unwrap();
    }

    #[test]
    fn line_of_ten_has_width_one() {
        let inst = generate_instance(&Family::line(10)).unwrap();
        let td = decompose_treewidth(&inst, None);
        assert_eq!(td.width(), 1);
        validate_decomposition(&inst, &td, Some(1)).unwrap();
    }

    #[test]
    fn empty_instance_gives_single_empty_bag() {
        let inst = Instance::new(Signature::new([("R", 2)]).unwrap());
        let td = decompose_treewidth(&inst, None);
        assert_eq!(td.len(), 1);
        assert!(td.bag(td.root()).is_empty());
    }

    #[test]
    fn grid_exact_and_heuristic_are_valid() {
        // 3x3 grid has treewidth 3
        let small = generate_instance(&Family::Grid { side: 3 }).unwrap();
        let td = decompose_treewidth(&small, None);
        assert_eq!(td.width(), 3);
        validate_decomposition(&small, &td, None).unwrap();
        let large = generate_instance(&Family::Grid { side: 5 }).unwrap();
        let td = decompose_treewidth(&large, None);
        assert!(td.width() >= 5);
        validate_decomposition(&large, &td, None).unwrap();
    }

    #[test]
    fn exact_matches_brute_force_over_orders_on_small_graphs() {
        // independent oracle: minimum over all elimination orders
        fn all_orders(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for rest in all_orders(n - 1) {
                for pos in 0..=rest.len() {
                    let mut o = rest.clone();
                    o.insert(pos, n - 1);
                    out.push(o);
                }
            }
            out
        }
        for seed in 0..12 {
            let inst = generate_instance(&Family::Random {
                elements: 6,
                relations: vec![("E".into(), 2, 0.25)],
                seed,
            })
            .unwrap();
            let g = gaifman_graph(&inst);
            let brute = all_orders(g.vertex_count())
                .iter()
                .map(|o| from_elimination_order(&g, o).width())
                .min()
                .unwrap();
            assert_eq!(decompose_treewidth(&inst, None).width(), brute, "seed {seed}");
        }
    }
}
