//! Path decompositions from linear vertex layouts.
//!
//! Pathwidth equals the vertex separation number: the minimum over layouts of
//! the largest boundary `∂(S)` of a prefix `S`, where `∂(S)` is the set of
//! vertices of `S` with a neighbour outside `S`. The layout is turned into bags
//! `∂(S_{i-1}) ∪ {v_i}`.

use super::TreeDecomposition;
use crate::model::{gaifman_graph, GaifmanGraph, Instance};

pub const EXACT_PATHWIDTH_LIMIT: usize = 10;

/// A tree decomposition whose tree is a path, rooted at its first bag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathDecomposition(TreeDecomposition);

impl PathDecomposition {
    pub fn new(td: TreeDecomposition) -> Option<Self> {
        td.is_path().then_some(PathDecomposition(td))
    }

    pub fn as_tree(&self) -> &TreeDecomposition {
        &self.0
    }

    pub fn into_tree(self) -> TreeDecomposition {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }
}

pub fn decompose_pathwidth(inst: &Instance) -> PathDecomposition {
    path_decompose_graph(&gaifman_graph(inst), EXACT_PATHWIDTH_LIMIT)
}

pub fn path_decompose_graph(graph: &GaifmanGraph, exact_limit: usize) -> PathDecomposition {
    let n = graph.vertex_count();
    if n == 0 {
        return PathDecomposition(TreeDecomposition::empty());
    }
    let layout = if n <= exact_limit {
        exact_layout(graph)
    } else {
        greedy_layout(graph)
    };
    PathDecomposition(layout_to_path(graph, &layout))
}

fn boundary(graph: &GaifmanGraph, placed: &[bool]) -> Vec<usize> {
    (0..graph.vertex_count())
        .filter(|&u| placed[u] && graph.neighbors(u).iter().any(|&w| !placed[w]))
        .collect()
}

fn boundary_mask(graph: &GaifmanGraph, set: u32) -> u32 {
    let mut out = 0;
    let mut s = set;
    while s != 0 {
        let u = s.trailing_zeros() as usize;
        s &= s - 1;
        if graph.neighbors(u).iter().any(|&w| set >> w & 1 == 0) {
            out |= 1 << u;
        }
    }
    out
}

fn exact_layout(graph: &GaifmanGraph) -> Vec<usize> {
    let n = graph.vertex_count();
    let full = (1u32 << n) - 1;
    let mut best = vec![u32::MAX; 1 << n];
    let mut choice = vec![0u8; 1 << n];
    best[0] = 0;
    for set in 1..=full {
        let here = boundary_mask(graph, set).count_ones();
        let mut s = set;
        while s != 0 {
            let v = s.trailing_zeros() as usize;
            s &= s - 1;
            let cost = best[(set & !(1 << v)) as usize].max(here);
            // prefer placing larger ids last, so layouts read left to right
            if cost <= best[set as usize] {
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

/// Repeatedly places the vertex yielding the smallest boundary, ties broken by
/// vertex id.
fn greedy_layout(graph: &GaifmanGraph) -> Vec<usize> {
    let n = graph.vertex_count();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for v in 0..n {
            if placed[v] {
                continue;
            }
            placed[v] = true;
            let key = (boundary(graph, &placed).len(), v);
            placed[v] = false;
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let v = best.unwrap().1;
        placed[v] = true;
        order.push(v);
    }
    order
}

fn layout_to_path(graph: &GaifmanGraph, layout: &[usize]) -> TreeDecomposition {
    let mut placed = vec![false; graph.vertex_count()];
    let mut bags: Vec<Vec<usize>> = Vec::with_capacity(layout.len());
    for &v in layout {
        let mut bag = boundary(graph, &placed);
        bag.push(v);
        bag.sort_unstable();
        placed[v] = true;
        bags.push(bag);
    }
    // drop bags contained in a neighbouring bag
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(bags.len());
    for bag in bags {
        if let Some(last) = kept.last() {
            if last.iter().all(|v| bag.binary_search(v).is_ok()) {
                kept.pop();
            } else if bag.iter().all(|v| last.binary_search(v).is_ok()) {
                continue;
            }
        }
        kept.push(bag);
    }
    TreeDecomposition::from_path(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::validate_decomposition;
    use crate::model::{generate_instance, Family, Signature};

    #[test]
    fn line_of_five_has_pathwidth_one() {
        let inst = generate_instance(&Family::line(5)).unwrap();
        let pd = decompose_pathwidth(&inst);
        assert_eq!(pd.width(), 1);
        assert!(pd.as_tree().is_path());
        validate_decomposition(&inst, pd.as_tree(), Some(1)).unwrap();
        let bags = pd.as_tree().path_bags().unwrap();
        assert_eq!(bags.len(), 4);
        assert_eq!(bags[0], &[0, 1]);
    }

    #[test]
    fn single_unary_fact_has_pathwidth_zero() {
        let inst =
            Instance::from_facts(Signature::new([("U", 1)]).unwrap(), [("U", vec!["a"])]).unwrap();
        let pd = decompose_pathwidth(&inst);
        assert_eq!(pd.width(), 0);
        assert_eq!(pd.as_tree().len(), 1);
    }

    #[test]
    fn triangle_has_pathwidth_two() {
        let inst = Instance::from_facts(
            Signature::new([("E", 2)]).unwrap(),
            [("E", vec!["a", "b"]), ("E", vec!["b", "c"]), ("E", vec!["a", "c"])],
        )
        .unwrap();
        let pd = decompose_pathwidth(&inst);
        assert_eq!(pd.width(), 2);
        validate_decomposition(&inst, pd.as_tree(), None).unwrap();
    }

    #[test]
    fn long_lines_use_the_greedy_layout_and_keep_width_one() {
        for n in [11, 20, 40] {
            let inst = generate_instance(&Family::line(n)).unwrap();
            let pd = decompose_pathwidth(&inst);
            assert_eq!(pd.width(), 1, "n = {n}");
            assert_eq!(pd.as_tree().len(), n - 1);
            validate_decomposition(&inst, pd.as_tree(), None).unwrap();
        }
    }

    #[test]
    fn exact_layout_matches_permutation_search() {
        fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
            if items.is_empty() {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.clone();
                let x = rest.remove(i);
                for mut p in perms(rest) {
                    p.insert(0, x);
                    out.push(p);
                }
            }
            out
        }
        for seed in 0..8 {
            let inst = generate_instance(&Family::Random {
                elements: 6,
                relations: vec![("E".into(), 2, 0.2)],
                seed,
            })
            .unwrap();
            let g = gaifman_graph(&inst);
            let brute = perms((0..g.vertex_count()).collect())
                .iter()
                .map(|p| layout_to_path(&g, p).width())
                .min()
                .unwrap();
            let pd = decompose_pathwidth(&inst);
            assert_eq!(pd.width(), brute, "seed {seed}");
            validate_decomposition(&inst, pd.as_tree(), None).unwrap();
        }
    }
}
