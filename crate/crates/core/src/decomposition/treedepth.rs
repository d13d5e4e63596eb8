use std::collections::HashMap;

use crate::model::{gaifman_graph, GaifmanGraph, Instance};

pub const EXACT_TREEDEPTH_LIMIT: usize = 10;

/// Rooted forest on the vertices of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationForest {
    parent: Vec<Option<usize>>,
}

impl EliminationForest {
    pub fn new(parent: Vec<Option<usize>>) -> Self {
        EliminationForest { parent }
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Number of vertices on the path from `v` to its root, `v` included.
    pub fn depth(&self, v: usize) -> usize {
        let mut d = 1;
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            d += 1;
            cur = p;
            assert!(d <= self.parent.len(), "cycle in elimination forest");
        }
        d
    }

    /// Maximal number of vertices on a root-to-leaf path (0 when empty).
    pub fn height(&self) -> usize {
        (0..self.parent.len()).map(|v| self.depth(v)).max().unwrap_or(0)
    }

    pub fn is_ancestor(&self, a: usize, v: usize) -> bool {
        let mut cur = Some(v);
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = self.parent[c];
        }
        false
    }

    /// First edge none of whose endpoints descends from the other, if any.
    pub fn violation(&self, graph: &GaifmanGraph) -> Option<(usize, usize)> {
        graph
            .edges()
            .find(|&(u, v)| !self.is_ancestor(u, v) && !self.is_ancestor(v, u))
    }
}

/// Elimination forest of the Gaifman graph of `inst` with its height; exact
/// for at most [`EXACT_TREEDEPTH_LIMIT`] elements.
pub fn tree_depth(inst: &Instance) -> (EliminationForest, usize) {
    let g = gaifman_graph(inst);
    let forest = elimination_forest(&g, EXACT_TREEDEPTH_LIMIT);
    let h = forest.height();
    (forest, h)
}

pub fn elimination_forest(graph: &GaifmanGraph, exact_limit: usize) -> EliminationForest {
    let n = graph.vertex_count();
    let mut parent = vec![None; n];
    let all: Vec<usize> = (0..n).collect();
    if n <= exact_limit {
        let mut memo = HashMap::new();
        for comp in graph.components(&all) {
            build_exact(graph, &comp, None, &mut parent, &mut memo);
        }
    } else {
        for comp in graph.components(&all) {
            build_greedy(graph, &comp, None, &mut parent);
        }
    }
    EliminationForest { parent }
}

fn mask_of(vs: &[usize]) -> u32 {
    vs.iter().fold(0, |m, &v| m | 1 << v)
}

/// Tree-depth of the connected vertex set `comp`, with the best root.
fn exact_depth(graph: &GaifmanGraph, comp: &[usize], memo: &mut HashMap<u32, (usize, usize)>) -> (usize, usize) {
    let key = mask_of(comp);
    if let Some(&r) = memo.get(&key) {
        return r;
    }
    let result = if comp.len() == 1 {
        (1, comp[0])
    } else {
        let mut best = (usize::MAX, 0);
        for &v in comp {
            let rest: Vec<usize> = comp.iter().copied().filter(|&u| u != v).collect();
            let sub = graph
                .components(&rest)
                .iter()
                .map(|c| exact_depth(graph, c, memo).0)
                .max()
                .unwrap_or(0);
            if 1 + sub < best.0 {
                best = (1 + sub, v);
            }
        }
        best
    };
    memo.insert(key, result);
    result
}

fn build_exact(
    graph: &GaifmanGraph,
    comp: &[usize],
    above: Option<usize>,
    parent: &mut [Option<usize>],
    memo: &mut HashMap<u32, (usize, usize)>,
) {
    let (_, root) = exact_depth(graph, comp, memo);
    parent[root] = above;
    let rest: Vec<usize> = comp.iter().copied().filter(|&u| u != root).collect();
    for sub in graph.components(&rest) {
        build_exact(graph, &sub, Some(root), parent, memo);
    }
}

/// Roots each component at its highest-degree vertex (ties: smallest id).
fn build_greedy(graph: &GaifmanGraph, comp: &[usize], above: Option<usize>, parent: &mut [Option<usize>]) {
    let inside = |u: usize| comp.binary_search(&u).is_ok();
    let root = comp
        .iter()
        .copied()
        .max_by_key(|&v| {
            (
                graph.neighbors(v).iter().filter(|&&w| inside(w)).count(),
                std::cmp::Reverse(v),
            )
        })
        .expect("component is nonempty");
    parent[root] = above;
    let rest: Vec<usize> = comp.iter().copied().filter(|&u| u != root).collect();
    for sub in graph.components(&rest) {
        build_greedy(graph, &sub, Some(root), parent);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, Family, Signature};

    #[test]
    fn single_edge_has_depth_two() {
        let inst =
            Instance::from_facts(Signature::new([("R", 2)]).unwrap(), [("R", vec!["a", "b"])])
                .unwrap();
        let (forest, h) = tree_depth(&inst);
        assert_eq!(h, 2);
        assert_eq!(forest.parent(0), None);
        assert_eq!(forest.parent(1), Some(0));
    }

    #[test]
    fn isolated_vertex_has_depth_one() {
        let inst =
            Instance::from_facts(Signature::new([("U", 1)]).unwrap(), [("U", vec!["a"])]).unwrap();
        assert_eq!(tree_depth(&inst).1, 1);
    }

    #[test]
    fn path_of_seven_has_depth_three() {
        let inst = generate_instance(&Family::line(7)).unwrap();
        let (forest, h) = tree_depth(&inst);
        assert_eq!(h, 3);
        assert_eq!(forest.violation(&gaifman_graph(&inst)), None);
    }

    #[test]
    fn exact_depth_of_paths_is_logarithmic() {
        // td(P_n) = ceil(log2(n + 1))
        for n in 1..=10usize {
            let inst = generate_instance(&Family::line(n.max(2))).unwrap();
            let expected = (usize::BITS - n.max(2).leading_zeros()) as usize;
            assert_eq!(tree_depth(&inst).1, expected, "n = {}", n.max(2));
        }
    }

    #[test]
    fn greedy_forests_are_valid() {
        for seed in 0..10 {
            let inst = generate_instance(&Family::Random {
                elements: 16,
                relations: vec![("E".into(), 2, 0.1)],
                seed,
            })
            .unwrap();
            let (forest, h) = tree_depth(&inst);
            assert_eq!(forest.violation(&gaifman_graph(&inst)), None);
            assert!(h >= 1);
        }
    }
}
