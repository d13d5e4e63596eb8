use std::collections::BTreeSet;

use super::{ElementId, Instance};

/// Undirected graph on the domain connecting co-occurring elements.
/// Vertex `i` is the element with id `i` (first-occurrence order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaifmanGraph {
    adjacency: Vec<BTreeSet<usize>>,
}

impl GaifmanGraph {
    pub fn with_vertices(n: usize) -> Self {
        GaifmanGraph {
            adjacency: vec![BTreeSet::new(); n],
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.adjacency[u].insert(v);
            self.adjacency[v].insert(u);
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].contains(&v)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Connected components, each sorted, listed by smallest vertex.
    pub fn components(&self, within: &[usize]) -> Vec<Vec<usize>> {
        let mut allowed = vec![false; self.vertex_count()];
        for &v in within {
            allowed[v] = true;
        }
        let mut seen = vec![false; self.vertex_count()];
        let mut out = Vec::new();
        let mut sorted = within.to_vec();
        sorted.sort_unstable();
        for &start in &sorted {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &w in &self.adjacency[u] {
                    if allowed[w] && !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

pub fn gaifman_graph(inst: &Instance) -> GaifmanGraph {
    let mut g = GaifmanGraph::with_vertices(inst.domain_size());
    for fact in inst.facts() {
        for (i, &ElementId(a)) in fact.args.iter().enumerate() {
            for &ElementId(b) in &fact.args[i + 1..] {
                g.add_edge(a, b);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Signature;

    fn sig() -> Signature {
        Signature::new([("R", 2), ("S", 2), ("U", 1), ("T", 3)]).unwrap()
    }

    #[test]
    fn single_fact_gives_single_edge() {
        let inst = Instance::from_facts(sig(), [("R", vec!["a", "b"])]).unwrap();
        let g = gaifman_graph(&inst);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn chain_of_two_facts() {
        let inst =
            Instance::from_facts(sig(), [("R", vec!["a", "b"]), ("S", vec!["b", "c"])]).unwrap();
        let g = gaifman_graph(&inst);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn unary_fact_has_no_edges() {
        let inst = Instance::from_facts(sig(), [("U", vec!["a"])]).unwrap();
        let g = gaifman_graph(&inst);
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn ternary_fact_is_a_clique_without_loops() {
        let inst = Instance::from_facts(sig(), [("T", vec!["a", "b", "a"])]).unwrap();
        let g = gaifman_graph(&inst);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }
}
