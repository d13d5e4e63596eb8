use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::DecompositionError;
use crate::model::Instance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionNode {
    /// Sorted, duplicate-free vertex ids.
    pub bag: Vec<usize>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// A rooted tree of bags over vertex ids `0..n`.
///
/// For instances the vertices are element ids; for circuits they are gate ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    nodes: Vec<DecompositionNode>,
    root: usize,
}

impl TreeDecomposition {
    /// A single empty bag, the decomposition of the empty instance.
    pub fn empty() -> Self {
        TreeDecomposition::single(Vec::new())
    }

    pub fn single(bag: Vec<usize>) -> Self {
        let mut bag = bag;
        bag.sort_unstable();
        bag.dedup();
        TreeDecomposition {
            nodes: vec![DecompositionNode {
                bag,
                children: Vec::new(),
                parent: None,
            }],
            root: 0,
        }
    }

    /// Builds a decomposition from bags and child lists; the root is the unique
    /// node that is nobody's child.
    pub fn from_parts(
        bags: Vec<Vec<usize>>,
        children: Vec<Vec<usize>>,
    ) -> Result<Self, DecompositionError> {
        if bags.is_empty() {
            return Err(DecompositionError::MalformedTree("no nodes".into()));
        }
        if bags.len() != children.len() {
            return Err(DecompositionError::MalformedTree(
                "bags and child lists differ in length".into(),
            ));
        }
        let n = bags.len();
        let mut parent = vec![None; n];
        for (p, cs) in children.iter().enumerate() {
            for &c in cs {
                if c >= n {
                    return Err(DecompositionError::MalformedTree(format!(
                        "child {c} out of range"
                    )));
                }
                if parent[c].replace(p).is_some() || c == p {
                    return Err(DecompositionError::MalformedTree(format!(
                        "node {c} has several parents"
                    )));
                }
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(DecompositionError::MalformedTree(format!(
                "expected one root, found {}",
                roots.len()
            )));
        }
        let nodes: Vec<DecompositionNode> = bags
            .into_iter()
            .zip(children)
            .zip(parent)
            .map(|((mut bag, children), parent)| {
                bag.sort_unstable();
                bag.dedup();
                DecompositionNode {
                    bag,
                    children,
                    parent,
                }
            })
            .collect();
        let td = TreeDecomposition {
            nodes,
            root: roots[0],
        };
        if td.preorder().len() != n {
            return Err(DecompositionError::MalformedTree("cycle in tree".into()));
        }
        Ok(td)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[DecompositionNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &DecompositionNode {
        &self.nodes[i]
    }

    pub fn bag(&self, i: usize) -> &[usize] {
        &self.nodes[i].bag
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Maximal bag size minus one (0 when every bag is empty).
    pub fn width(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.bag.len())
            .max()
            .unwrap_or(0)
            .saturating_sub(1)
    }

    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        let mut seen = vec![false; self.nodes.len()];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            out.push(n);
            for &c in self.nodes[n].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Depth of every node, root at depth 0.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        for n in self.preorder() {
            for &c in &self.nodes[n].children {
                depth[c] = depth[n] + 1;
            }
        }
        depth
    }

    pub fn is_binary(&self) -> bool {
        self.nodes.iter().all(|n| n.children.len() <= 2)
    }

    pub fn is_path(&self) -> bool {
        self.nodes.iter().all(|n| n.children.len() <= 1)
    }

    /// Checks that every hyperedge lies in some bag and that the occurrences of
    /// every vertex form a connected subtree. Returns the index of the first
    /// uncovered hyperedge or disconnected vertex.
    pub fn check_cover<'a>(
        &self,
        vertex_count: usize,
        hyperedges: impl IntoIterator<Item = &'a [usize]>,
    ) -> Result<(), CoverViolation> {
        for node in &self.nodes {
            if let Some(&v) = node.bag.iter().find(|&&v| v >= vertex_count) {
                return Err(CoverViolation::UnknownVertex(v));
            }
        }
        let occurrences = self.occurrences(vertex_count);
        for (i, edge) in hyperedges.into_iter().enumerate() {
            let mut vs: Vec<usize> = edge.to_vec();
            vs.sort_unstable();
            vs.dedup();
            let covered = match vs.first() {
                None => true,
                Some(&first) => occurrences[first]
                    .iter()
                    .any(|&n| vs.iter().all(|v| self.nodes[n].bag.binary_search(v).is_ok())),
            };
            if !covered {
                return Err(CoverViolation::Edge(i));
            }
        }
        for (v, occ) in occurrences.iter().enumerate() {
            if !self.is_connected_subset(occ) {
                return Err(CoverViolation::Disconnected(v));
            }
        }
        Ok(())
    }

    /// For each vertex, the nodes whose bag contains it.
    pub fn occurrences(&self, vertex_count: usize) -> Vec<Vec<usize>> {
        let mut occ = vec![Vec::new(); vertex_count];
        for (i, node) in self.nodes.iter().enumerate() {
            for &v in &node.bag {
                if v < vertex_count {
                    occ[v].push(i);
                }
            }
        }
        occ
    }

    fn is_connected_subset(&self, nodes: &[usize]) -> bool {
        if nodes.len() <= 1 {
            return true;
        }
        // a node set of a tree is connected iff exactly one member has its
        // parent outside the set
        let set: BTreeSet<usize> = nodes.iter().copied().collect();
        let tops = nodes
            .iter()
            .filter(|&&n| match self.nodes[n].parent {
                Some(p) => !set.contains(&p),
                None => true,
            })
            .count();
        tops == 1
    }

    /// Same-bag duplication turning every node with more than two children
    /// into a right comb of copies.
    pub fn binarize(&self) -> TreeDecomposition {
        let mut bags: Vec<Vec<usize>> = Vec::new();
        let mut children: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::new();
        bags.push(self.nodes[self.root].bag.clone());
        children.push(Vec::new());
        queue.push_back((self.root, 0usize));
        while let Some((orig, copy)) = queue.pop_front() {
            let kids = &self.nodes[orig].children;
            let mut holder = copy;
            for (i, &kid) in kids.iter().enumerate() {
                let remaining = kids.len() - i;
                let new_kid = bags.len();
                bags.push(self.nodes[kid].bag.clone());
                children.push(Vec::new());
                children[holder].push(new_kid);
                queue.push_back((kid, new_kid));
                if remaining > 2 {
                    let dup = bags.len();
                    bags.push(self.nodes[orig].bag.clone());
                    children.push(Vec::new());
                    children[holder].push(dup);
                    holder = dup;
                }
            }
        }
        TreeDecomposition::from_parts(bags, children).expect("binarization yields a tree")
    }

    /// Merges every node whose bag is contained in its parent's bag into the
    /// parent. Keeps validity and does not increase width.
    pub fn contract_redundant(&self) -> TreeDecomposition {
        let n = self.nodes.len();
        let mut alive = vec![true; n];
        let mut target: Vec<usize> = (0..n).collect();
        let mut bags: Vec<Vec<usize>> = self.nodes.iter().map(|x| x.bag.clone()).collect();
        // a node with a single child whose bag it is contained in takes that bag
        for &node in self.preorder().iter().rev() {
            if let [c] = self.nodes[node].children[..] {
                if bags[node].iter().all(|v| bags[c].binary_search(v).is_ok()) {
                    bags[node] = bags[c].clone();
                }
            }
        }
        for node in self.preorder() {
            if let Some(p) = self.nodes[node].parent {
                let p = target[p];
                let sub = bags[node].iter().all(|v| bags[p].binary_search(v).is_ok());
                if sub {
                    alive[node] = false;
                    target[node] = p;
                }
            }
        }
        // rebuild with surviving nodes; children of removed nodes move up
        let mut index = vec![usize::MAX; n];
        let mut order = Vec::new();
        for node in self.preorder() {
            if alive[node] {
                index[node] = order.len();
                order.push(node);
            }
        }
        let mut children = vec![Vec::new(); order.len()];
        for node in self.preorder() {
            if !alive[node] {
                continue;
            }
            if let Some(p) = self.nodes[node].parent {
                children[index[target[p]]].push(index[node]);
            }
        }
        let new_bags = order.iter().map(|&o| std::mem::take(&mut bags[o])).collect();
        TreeDecomposition::from_parts(new_bags, children).expect("contraction yields a tree")
    }

    /// Path-shaped decomposition rooted at the first bag.
    pub(crate) fn from_path(bags: Vec<Vec<usize>>) -> Self {
        if bags.is_empty() {
            return TreeDecomposition::empty();
        }
        let n = bags.len();
        let children = (0..n)
            .map(|i| if i + 1 < n { vec![i + 1] } else { Vec::new() })
            .collect();
        TreeDecomposition::from_parts(bags, children).expect("a path is a tree")
    }

    /// Bags along the path from the root, if this decomposition is a path.
    pub fn path_bags(&self) -> Option<Vec<&[usize]>> {
        if !self.is_path() {
            return None;
        }
        let mut out = Vec::new();
        let mut cur = Some(self.root);
        while let Some(n) = cur {
            out.push(self.nodes[n].bag.as_slice());
            cur = self.nodes[n].children.first().copied();
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverViolation {
    Edge(usize),
    Disconnected(usize),
    UnknownVertex(usize),
}

/// Checks coverage and connectedness against `inst`, plus a declared width.
pub fn validate_decomposition(
    inst: &Instance,
    td: &TreeDecomposition,
    declared_width: Option<usize>,
) -> Result<(), DecompositionError> {
    let facts: Vec<Vec<usize>> = inst
        .facts()
        .iter()
        .map(|f| f.args.iter().map(|a| a.0).collect())
        .collect();
    td.check_cover(inst.domain_size(), facts.iter().map(Vec::as_slice))
        .map_err(|v| match v {
            CoverViolation::Edge(i) => DecompositionError::FactNotCovered(i),
            CoverViolation::Disconnected(e) => DecompositionError::DisconnectedOccurrence(
                inst.element_name(crate::model::ElementId(e)).to_string(),
            ),
            CoverViolation::UnknownVertex(v) => {
                DecompositionError::UnknownElement(format!("vertex {v}"))
            }
        })?;
    if let Some(w) = declared_width {
        if w != td.width() {
            return Err(DecompositionError::WidthMismatch {
                declared: w,
                actual: td.width(),
            });
        }
    }
    Ok(())
}

/// Wire form: `{"nodes":[{"id":0,"bag":["a","b"],"children":[1,2]}], "width":1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub nodes: Vec<DecompositionNodeJson>,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionNodeJson {
    pub id: usize,
    pub bag: Vec<String>,
    pub children: Vec<usize>,
}

impl DecompositionJson {
    pub fn from_decomposition(td: &TreeDecomposition, name: impl Fn(usize) -> String) -> Self {
        let nodes = td
            .preorder()
            .into_iter()
            .map(|i| DecompositionNodeJson {
                id: i,
                bag: td.bag(i).iter().map(|&v| name(v)).collect(),
                children: td.node(i).children.clone(),
            })
            .collect();
        DecompositionJson {
            nodes,
            width: td.width(),
        }
    }

    pub fn for_instance(inst: &Instance, td: &TreeDecomposition) -> Self {
        Self::from_decomposition(td, |v| {
            inst.element_name(crate::model::ElementId(v)).to_string()
        })
    }

    /// Parses a decomposition whose bags name vertices through `resolve`.
    /// The declared width is checked against the bags.
    pub fn to_decomposition(
        &self,
        resolve: impl Fn(&str) -> Option<usize>,
    ) -> Result<TreeDecomposition, DecompositionError> {
        let n = self.nodes.len();
        let mut slot = vec![usize::MAX; n];
        for (pos, node) in self.nodes.iter().enumerate() {
            if node.id >= n || slot[node.id] != usize::MAX {
                return Err(DecompositionError::MalformedTree(format!(
                    "node ids must be a permutation of 0..{n}"
                )));
            }
            slot[node.id] = pos;
        }
        let mut bags = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for node in &self.nodes {
            bags[node.id] = node
                .bag
                .iter()
                .map(|e| resolve(e).ok_or_else(|| DecompositionError::UnknownElement(e.clone())))
                .collect::<Result<_, _>>()?;
            children[node.id] = node.children.clone();
        }
        let td = TreeDecomposition::from_parts(bags, children)?;
        if td.width() != self.width {
            return Err(DecompositionError::WidthMismatch {
                declared: self.width,
                actual: td.width(),
            });
        }
        Ok(td)
    }

    pub fn to_instance_decomposition(
        &self,
        inst: &Instance,
    ) -> Result<TreeDecomposition, DecompositionError> {
        self.to_decomposition(|e| inst.element_id(e).map(|i| i.0))
    }
}
