//! Binary tree encodings with at most one fact per node.
//!
//! Every node of a binarized decomposition becomes one or more encoding nodes
//! carrying the same bag. Elements are stored in numbered slots `0..=k`: an
//! element shared with the parent bag keeps the parent's slot, a new element
//! takes the smallest free slot. A node label records the occupied slots, the
//! slots shared with the parent (`up`) and the housed fact written over slots.

use std::fmt;

use super::{validate_decomposition, DecompositionError, TreeDecomposition};
use crate::model::{ElementId, Fact, FactId, FactSet, Instance, RelId, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeLabel {
    pub slots: u32,
    pub up: u32,
    pub fact: Option<(RelId, Vec<u8>)>,
}

impl NodeLabel {
    /// Human-readable form, e.g. `{0,1}^{1}R(0,1)`.
    pub fn render(&self, sig: &Signature) -> String {
        let set = |m: u32| {
            let items: Vec<String> = (0..32).filter(|s| m >> s & 1 == 1).map(|s| s.to_string()).collect();
            format!("{{{}}}", items.join(","))
        };
        let mut out = format!("{}^{}", set(self.slots), set(self.up));
        if let Some((rel, args)) = &self.fact {
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            out.push_str(&format!("{}({})", sig.name(*rel), args.join(",")));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingNode {
    pub label: NodeLabel,
    /// Element occupying each slot, `None` for free slots.
    pub witness: Vec<Option<ElementId>>,
    pub fact_id: Option<FactId>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// Nodes are stored in preorder, so the root is node 0 and every child has a
/// larger index than its parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEncoding {
    nodes: Vec<EncodingNode>,
    width: usize,
    signature: Signature,
    fact_count: usize,
}

pub fn tree_encode(inst: &Instance, td: &TreeDecomposition) -> Result<TreeEncoding, DecompositionError> {
    tree_encode_with_width(inst, td, td.width())
}

/// Encodes with `width + 1` slots; fails with `WidthOverflow` on larger bags.
pub fn tree_encode_with_width(
    inst: &Instance,
    td: &TreeDecomposition,
    width: usize,
) -> Result<TreeEncoding, DecompositionError> {
    validate_decomposition(inst, td, None)?;
    if width >= 32 {
        return Err(DecompositionError::WidthOverflow {
            size: td.width() + 1,
            width,
        });
    }
    if let Some(big) = td.nodes().iter().find(|n| n.bag.len() > width + 1) {
        return Err(DecompositionError::WidthOverflow {
            size: big.bag.len(),
            width,
        });
    }
    let bt = td.binarize();
    let order = bt.preorder();
    let depth = bt.depths();
    let mut rank = vec![0; bt.len()];
    for (i, &n) in order.iter().enumerate() {
        rank[n] = i;
    }

    // slot assignment, top-down
    let mut slot_of: Vec<Vec<(usize, u8)>> = vec![Vec::new(); bt.len()];
    for &n in &order {
        let parent_slots: &[(usize, u8)] = match bt.node(n).parent {
            Some(p) => &slot_of[p].clone(),
            None => &[],
        };
        let mut used = 0u32;
        let mut assigned = Vec::new();
        let mut fresh = Vec::new();
        for &e in bt.bag(n) {
            match parent_slots.iter().find(|(pe, _)| *pe == e) {
                Some(&(_, s)) => {
                    used |= 1 << s;
                    assigned.push((e, s));
                }
                None => fresh.push(e),
            }
        }
        for e in fresh {
            let s = (!used).trailing_zeros() as u8;
            used |= 1 << s;
            assigned.push((e, s));
        }
        assigned.sort_unstable();
        slot_of[n] = assigned;
    }

    // house each fact at the shallowest covering node, ties by preorder
    let mut housed: Vec<Vec<usize>> = vec![Vec::new(); bt.len()];
    for (i, fact) in inst.facts().iter().enumerate() {
        let best = (0..bt.len())
            .filter(|&n| fact.args.iter().all(|a| bt.bag(n).binary_search(&a.0).is_ok()))
            .min_by_key(|&n| (depth[n], rank[n]))
            .ok_or(DecompositionError::FactNotCovered(i))?;
        housed[best].push(i);
    }

    let mut enc = TreeEncoding {
        nodes: Vec::new(),
        width,
        signature: inst.signature().clone(),
        fact_count: inst.len(),
    };
    let mut builder = Builder {
        inst,
        bt: &bt,
        slot_of: &slot_of,
        housed: &housed,
        width,
    };
    builder.emit(&mut enc.nodes, bt.root(), None);
    Ok(enc)
}

struct Builder<'a> {
    inst: &'a Instance,
    bt: &'a TreeDecomposition,
    slot_of: &'a [Vec<(usize, u8)>],
    housed: &'a [Vec<usize>],
    width: usize,
}

impl Builder<'_> {
    fn emit(&mut self, out: &mut Vec<EncodingNode>, n: usize, parent: Option<(usize, usize)>) {
        let slots_here = &self.slot_of[n];
        let mask = slots_here.iter().fold(0u32, |m, &(_, s)| m | 1 << s);
        let up = match parent {
            Some((bt_parent, _)) => slots_here
                .iter()
                .filter(|(e, _)| self.slot_of[bt_parent].iter().any(|(pe, _)| pe == e))
                .fold(0u32, |m, &(_, s)| m | 1 << s),
            None => 0,
        };
        let mut witness = vec![None; self.width + 1];
        for &(e, s) in slots_here {
            witness[s as usize] = Some(ElementId(e));
        }
        let slot_for = |e: ElementId| -> u8 {
            slots_here.iter().find(|(x, _)| *x == e.0).expect("fact is inside its bag").1
        };
        let facts = &self.housed[n];
        let chain = facts.len().max(1);
        let mut above = parent.map(|(_, enc_parent)| enc_parent);
        for j in 0..chain {
            let fact = facts.get(j).map(|&i| {
                let f = &self.inst.facts()[i];
                (f.relation, f.args.iter().map(|&a| slot_for(a)).collect())
            });
            let idx = out.len();
            out.push(EncodingNode {
                label: NodeLabel {
                    slots: mask,
                    up: if j == 0 { up } else { mask },
                    fact,
                },
                witness: witness.clone(),
                fact_id: facts.get(j).map(|&i| FactId(i)),
                children: Vec::new(),
                parent: above,
            });
            if let Some(p) = above {
                out[p].children.push(idx);
            }
            above = Some(idx);
        }
        let last = above.expect("chain is nonempty");
        for &c in &self.bt.node(n).children {
            self.emit(out, c, Some((n, last)));
        }
    }
}

impl TreeEncoding {
    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[EncodingNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &EncodingNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of slots minus one.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn fact_count(&self) -> usize {
        self.fact_count
    }

    pub fn is_binary(&self) -> bool {
        self.nodes.iter().all(|n| n.children.len() <= 2)
    }

    /// Node housing each fact, indexed by fact id.
    pub fn fact_nodes(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.fact_count];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(f) = n.fact_id {
                out[f.0] = i;
            }
        }
        out
    }

    /// Children before parents.
    pub fn bottom_up(&self) -> impl Iterator<Item = usize> {
        (0..self.nodes.len()).rev()
    }

    /// Rebuilds an instance from the labels alone. Elements are named `e0`,
    /// `e1`, ... in order of introduction; facts appear in node order.
    pub fn decode(&self) -> Instance {
        let mut inst = Instance::new(self.signature.clone());
        let mut names: Vec<Vec<Option<usize>>> = vec![vec![None; self.width + 1]; self.nodes.len()];
        let mut next = 0;
        for i in 0..self.nodes.len() {
            let label = &self.nodes[i].label;
            for s in 0..=self.width {
                if label.slots >> s & 1 == 0 {
                    continue;
                }
                names[i][s] = if label.up >> s & 1 == 1 {
                    names[self.nodes[i].parent.expect("root shares nothing")][s]
                } else {
                    next += 1;
                    Some(next - 1)
                };
            }
            if let Some((rel, args)) = &label.fact {
                let args: Vec<String> = args
                    .iter()
                    .map(|&s| format!("e{}", names[i][s as usize].expect("fact slot occupied")))
                    .collect();
                inst.add_fact(self.signature.name(*rel), &args)
                    .expect("encoded facts are distinct");
            }
        }
        inst
    }

    /// The fact each node houses, translated back through the witnesses.
    pub fn witnessed_fact(&self, i: usize) -> Option<Fact> {
        let node = &self.nodes[i];
        node.label.fact.as_ref().map(|(rel, args)| Fact {
            relation: *rel,
            args: args
                .iter()
                .map(|&s| node.witness[s as usize].expect("fact slot occupied"))
                .collect(),
        })
    }

    pub fn annotate(&self, kept: &FactSet) -> AnnotatedTreeEncoding<'_> {
        let flags = self
            .nodes
            .iter()
            .map(|n| n.fact_id.is_some_and(|f| kept.contains(f.0)))
            .collect();
        AnnotatedTreeEncoding {
            encoding: self,
            kept: flags,
        }
    }

    /// The decomposition underlying the encoding, with slot witnesses as bags.
    pub fn as_decomposition(&self) -> TreeDecomposition {
        let bags = self
            .nodes
            .iter()
            .map(|n| {
                let mut b: Vec<usize> = n.witness.iter().flatten().map(|e| e.0).collect();
                b.sort_unstable();
                b
            })
            .collect();
        let children = self.nodes.iter().map(|n| n.children.clone()).collect();
        TreeDecomposition::from_parts(bags, children).expect("encoding is a tree")
    }
}

impl fmt::Display for TreeEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            let kids: Vec<String> = n.children.iter().map(|c| c.to_string()).collect();
            writeln!(f, "{i}: {} -> [{}]", n.label.render(&self.signature), kids.join(","))?;
        }
        Ok(())
    }
}

/// A tree encoding with a keep/drop flag per node. Nodes housing no fact are
/// always flagged `false`.
#[derive(Debug, Clone)]
pub struct AnnotatedTreeEncoding<'a> {
    pub encoding: &'a TreeEncoding,
    kept: Vec<bool>,
}

impl<'a> AnnotatedTreeEncoding<'a> {
    pub fn kept(&self, node: usize) -> bool {
        self.kept[node]
    }

    pub fn flags(&self) -> &[bool] {
        &self.kept
    }

    /// The kept facts as a fact set.
    pub fn selection(&self) -> FactSet {
        let mut set = FactSet::empty(self.encoding.fact_count());
        for (i, n) in self.encoding.nodes().iter().enumerate() {
            if self.kept[i] {
                set.insert(n.fact_id.expect("only fact nodes are kept").0);
            }
        }
        set
    }
}
