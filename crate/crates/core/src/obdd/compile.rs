//! Level-by-level compilation of a decomposed circuit into an OBDD.
//!
//! Level `i` holds one node per class of partial valuations of the first
//! `i` variables, two valuations being in the same class when they leave the
//! same function of the remaining variables. Classes are numbered by first
//! appearance (parents in level order, 0-edge before 1-edge) and represented
//! by their first member.

use std::collections::HashMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Obdd, ObddError, ObddNode, VariableOrder};
use crate::circuit::{fact_word, with_fanin_two, Circuit, CircuitBuilder, CircuitDecomposition, Gate, GateId};
use crate::decomposition::TreeDecomposition;
use crate::probability::sum_product;

/// Suffix size up to which [`EquivalenceStrategy::Auto`] compares truth tables.
pub const BRUTE_FORCE_SUFFIX_LIMIT: usize = 16;
const FINGERPRINT_WORDS: usize = 4;
const ROW_CAP: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EquivalenceStrategy {
    /// Compare truth tables over the remaining variables.
    BruteForce,
    /// Decide satisfiability of the difference of two restrictions by
    /// message passing over a decomposition of the difference circuit.
    DifferenceCircuit,
    /// Truth tables up to [`BRUTE_FORCE_SUFFIX_LIMIT`] remaining variables,
    /// difference circuits above.
    #[default]
    Auto,
}

/// Input facts ordered by a traversal of `cd`: each input belongs to the
/// topmost bag holding it, a node lists its own inputs before its children,
/// and children come by decreasing number of inputs below them, ties by
/// preorder.
pub fn variable_order(c: &Circuit, cd: &CircuitDecomposition) -> VariableOrder {
    let occ = cd.occurrences(c.size());
    let depth = cd.depths();
    let preorder = cd.preorder();
    let mut rank = vec![0; cd.len()];
    for (k, &n) in preorder.iter().enumerate() {
        rank[n] = k;
    }
    let mut own: Vec<Vec<usize>> = vec![Vec::new(); cd.len()];
    for (g, f) in c.input_gates() {
        if let Some(&n) = occ[g].iter().min_by_key(|&&n| (depth[n], rank[n])) {
            own[n].push(f);
        }
    }
    let mut below: Vec<usize> = own.iter().map(Vec::len).collect();
    for &n in preorder.iter().rev() {
        if let Some(p) = cd.node(n).parent {
            below[p] += below[n];
        }
    }
    let mut facts = Vec::new();
    let mut stack = vec![cd.root()];
    while let Some(n) = stack.pop() {
        facts.extend(own[n].iter().copied());
        let mut kids = cd.node(n).children.clone();
        kids.sort_by_key(|&k| (std::cmp::Reverse(below[k]), rank[k]));
        stack.extend(kids.into_iter().rev());
    }
    VariableOrder::new(facts).expect("each input gate has a distinct fact")
}

pub fn compile_to_obdd(c: &Circuit, cd: &CircuitDecomposition) -> Result<Obdd, ObddError> {
    compile_to_obdd_with(c, cd, EquivalenceStrategy::Auto)
}

/// As [`compile_to_obdd`], requiring a path decomposition.
pub fn compile_to_obdd_pathwidth(c: &Circuit, pd: &CircuitDecomposition) -> Result<Obdd, ObddError> {
    if !pd.is_path() {
        return Err(ObddError::NotAPath);
    }
    compile_to_obdd(c, pd)
}

pub fn compile_to_obdd_with(
    c: &Circuit,
    cd: &CircuitDecomposition,
    strategy: EquivalenceStrategy,
) -> Result<Obdd, ObddError> {
    c.check_decomposition(cd)?;
    let order = variable_order(c, cd);
    let m = order.len();
    let mut position = vec![usize::MAX; c.fact_count()];
    for (k, &f) in order.facts().iter().enumerate() {
        position[f] = k;
    }
    let mut oracle = Oracle::new(c, cd, position, strategy);

    let mut nodes: Vec<ObddNode> = vec![ObddNode::Leaf(false)];
    let mut levels: Vec<Vec<usize>> = vec![vec![0]];
    let mut reps: Vec<Vec<bool>> = vec![Vec::new()];
    for i in 0..m {
        let candidates: Vec<Vec<bool>> = reps
            .iter()
            .flat_map(|p| {
                [false, true].map(|b| {
                    let mut q = p.clone();
                    q.push(b);
                    q
                })
            })
            .collect();
        let classes = if i + 1 == m {
            oracle.classify_leaves(&candidates)
        } else {
            oracle.classify(&candidates).map_err(|_| ObddError::WidthTooLarge(i + 1))?
        };
        let count = classes.iter().max().map_or(0, |&k| k + 1);
        let base = nodes.len();
        let mut next_reps: Vec<Option<Vec<bool>>> = vec![None; count];
        for (cand, &k) in candidates.iter().zip(&classes) {
            if next_reps[k].is_none() {
                next_reps[k] = Some(cand.clone());
            }
        }
        for (j, &id) in levels[i].iter().enumerate() {
            nodes[id] = ObddNode::Branch {
                level: i,
                lo: base + classes[2 * j],
                hi: base + classes[2 * j + 1],
            };
        }
        let reps_next: Vec<Vec<bool>> = next_reps.into_iter().map(|r| r.expect("every class has a member")).collect();
        for r in &reps_next {
            nodes.push(if i + 1 == m {
                ObddNode::Leaf(oracle.value(r))
            } else {
                ObddNode::Leaf(false)
            });
        }
        levels.push((base..base + count).collect());
        reps = reps_next;
    }
    if m == 0 {
        nodes[0] = ObddNode::Leaf(oracle.value(&[]));
    }
    Obdd::from_levels(order, nodes, levels)
}

struct Oracle<'a> {
    c: &'a Circuit,
    position: Vec<usize>,
    strategy: EquivalenceStrategy,
    m: usize,
    patched: Option<(Circuit, CircuitDecomposition)>,
    cd: &'a CircuitDecomposition,
    random: Vec<Vec<u64>>,
}

impl<'a> Oracle<'a> {
    fn new(c: &'a Circuit, cd: &'a CircuitDecomposition, position: Vec<usize>, strategy: EquivalenceStrategy) -> Self {
        let m = position.iter().filter(|&&p| p != usize::MAX).count();
        let mut rng = ChaCha8Rng::seed_from_u64(0x0bdd);
        let random = (0..FINGERPRINT_WORDS)
            .map(|_| (0..m).map(|_| rng.next_u64()).collect())
            .collect();
        Oracle {
            c,
            position,
            strategy,
            m,
            patched: None,
            cd,
            random,
        }
    }

    fn word(&self, prefix: &[bool], f: usize, suffix: impl Fn(usize) -> u64) -> u64 {
        match self.position[f] {
            usize::MAX => 0,
            p if p < prefix.len() => {
                if prefix[p] {
                    !0
                } else {
                    0
                }
            }
            p => suffix(p - prefix.len()),
        }
    }

    fn value(&self, full: &[bool]) -> bool {
        self.c.evaluate_words(|f| self.word(full, f, |_| 0))[self.c.output()] & 1 == 1
    }

    fn classify_leaves(&self, candidates: &[Vec<bool>]) -> Vec<usize> {
        first_appearance(candidates.iter().map(|p| self.value(p)))
    }

    fn classify(&mut self, candidates: &[Vec<bool>]) -> Result<Vec<usize>, usize> {
        let rest = self.m - candidates[0].len();
        let brute = match self.strategy {
            EquivalenceStrategy::BruteForce => true,
            EquivalenceStrategy::DifferenceCircuit => false,
            EquivalenceStrategy::Auto => rest <= BRUTE_FORCE_SUFFIX_LIMIT,
        };
        if brute {
            return Ok(first_appearance(candidates.iter().map(|p| self.table(p, rest))));
        }
        let prints: Vec<Vec<u64>> = candidates.iter().map(|p| self.fingerprint(p)).collect();
        let mut reps: Vec<usize> = Vec::new();
        let mut by_print: HashMap<&Vec<u64>, Vec<usize>> = HashMap::new();
        let mut out = Vec::with_capacity(candidates.len());
        for (k, p) in candidates.iter().enumerate() {
            let mut found = None;
            for &class in by_print.get(&prints[k]).map(Vec::as_slice).unwrap_or(&[]) {
                if self.equivalent(&candidates[reps[class]], p)? {
                    found = Some(class);
                    break;
                }
            }
            let class = match found {
                Some(class) => class,
                None => {
                    reps.push(k);
                    by_print.entry(&prints[k]).or_default().push(reps.len() - 1);
                    reps.len() - 1
                }
            };
            out.push(class);
        }
        Ok(out)
    }

    fn table(&self, prefix: &[bool], rest: usize) -> Vec<u64> {
        let words = (1usize << rest).div_ceil(64);
        let mut out: Vec<u64> = (0..words)
            .map(|w| self.c.evaluate_words(|f| self.word(prefix, f, |s| fact_word(s, w)))[self.c.output()])
            .collect();
        if rest < 6 {
            out[0] &= (1u64 << (1 << rest)) - 1;
        }
        out
    }

    fn fingerprint(&self, prefix: &[bool]) -> Vec<u64> {
        self.random
            .iter()
            .map(|r| self.c.evaluate_words(|f| self.word(prefix, f, |s| r[prefix.len() + s]))[self.c.output()])
            .collect()
    }

    /// Two restrictions differ iff their difference circuit is satisfiable.
    fn equivalent(&mut self, p: &[bool], q: &[bool]) -> Result<bool, usize> {
        if self.patched.is_none() {
            self.patched = Some(with_fanin_two(self.c, self.cd));
        }
        let (c, cd) = self.patched.as_ref().expect("just set");
        let (d, dd) = difference_circuit(c, cd, &self.position, p, q);
        Ok(!sum_product(&d, &dd, |_, _| true, ROW_CAP)?)
    }
}

/// Two copies of `c` sharing the inputs of the remaining variables, with the
/// prefix inputs replaced by constants, joined by five gates computing their
/// exclusive or. Each bag holds both copies of its gates and the five new
/// gates.
fn difference_circuit(
    c: &Circuit,
    cd: &CircuitDecomposition,
    position: &[usize],
    p: &[bool],
    q: &[bool],
) -> (Circuit, CircuitDecomposition) {
    let mut b = CircuitBuilder::new();
    let mut copies: [Vec<GateId>; 2] = [Vec::with_capacity(c.size()), Vec::with_capacity(c.size())];
    for (g, gate) in c.gates().iter().enumerate() {
        for (side, prefix) in [p, q].into_iter().enumerate() {
            let map = &copies[side];
            let new = match gate {
                Gate::Input(f) => match position[*f] {
                    k if k < prefix.len() => Gate::Const(prefix[k]),
                    usize::MAX => Gate::Const(false),
                    _ => Gate::Input(*f),
                },
                Gate::Const(v) => Gate::Const(*v),
                Gate::Not(x) => Gate::Not(map[*x]),
                Gate::And(xs) => Gate::And(xs.iter().map(|&x| map[x]).collect()),
                Gate::Or(xs) => Gate::Or(xs.iter().map(|&x| map[x]).collect()),
            };
            let id = b.add(new, format!("{}:{g}", side + 1));
            copies[side].push(id);
        }
    }
    let (o1, o2) = (copies[0][c.output()], copies[1][c.output()]);
    let n1 = b.add(Gate::Not(o1), "not1");
    let n2 = b.add(Gate::Not(o2), "not2");
    let a1 = b.add(Gate::And(vec![o1, n2]), "only1");
    let a2 = b.add(Gate::And(vec![n1, o2]), "only2");
    let out = b.add(Gate::Or(vec![a1, a2]), "differ");
    let d = b.finish(out, c.fact_count()).expect("copies stay in order");
    let extra = [n1, n2, a1, a2, out];
    let bags = cd
        .nodes()
        .iter()
        .map(|n| {
            let mut bag: Vec<usize> = n
                .bag
                .iter()
                .flat_map(|&g| [copies[0][g], copies[1][g]])
                .chain(extra)
                .collect();
            bag.sort_unstable();
            bag.dedup();
            bag
        })
        .collect();
    let children = cd.nodes().iter().map(|n| n.children.clone()).collect();
    let dd = TreeDecomposition::from_parts(bags, children).expect("same tree");
    (d, dd)
}

fn first_appearance<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> Vec<usize> {
    let mut seen: HashMap<K, usize> = HashMap::new();
    keys.map(|k| {
        let next = seen.len();
        *seen.entry(k).or_insert(next)
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::compile_query;
    use crate::circuit::{build_lineage_circuit, LineageCircuit};
    use crate::decomposition::{decompose_pathwidth, decompose_treewidth, tree_encode};
    use crate::fixtures::{qp, threshold_two};
    use crate::model::{generate_instance, ratio, FactSet, Family, Instance, ProbabilityValuation, Signature};
    use crate::probability::brute_force_circuit_probability;

    fn unary(n: usize) -> Instance {
        let names: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
        Instance::from_facts(
            Signature::new([("R", 1)]).unwrap(),
            names.iter().map(|s| ("R", vec![s.as_str()])),
        )
        .unwrap()
    }

    fn lineage(q: &crate::query::UcqNeq, inst: &Instance, path: bool) -> LineageCircuit {
        let td = if path {
            decompose_pathwidth(inst).into_tree()
        } else {
            decompose_treewidth(inst, None)
        };
        let enc = tree_encode(inst, &td).unwrap();
        build_lineage_circuit(&compile_query(q, enc.width()).unwrap(), &enc).unwrap()
    }

    fn assert_equivalent(c: &Circuit, o: &Obdd) {
        let n = c.fact_count();
        for m in 0..1u64 << n {
            let v = FactSet::from_mask(m, n);
            assert_eq!(c.evaluate(&v).unwrap(), o.evaluate(&v).unwrap(), "mask {m:b}");
        }
    }

    #[test]
    fn identity_circuit() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let c = b.finish(x, 1).unwrap();
        let o = compile_to_obdd(&c, &TreeDecomposition::single(vec![0])).unwrap();
        assert_eq!(o.size(), 3);
        assert_eq!(o.levels().len(), 2);
    }

    #[test]
    fn constant_circuit_is_a_leaf() {
        let mut b = CircuitBuilder::new();
        let t = b.constant(true);
        let c = b.finish(t, 0).unwrap();
        let o = compile_to_obdd_pathwidth(&c, &TreeDecomposition::single(vec![0])).unwrap();
        assert_eq!(o.size(), 1);
        assert!(o.evaluate(&FactSet::empty(0)).unwrap());
    }

    #[test]
    fn order_follows_a_path() {
        let mut b = CircuitBuilder::new();
        let x = b.input(2);
        let y = b.input(0);
        let z = b.input(1);
        let a = b.and(vec![x, y]);
        let o = b.or(vec![a, z]);
        let c = b.finish(o, 3).unwrap();
        let td = TreeDecomposition::from_parts(
            vec![vec![0, 1, 3], vec![1, 3, 4], vec![2, 4]],
            vec![vec![1], vec![2], vec![]],
        )
        .unwrap();
        assert_eq!(variable_order(&c, &td).facts(), &[2, 0, 1]);
    }

    #[test]
    fn larger_subtree_comes_first() {
        let mut b = CircuitBuilder::new();
        let xs: Vec<GateId> = (0..4).map(|f| b.input(f)).collect();
        let o = b.or(xs.clone());
        let c = b.finish(o, 4).unwrap();
        let td = TreeDecomposition::from_parts(
            vec![vec![4], vec![0, 4], vec![1, 2, 3, 4]],
            vec![vec![1, 2], vec![], vec![]],
        )
        .unwrap();
        assert_eq!(variable_order(&c, &td).facts(), &[1, 2, 3, 0]);
    }

    #[test]
    fn threshold_two_on_four_facts_has_eleven_models() {
        let lc = lineage(&threshold_two(), &unary(4), false);
        let o = compile_to_obdd(&lc.circuit, &lc.decomposition).unwrap();
        assert_eq!(o.model_count(), 11u32.into());
        assert_equivalent(&lc.circuit, &o);
        let pi = ProbabilityValuation::half(4);
        assert_eq!(o.probability(&pi).unwrap(), ratio(11, 16));
    }

    #[test]
    fn or_of_two_facts() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let g = b.or(vec![x, y]);
        let c = b.finish(g, 2).unwrap();
        let o = compile_to_obdd(&c, &TreeDecomposition::single(vec![0, 1, 2])).unwrap();
        assert_eq!(o.probability(&ProbabilityValuation::half(2)).unwrap(), ratio(3, 4));
    }

    #[test]
    fn strategies_build_the_same_diagram() {
        let inst = generate_instance(&Family::line(9)).unwrap();
        for q in [qp(), crate::query::parse_query("R(x,y) & R(y,z)").unwrap()] {
            let lc = lineage(&q, &inst, true);
            let brute = compile_to_obdd_with(&lc.circuit, &lc.decomposition, EquivalenceStrategy::BruteForce).unwrap();
            let diff =
                compile_to_obdd_with(&lc.circuit, &lc.decomposition, EquivalenceStrategy::DifferenceCircuit).unwrap();
            assert_eq!(brute, diff);
            assert_equivalent(&lc.circuit, &brute);
            brute.check_canonical(16).unwrap();
            let pi = ProbabilityValuation::half(inst.len());
            assert_eq!(brute.probability(&pi).unwrap(), brute_force_circuit_probability(&lc.circuit, &pi).unwrap());
        }
    }

    #[test]
    fn tree_decomposition_inputs() {
        let inst = generate_instance(&Family::Tree { nodes: 10, seed: 5 }).unwrap();
        let lc = lineage(&crate::query::parse_query("R(x,y) & R(y,z)").unwrap(), &inst, false);
        let o = compile_to_obdd(&lc.circuit, &lc.decomposition).unwrap();
        assert_equivalent(&lc.circuit, &o);
        o.check_canonical(16).unwrap();
    }

    #[test]
    fn non_path_is_rejected() {
        let inst = generate_instance(&Family::Tree { nodes: 8, seed: 1 }).unwrap();
        let lc = lineage(&crate::query::parse_query("R(x,y) & R(y,z)").unwrap(), &inst, false);
        if !lc.decomposition.is_path() {
            assert_eq!(
                compile_to_obdd_pathwidth(&lc.circuit, &lc.decomposition),
                Err(ObddError::NotAPath)
            );
        }
    }
}
