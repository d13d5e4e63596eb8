//! Rewriting queries and instances of arity at most 2 into ranked form.
//!
//! Every binary fact `R(a,b)` is kept as `R(a,b)` when `a < b`, becomes
//! `R_rev(b,a)` when `a > b` and `R_diag(a)` when `a = b`. Each binary atom
//! of the query is split into the same three cases; disjuncts whose induced
//! variable order is cyclic are dropped since they cannot match a ranked
//! instance. Cases for relations the rewritten instance does not use are
//! skipped, so ranked inputs are left untouched.

use std::collections::BTreeSet;

use super::{Atom, CqNeq, QueryError, UcqNeq};
use crate::model::{FactId, Instance, Signature};

pub struct Ranked {
    pub query: UcqNeq,
    pub instance: Instance,
    /// Original fact of every rewritten fact.
    pub back: Vec<FactId>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Case {
    Inc,
    Dec,
    Diag,
}

fn rev(r: &str) -> String {
    format!("{r}_rev")
}

fn diag(r: &str) -> String {
    format!("{r}_diag")
}

/// Ranks `q` and `inst` with respect to the declared domain order of `inst`
/// (order of first occurrence when none is declared).
pub fn rank(q: &UcqNeq, inst: &Instance) -> Result<Ranked, QueryError> {
    let sig = inst.signature();
    for (_, r) in sig.relations() {
        if r.arity > 2 {
            return Err(QueryError::UnsupportedArity {
                relation: r.name.clone(),
                arity: r.arity,
            });
        }
    }
    for (name, arity) in q.relations() {
        if arity > 2 {
            return Err(QueryError::UnsupportedArity { relation: name, arity });
        }
    }
    let mut position = vec![0; inst.domain_size()];
    match inst.order() {
        Some(order) => {
            for (i, e) in order.iter().enumerate() {
                position[e.0] = i;
            }
        }
        None => {
            for (i, p) in position.iter_mut().enumerate() {
                *p = i;
            }
        }
    }

    let mut rewritten: Vec<(String, Vec<&str>)> = Vec::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    for f in inst.facts() {
        let name = sig.name(f.relation);
        let a: Vec<&str> = f.args.iter().map(|&e| inst.element_name(e)).collect();
        let (rel, args) = match f.args.as_slice() {
            [x, y] if position[x.0] < position[y.0] => (name.to_string(), a),
            [x, y] if position[x.0] > position[y.0] => (rev(name), vec![a[1], a[0]]),
            [_, _] => (diag(name), vec![a[0]]),
            _ => (name.to_string(), a),
        };
        used.insert(rel.clone());
        rewritten.push((rel, args));
    }

    let mut new_sig = Signature::default();
    for (_, r) in sig.relations() {
        new_sig
            .add(r.name.clone(), r.arity)
            .map_err(|_| QueryError::UnrankableQuery)?;
    }
    for (_, r) in sig.relations() {
        if r.arity == 2 {
            for (extra, arity) in [(rev(&r.name), 2), (diag(&r.name), 1)] {
                if used.contains(&extra) && new_sig.lookup(&extra).is_none() {
                    new_sig.add(extra, arity).map_err(|_| QueryError::UnrankableQuery)?;
                }
            }
        }
    }
    let mut out = Instance::new(new_sig.clone());
    for (rel, args) in &rewritten {
        out.add_fact(rel, args).expect("rewritten facts are distinct");
    }
    let order: Vec<&str> = match inst.order() {
        Some(o) => o.iter().map(|&e| inst.element_name(e)).collect(),
        None => inst.elements().map(|(_, n)| n).collect(),
    };
    let order: Vec<&str> = order.into_iter().filter(|e| out.element_id(e).is_some()).collect();
    out.set_order(&order).expect("same domain");

    let has = |r: &str| used.contains(r);
    let mut disjuncts: Vec<CqNeq> = Vec::new();
    for cq in &q.disjuncts {
        let options: Vec<Vec<Case>> = cq
            .atoms
            .iter()
            .map(|a| match a.vars.as_slice() {
                [x, y] if x == y => vec![Case::Diag],
                [_, _] => [
                    (Case::Inc, has(&a.relation)),
                    (Case::Dec, has(&rev(&a.relation))),
                    (Case::Diag, has(&diag(&a.relation))),
                ]
                .into_iter()
                .filter(|(_, ok)| *ok)
                .map(|(c, _)| c)
                .collect::<Vec<_>>(),
                _ => vec![Case::Inc],
            })
            .map(|o| if o.is_empty() { vec![Case::Inc] } else { o })
            .collect();
        let mut choice = vec![0; options.len()];
        loop {
            let cases: Vec<Case> = choice.iter().zip(&options).map(|(&c, o)| o[c]).collect();
            if let Some(d) = rewrite_disjunct(cq, &cases) {
                if !disjuncts.contains(&d) {
                    disjuncts.push(d);
                }
            }
            // odometer over the case choices
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < options[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
    }
    if disjuncts.is_empty() {
        return Err(QueryError::UnrankableQuery);
    }
    Ok(Ranked {
        query: UcqNeq { disjuncts },
        instance: out,
        back: (0..inst.len()).map(FactId).collect(),
    })
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    parent[x] = r;
    r
}

fn rewrite_disjunct(cq: &CqNeq, cases: &[Case]) -> Option<CqNeq> {
    let n = cq.variables.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for (a, &c) in cq.atoms.iter().zip(cases) {
        if let ([x, y], Case::Diag) = (a.vars.as_slice(), c) {
            let (rx, ry) = (find(&mut parent, *x), find(&mut parent, *y));
            parent[rx.max(ry)] = rx.min(ry);
        }
    }
    let class: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    if cq.diseqs.iter().any(|&(x, y)| class[x] == class[y]) {
        return None;
    }
    let mut less: Vec<(usize, usize)> = Vec::new();
    let mut atoms: Vec<(String, Vec<usize>)> = Vec::new();
    for (a, &c) in cq.atoms.iter().zip(cases) {
        match (a.vars.as_slice(), c) {
            ([x, y], Case::Inc) => {
                less.push((class[*x], class[*y]));
                atoms.push((a.relation.clone(), vec![class[*x], class[*y]]));
            }
            ([x, y], Case::Dec) => {
                less.push((class[*y], class[*x]));
                atoms.push((rev(&a.relation), vec![class[*y], class[*x]]));
            }
            ([x, _], Case::Diag) => atoms.push((diag(&a.relation), vec![class[*x]])),
            (vs, _) => atoms.push((a.relation.clone(), vs.iter().map(|&v| class[v]).collect())),
        }
    }
    if has_cycle(n, &less) {
        return None;
    }
    // renumber surviving classes in order of first use
    let mut names: Vec<usize> = Vec::new();
    let idx = |c: usize, names: &mut Vec<usize>| match names.iter().position(|&x| x == c) {
        Some(i) => i,
        None => {
            names.push(c);
            names.len() - 1
        }
    };
    let mut out_atoms = Vec::new();
    for (rel, vs) in atoms {
        let vars = vs.iter().map(|&v| idx(v, &mut names)).collect();
        let atom = Atom { relation: rel, vars };
        if !out_atoms.contains(&atom) {
            out_atoms.push(atom);
        }
    }
    let diseqs = cq
        .diseqs
        .iter()
        .map(|&(x, y)| (idx(class[x], &mut names), idx(class[y], &mut names)))
        .collect();
    Some(CqNeq {
        variables: names.iter().map(|&c| cq.variables[c].clone()).collect(),
        atoms: out_atoms,
        diseqs,
    })
}

fn has_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    // Kahn's algorithm
    let mut indeg = vec![0; n];
    for &(_, b) in edges {
        indeg[b] += 1;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut removed = 0;
    while let Some(v) = stack.pop() {
        removed += 1;
        for &(a, b) in edges {
            if a == v {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    stack.push(b);
                }
            }
        }
    }
    removed < n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, Family, FactSet};
    use crate::query::{evaluate_on, parse_query};

    fn lineage_agrees(q: &UcqNeq, inst: &Instance) {
        let r = rank(q, inst).unwrap();
        let n = inst.len();
        for mask in 0..1u64 << n {
            let orig = FactSet::from_mask(mask, n);
            let mut moved = FactSet::empty(n);
            for (i, b) in r.back.iter().enumerate() {
                if orig.contains(b.0) {
                    moved.insert(i);
                }
            }
            assert_eq!(
                evaluate_on(q, inst, &orig),
                evaluate_on(&r.query, &r.instance, &moved),
                "{q} on {inst}, mask {mask:b}"
            );
        }
    }

    #[test]
    fn ranked_input_is_a_fixpoint() {
        let inst = generate_instance(&Family::line(4)).unwrap();
        let q = parse_query("R(x,y) & R(y,z)").unwrap();
        let r = rank(&q, &inst).unwrap();
        assert_eq!(r.query, q);
        assert_eq!(r.instance.to_string(), inst.to_string());
    }

    #[test]
    fn decreasing_fact_moves_to_reverse_relation() {
        let mut inst =
            Instance::from_facts(Signature::new([("R", 2)]).unwrap(), [("R", vec!["b", "a"])])
                .unwrap();
        inst.set_order(&["a", "b"]).unwrap();
        let q = parse_query("R(x,y)").unwrap();
        let r = rank(&q, &inst).unwrap();
        assert_eq!(r.instance.to_string(), "{R_rev(a,b)}");
        assert_eq!(r.query.to_string(), "R_rev(y,x)");
        lineage_agrees(&q, &inst);
    }

    #[test]
    fn self_loop_atom_becomes_diagonal() {
        let q = parse_query("R(x,x) & S(x)").unwrap();
        for seed in 0..5 {
            let inst = generate_instance(&Family::Random {
                elements: 3,
                relations: vec![("R".into(), 2, 0.3), ("S".into(), 1, 0.6)],
                seed,
            })
            .unwrap();
            if !inst.facts().iter().any(|f| f.args.len() == 2 && f.args[0] == f.args[1]) {
                continue;
            }
            let r = rank(&q, &inst).unwrap();
            assert_eq!(r.query.to_string(), "R_diag(x) & S(x)");
            lineage_agrees(&q, &inst);
        }
    }

    #[test]
    fn random_instances_keep_their_lineage() {
        let queries = [
            "R(x,y) & R(y,z)",
            "R(x,y) & R(y,x)",
            "R(x,y) & S(y) & x!=y",
            "R(x,y) & R(z,y) & x!=z | S(x) & R(x,x)",
        ];
        for seed in 0..6 {
            let inst = generate_instance(&Family::Random {
                elements: 4,
                relations: vec![("R".into(), 2, 0.3), ("S".into(), 1, 0.5)],
                seed,
            })
            .unwrap();
            if inst.len() > 10 {
                continue;
            }
            for text in queries {
                let q = parse_query(text).unwrap();
                if rank(&q, &inst).is_ok() {
                    lineage_agrees(&q, &inst);
                }
            }
        }
    }

    #[test]
    fn higher_arity_is_unsupported() {
        let inst =
            Instance::from_facts(Signature::new([("T", 3)]).unwrap(), [("T", vec!["a", "b", "c"])])
                .unwrap();
        let q = parse_query("T(x,y,z)").unwrap();
        assert!(matches!(rank(&q, &inst), Err(QueryError::UnsupportedArity { arity: 3, .. })));
    }

    #[test]
    fn cyclic_only_query_is_unrankable() {
        let inst = generate_instance(&Family::line(3)).unwrap();
        let q = parse_query("R(x,y) & R(y,x)").unwrap();
        assert_eq!(rank(&q, &inst).err(), Some(QueryError::UnrankableQuery));
    }
}
