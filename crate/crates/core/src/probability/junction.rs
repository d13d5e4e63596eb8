//! Sum-product message passing over a circuit decomposition.
//!
//! Every gate is a variable; its factor forces the gate's value from its
//! inputs, and input gates carry a weight per value. Tables are sparse: only
//! rows of nonzero weight are kept.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::circuit::{Circuit, CircuitDecomposition, Gate};

pub trait Semiring: Clone {
    fn nil() -> Self;
    fn unit() -> Self;
    fn plus(&mut self, other: &Self);
    fn times(&self, other: &Self) -> Self;
    fn is_nil(&self) -> bool;
}

impl Semiring for BigRational {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn plus(&mut self, other: &Self) {
        *self += other;
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Semiring for bool {
    fn nil() -> Self {
        false
    }
    fn unit() -> Self {
        true
    }
    fn plus(&mut self, other: &Self) {
        *self |= other;
    }
    fn times(&self, other: &Self) -> Self {
        *self && *other
    }
    fn is_nil(&self) -> bool {
        !*self
    }
}

const UNSET: u8 = 2;

/// Total weight of the assignments that are consistent with every gate and
/// set the output to true. `cd` must hold every gate together with its inputs
/// in some bag. Fails with the offending row count when a table exceeds
/// `row_cap`.
pub fn sum_product<S: Semiring>(
    c: &Circuit,
    cd: &CircuitDecomposition,
    weight: impl Fn(usize, bool) -> S,
    row_cap: usize,
) -> Result<S, usize> {
    let occ = cd.occurrences(c.size());
    let depth = cd.depths();
    let mut home: Vec<Vec<usize>> = vec![Vec::new(); cd.len()];
    let mut is_home = vec![usize::MAX; c.size()];
    for (g, gate) in c.gates().iter().enumerate() {
        let n = occ[g]
            .iter()
            .copied()
            .filter(|&n| gate.inputs().iter().all(|x| cd.bag(n).binary_search(x).is_ok()))
            .max_by_key(|&n| (depth[n], std::cmp::Reverse(n)))
            .expect("decomposition covers every gate family");
        home[n].push(g);
        is_home[g] = n;
    }
    let out_home = is_home[c.output()];

    let mut messages: Vec<Option<HashMap<Vec<u8>, S>>> = vec![None; cd.len()];
    let mut order = cd.preorder();
    order.reverse();
    let mut total = S::nil();
    for n in order {
        let bag = cd.bag(n);
        let pos: HashMap<usize, usize> = bag.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let mut assigned = vec![false; bag.len()];
        let mut rows: Vec<(Vec<u8>, S)> = vec![(vec![UNSET; bag.len()], S::unit())];
        for &child in &cd.node(n).children {
            let msg = messages[child].take().expect("children first");
            let sep: Vec<usize> = cd.bag(child).iter().filter_map(|g| pos.get(g).copied()).collect();
            let shared: Vec<usize> = (0..sep.len()).filter(|&k| assigned[sep[k]]).collect();
            let mut index: HashMap<Vec<u8>, Vec<(&Vec<u8>, &S)>> = HashMap::new();
            for (key, w) in &msg {
                index.entry(shared.iter().map(|&k| key[k]).collect()).or_default().push((key, w));
            }
            let mut next = Vec::new();
            for (row, w) in &rows {
                let probe: Vec<u8> = shared.iter().map(|&k| row[sep[k]]).collect();
                if let Some(matches) = index.get(&probe) {
                    for (key, mw) in matches {
                        let mut r = row.clone();
                        for (k, &p) in sep.iter().enumerate() {
                            r[p] = key[k];
                        }
                        next.push((r, w.times(mw)));
                    }
                }
            }
            if next.len() > row_cap {
                return Err(next.len());
            }
            rows = next;
            for &p in &sep {
                assigned[p] = true;
            }
        }
        for (i, &g) in bag.iter().enumerate() {
            let owned = is_home[g] == n;
            let gate = c.gate(g);
            let mut next = Vec::with_capacity(rows.len());
            for (mut row, w) in rows {
                let forced = if owned {
                    match gate {
                        Gate::Input(_) => None,
                        Gate::Const(b) => Some(*b),
                        Gate::Not(x) => Some(row[pos[x]] == 0),
                        Gate::And(xs) => Some(xs.iter().all(|x| row[pos[x]] == 1)),
                        Gate::Or(xs) => Some(xs.iter().any(|x| row[pos[x]] == 1)),
                    }
                } else {
                    None
                };
                let values: &[bool] = match (row[i], forced) {
                    (UNSET, Some(true)) => &[true],
                    (UNSET, Some(false)) => &[false],
                    (UNSET, None) => &[false, true],
                    (v, Some(b)) if (v == 1) != b => &[],
                    (1, _) => &[true],
                    _ => &[false],
                };
                for (k, &v) in values.iter().enumerate() {
                    let w = match (owned, gate) {
                        (true, Gate::Input(f)) => w.times(&weight(*f, v)),
                        _ => w.clone(),
                    };
                    if w.is_nil() || (owned && g == c.output() && n == out_home && !v) {
                        continue;
                    }
                    if k + 1 == values.len() {
                        row[i] = u8::from(v);
                        next.push((std::mem::take(&mut row), w));
                    } else {
                        let mut r = row.clone();
                        r[i] = u8::from(v);
                        next.push((r, w));
                    }
                }
            }
            if next.len() > row_cap {
                return Err(next.len());
            }
            rows = next;
        }
        match cd.node(n).parent {
            Some(p) => {
                let parent_bag = cd.bag(p);
                let keep: Vec<usize> = (0..bag.len()).filter(|&i| parent_bag.binary_search(&bag[i]).is_ok()).collect();
                let mut msg: HashMap<Vec<u8>, S> = HashMap::new();
                for (row, w) in rows {
                    let key: Vec<u8> = keep.iter().map(|&i| row[i]).collect();
                    msg.entry(key).or_insert_with(S::nil).plus(&w);
                }
                msg.retain(|_, w| !w.is_nil());
                messages[n] = Some(msg);
            }
            None => {
                for (_, w) in rows {
                    total.plus(&w);
                }
            }
        }
    }
    Ok(total)
}
