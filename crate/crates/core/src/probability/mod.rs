//! Exact query probability on tuple-independent instances.
//!
//! Four engines that must agree exactly: enumeration of possible worlds,
//! message passing on a decomposed circuit, bottom-up evaluation of a d-DNNF,
//! and the OBDD pass in [`crate::obdd`].

mod junction;

pub use junction::{sum_product, Semiring};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{
    check_ddnnf, check_ddnnf_structure, with_fanin_two, Circuit, CircuitDecomposition, CircuitError, Gate,
    LineageCircuit,
};
use crate::model::{FactSet, Instance, ProbabilityValuation};
use crate::query::{evaluate_on, UcqNeq};

/// Default largest instance for possible-world enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 24;
/// Default largest circuit-decomposition width for message passing.
pub const DEFAULT_WIDTH_CAP: usize = 512;
const ROW_CAP: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProbabilityError {
    #[error("instance has {facts} facts, enumeration is limited to {limit}")]
    InstanceTooLarge { facts: usize, limit: usize },
    #[error("decomposition width {width} exceeds the cap {cap}")]
    WidthTooLarge { width: usize, cap: usize },
    #[error("circuit is not a d-DNNF: {0}")]
    NotDDnnf(String),
    #[error("no probability for fact {0}")]
    MissingProbability(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

fn prob(pi: &ProbabilityValuation, f: usize) -> Result<&BigRational, ProbabilityError> {
    pi.as_slice().get(f).ok_or(ProbabilityError::MissingProbability(f))
}

/// Weights of every valuation of `probs`, bit `i` of the index keeping fact
/// `i`.
fn weights(probs: &[BigRational]) -> Vec<BigRational> {
    let mut w = vec![BigRational::one()];
    for p in probs {
        let q = BigRational::one() - p;
        let mut next: Vec<BigRational> = w.iter().map(|x| x * &q).collect();
        next.extend(w.iter().map(|x| x * p));
        w = next;
    }
    w
}

/// Sum of the weights of the valuations `m` with `hit(m)`; the weight of `m`
/// is a product of a low and a high half, each tabulated once.
fn weighted_sum(probs: &[BigRational], hit: impl Fn(u64) -> bool + Sync) -> BigRational {
    let n = probs.len();
    let low_bits = n.min(12);
    let low = weights(&probs[..low_bits]);
    let high = weights(&probs[low_bits..]);
    (0..1u64 << n)
        .into_par_iter()
        .filter(|&m| hit(m))
        .map(|m| &low[(m & ((1 << low_bits) - 1)) as usize] * &high[(m >> low_bits) as usize])
        .reduce(BigRational::zero, |a, b| a + b)
}

/// Sum of the weights of the subinstances satisfying `q`.
pub fn brute_force_probability(
    q: &UcqNeq,
    inst: &Instance,
    pi: &ProbabilityValuation,
) -> Result<BigRational, ProbabilityError> {
    brute_force_probability_with_limit(q, inst, pi, BRUTE_FORCE_LIMIT)
}

pub fn brute_force_probability_with_limit(
    q: &UcqNeq,
    inst: &Instance,
    pi: &ProbabilityValuation,
    limit: usize,
) -> Result<BigRational, ProbabilityError> {
    let n = inst.len();
    if n > limit.min(63) {
        return Err(ProbabilityError::InstanceTooLarge { facts: n, limit });
    }
    if pi.len() < n {
        return Err(ProbabilityError::MissingProbability(pi.len()));
    }
    Ok(weighted_sum(&pi.as_slice()[..n], |m| evaluate_on(q, inst, &FactSet::from_mask(m, n))))
}

/// Enumerates the valuations of the circuit's facts.
pub fn brute_force_circuit_probability(
    c: &Circuit,
    pi: &ProbabilityValuation,
) -> Result<BigRational, ProbabilityError> {
    let n = c.fact_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(ProbabilityError::InstanceTooLarge {
            facts: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if pi.len() < n {
        return Err(ProbabilityError::MissingProbability(pi.len()));
    }
    let table = c.truth_table();
    Ok(weighted_sum(&pi.as_slice()[..n], |m| table[(m / 64) as usize] >> (m % 64) & 1 == 1))
}

/// Message passing over the circuit decomposition, after rewriting the
/// circuit to fan-in two.
pub fn circuit_probability(
    c: &Circuit,
    cd: &CircuitDecomposition,
    pi: &ProbabilityValuation,
) -> Result<BigRational, ProbabilityError> {
    circuit_probability_with_cap(c, cd, pi, DEFAULT_WIDTH_CAP)
}

pub fn circuit_probability_with_cap(
    c: &Circuit,
    cd: &CircuitDecomposition,
    pi: &ProbabilityValuation,
    width_cap: usize,
) -> Result<BigRational, ProbabilityError> {
    c.check_decomposition(cd)?;
    for (_, f) in c.input_gates() {
        prob(pi, f)?;
    }
    let (c2, cd2) = with_fanin_two(c, cd);
    let width = cd2.width();
    if width > width_cap {
        return Err(ProbabilityError::WidthTooLarge { width, cap: width_cap });
    }
    let one = BigRational::one();
    sum_product(
        &c2,
        &cd2,
        |f, v| {
            let p = &pi.as_slice()[f];
            if v {
                p.clone()
            } else {
                &one - p
            }
        },
        ROW_CAP,
    )
    .map_err(|_| ProbabilityError::WidthTooLarge { width, cap: width_cap })
}

/// One bottom-up pass: AND multiplies, OR adds, NOT complements.
pub fn ddnnf_probability(c: &Circuit, pi: &ProbabilityValuation) -> Result<BigRational, ProbabilityError> {
    let report = check_ddnnf(c)?;
    if !report.is_ddnnf() {
        let (g, why) = report.violation.unwrap_or((c.output(), "unknown".into()));
        return Err(ProbabilityError::NotDDnnf(format!("gate {g}: {why}")));
    }
    ddnnf_pass(c, pi)
}

/// As [`ddnnf_probability`] for a lineage circuit, whose determinism holds by
/// construction; only negation and decomposability are checked.
pub fn lineage_ddnnf_probability(
    lc: &LineageCircuit,
    pi: &ProbabilityValuation,
) -> Result<BigRational, ProbabilityError> {
    let report = check_ddnnf_structure(&lc.circuit);
    if let Some((g, why)) = report.violation {
        return Err(ProbabilityError::NotDDnnf(format!("gate {g}: {why}")));
    }
    ddnnf_pass(&lc.circuit, pi)
}

fn ddnnf_pass(c: &Circuit, pi: &ProbabilityValuation) -> Result<BigRational, ProbabilityError> {
    let mut val: Vec<BigRational> = Vec::with_capacity(c.size());
    for g in c.gates() {
        let v = match g {
            Gate::Input(f) => prob(pi, *f)?.clone(),
            Gate::Const(b) => {
                if *b {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
            Gate::Not(x) => BigRational::one() - &val[*x],
            Gate::And(xs) => xs.iter().fold(BigRational::one(), |a, &x| a * &val[x]),
            Gate::Or(xs) => xs.iter().fold(BigRational::zero(), |a, &x| a + &val[x]),
        };
        val.push(v);
    }
    Ok(val.swap_remove(c.output()))
}

/// Whether some valuation sets the output to true, by message passing.
pub fn circuit_satisfiable(c: &Circuit, cd: &CircuitDecomposition) -> Result<bool, ProbabilityError> {
    let (c2, cd2) = with_fanin_two(c, cd);
    let width = cd2.width();
    sum_product(&c2, &cd2, |_, _| true, ROW_CAP).map_err(|_| ProbabilityError::WidthTooLarge { width, cap: ROW_CAP })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::compile_query;
    use crate::circuit::{build_lineage_circuit, CircuitBuilder};
    use crate::decomposition::{decompose_treewidth, tree_encode, TreeDecomposition};
    use crate::fixtures::{qp, threshold_two};
    use crate::model::{generate_instance, ratio, Family, Signature};
    use crate::query::parse_query;

    fn unary(n: usize) -> Instance {
        let names: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
        Instance::from_facts(
            Signature::new([("R", 1)]).unwrap(),
            names.iter().map(|s| ("R", vec![s.as_str()])),
        )
        .unwrap()
    }

    fn lineage(q: &UcqNeq, inst: &Instance) -> LineageCircuit {
        let enc = tree_encode(inst, &decompose_treewidth(inst, None)).unwrap();
        build_lineage_circuit(&compile_query(q, enc.width()).unwrap(), &enc).unwrap()
    }

    #[test]
    fn exists_r_on_two_facts() {
        let p = brute_force_probability(&parse_query("R(x)").unwrap(), &unary(2), &ProbabilityValuation::half(2));
        assert_eq!(p.unwrap(), ratio(3, 4));
    }

    #[test]
    fn certain_valuation_is_evaluation() {
        let inst = generate_instance(&Family::line(4)).unwrap();
        for q in ["R(x,y) & R(y,z)", "R(x,x)"] {
            let q = parse_query(q).unwrap();
            let p = brute_force_probability(&q, &inst, &ProbabilityValuation::certain(4)).unwrap();
            let expected = if crate::query::evaluate(&q, &inst) { 1 } else { 0 };
            assert_eq!(p, ratio(expected, 1));
        }
    }

    #[test]
    fn qp_on_line_of_three() {
        let inst = generate_instance(&Family::line(3)).unwrap();
        let p = brute_force_probability(&qp(), &inst, &ProbabilityValuation::half(2)).unwrap();
        assert_eq!(p, ratio(1, 4));
    }

    #[test]
    fn brute_force_limit() {
        let inst = unary(5);
        let r = brute_force_probability_with_limit(&threshold_two(), &inst, &ProbabilityValuation::half(5), 4);
        assert_eq!(r, Err(ProbabilityError::InstanceTooLarge { facts: 5, limit: 4 }));
    }

    #[test]
    fn constant_true_circuit() {
        let mut b = CircuitBuilder::new();
        let t = b.constant(true);
        let c = b.finish(t, 0).unwrap();
        let td = TreeDecomposition::single(vec![0]);
        let pi = ProbabilityValuation::half(0);
        assert_eq!(circuit_probability(&c, &td, &pi).unwrap(), ratio(1, 1));
        assert_eq!(ddnnf_probability(&c, &pi).unwrap(), ratio(1, 1));
    }

    #[test]
    fn ddnnf_examples() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let c = b.finish(x, 1).unwrap();
        let pi = ProbabilityValuation::new(vec![ratio(1, 3)]).unwrap();
        assert_eq!(ddnnf_probability(&c, &pi).unwrap(), ratio(1, 3));

        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let ny = b.not(y);
        let a1 = b.and(vec![x, y]);
        let a2 = b.and(vec![x, ny]);
        let o = b.or(vec![a1, a2]);
        let c = b.finish(o, 2).unwrap();
        assert_eq!(ddnnf_probability(&c, &ProbabilityValuation::half(2)).unwrap(), ratio(1, 2));

        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let o = b.or(vec![x, y]);
        let c = b.finish(o, 2).unwrap();
        assert!(matches!(
            ddnnf_probability(&c, &ProbabilityValuation::half(2)),
            Err(ProbabilityError::NotDDnnf(_))
        ));
    }

    #[test]
    fn engines_agree_on_threshold_two() {
        let inst = unary(3);
        let pi = ProbabilityValuation::half(3);
        let lc = lineage(&threshold_two(), &inst);
        let mp = circuit_probability(&lc.circuit, &lc.decomposition, &pi).unwrap();
        assert_eq!(mp, ratio(1, 2));
        assert_eq!(lineage_ddnnf_probability(&lc, &pi).unwrap(), mp);
        assert_eq!(brute_force_circuit_probability(&lc.circuit, &pi).unwrap(), mp);
    }

    #[test]
    fn engines_agree_on_lines_with_skewed_probabilities() {
        let inst = generate_instance(&Family::line(7)).unwrap();
        let probs: Vec<BigRational> = (0..inst.len()).map(|i| ratio(i as i64 + 1, 9)).collect();
        let pi = ProbabilityValuation::new(probs).unwrap();
        for q in [qp(), parse_query("R(x,y) & R(y,z)").unwrap(), parse_query("R(x,y) & R(z,w) & x!=z").unwrap()] {
            let lc = lineage(&q, &inst);
            let bf = brute_force_probability(&q, &inst, &pi).unwrap();
            assert_eq!(circuit_probability(&lc.circuit, &lc.decomposition, &pi).unwrap(), bf, "{q}");
            assert_eq!(ddnnf_probability(&lc.circuit, &pi).unwrap(), bf, "{q}");
        }
    }

    #[test]
    fn width_cap_is_enforced() {
        let lc = lineage(&qp(), &generate_instance(&Family::line(5)).unwrap());
        let r = circuit_probability_with_cap(&lc.circuit, &lc.decomposition, &ProbabilityValuation::half(4), 1);
        assert!(matches!(r, Err(ProbabilityError::WidthTooLarge { cap: 1, .. })));
    }

    #[test]
    fn satisfiability_by_message_passing() {
        let lc = lineage(&qp(), &generate_instance(&Family::line(2)).unwrap());
        assert!(!circuit_satisfiable(&lc.circuit, &lc.decomposition).unwrap());
        let lc = lineage(&qp(), &generate_instance(&Family::line(3)).unwrap());
        assert!(circuit_satisfiable(&lc.circuit, &lc.decomposition).unwrap());
    }
}
