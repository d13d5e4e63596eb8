//! Checks for deterministic decomposable negation normal form.

use std::collections::HashMap;

use super::{fact_word, Circuit, CircuitError, Gate, GateId};

/// Largest number of input gates for which determinism is checked exhaustively.
pub const DETERMINISM_INPUT_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DdnnfReport {
    /// Every NOT gate reads an input gate.
    pub negation_on_inputs: bool,
    /// The inputs of every AND gate depend on disjoint sets of facts.
    pub decomposable: bool,
    /// The inputs of every OR gate are pairwise exclusive; `None` if unchecked.
    pub deterministic: Option<bool>,
    /// First offending gate with the violated condition.
    pub violation: Option<(GateId, String)>,
}

impl DdnnfReport {
    pub fn is_ddnnf(&self) -> bool {
        self.negation_on_inputs && self.decomposable && self.deterministic == Some(true)
    }

    fn fail(&mut self, g: GateId, why: &str) {
        if self.violation.is_none() {
            self.violation = Some((g, why.to_string()));
        }
    }
}

/// Negation placement and decomposability; determinism is left unchecked.
pub fn check_ddnnf_structure(c: &Circuit) -> DdnnfReport {
    let mut report = DdnnfReport {
        negation_on_inputs: true,
        decomposable: true,
        deterministic: None,
        violation: None,
    };
    let words = c.fact_count().div_ceil(64).max(1);
    let mut below: Vec<Vec<u64>> = Vec::with_capacity(c.size());
    for (i, g) in c.gates().iter().enumerate() {
        let mut set = vec![0u64; words];
        match g {
            Gate::Input(f) => set[f / 64] |= 1 << (f % 64),
            Gate::Const(_) => {}
            Gate::Not(x) => {
                if !matches!(c.gate(*x), Gate::Input(_)) {
                    report.negation_on_inputs = false;
                    report.fail(i, "negation above a non-input gate");
                }
                set.clone_from(&below[*x]);
            }
            Gate::And(xs) | Gate::Or(xs) => {
                let and = matches!(g, Gate::And(_));
                for &x in xs {
                    for (s, b) in set.iter_mut().zip(&below[x]) {
                        if and && *s & b != 0 && report.decomposable {
                            report.decomposable = false;
                            report.fail(i, "AND inputs share a fact");
                        }
                        *s |= b;
                    }
                }
            }
        }
        below.push(set);
    }
    report
}

/// Full check; determinism is decided by sweeping every valuation of the
/// input gates.
pub fn check_ddnnf(c: &Circuit) -> Result<DdnnfReport, CircuitError> {
    let inputs = c.input_gates();
    if inputs.len() > DETERMINISM_INPUT_LIMIT {
        return Err(CircuitError::TooManyInputsForDeterminismCheck(inputs.len()));
    }
    let mut report = check_ddnnf_structure(c);
    let local: HashMap<usize, usize> = inputs.iter().enumerate().map(|(k, &(_, f))| (f, k)).collect();
    let total = 1usize << inputs.len();
    let ors: Vec<(GateId, &[GateId])> = c
        .gates()
        .iter()
        .enumerate()
        .filter_map(|(i, g)| match g {
            Gate::Or(xs) if xs.len() > 1 => Some((i, xs.as_slice())),
            _ => None,
        })
        .collect();
    let mut bad: Option<GateId> = None;
    for w in 0..total.div_ceil(64) {
        let valid = if total < 64 { (1u64 << total) - 1 } else { !0 };
        let vals = c.evaluate_words(|f| fact_word(local[&f], w));
        for &(g, xs) in &ors {
            let mut seen = 0u64;
            for &x in xs {
                if seen & vals[x] & valid != 0 {
                    bad = Some(bad.map_or(g, |b| b.min(g)));
                }
                seen |= vals[x];
            }
        }
    }
    report.deterministic = Some(bad.is_none());
    if let Some(g) = bad {
        report.fail(g, "OR inputs are not exclusive");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;

    #[test]
    fn negation_above_and_fails() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let a = b.and(vec![x, y]);
        let n = b.not(a);
        let r = check_ddnnf(&b.finish(n, 2).unwrap()).unwrap();
        assert!(!r.negation_on_inputs);
        assert_eq!(r.violation.unwrap().0, n);
    }

    #[test]
    fn shared_fact_under_and_fails() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let o = b.or(vec![x, y]);
        let a = b.and(vec![x, o]);
        let r = check_ddnnf(&b.finish(a, 2).unwrap()).unwrap();
        assert!(!r.decomposable);
        assert!(!r.is_ddnnf());
    }

    #[test]
    fn exclusive_or_passes() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let ny = b.not(y);
        let a1 = b.and(vec![x, y]);
        let a2 = b.and(vec![x, ny]);
        let o = b.or(vec![a1, a2]);
        let r = check_ddnnf(&b.finish(o, 2).unwrap()).unwrap();
        assert!(r.is_ddnnf(), "{r:?}");
    }

    #[test]
    fn overlapping_or_fails() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let o = b.or(vec![x, y]);
        let r = check_ddnnf(&b.finish(o, 2).unwrap()).unwrap();
        assert_eq!(r.deterministic, Some(false));
    }

    #[test]
    fn too_many_inputs() {
        let mut b = CircuitBuilder::new();
        let xs: Vec<GateId> = (0..21).map(|f| b.input(f)).collect();
        let o = b.or(xs);
        let c = b.finish(o, 21).unwrap();
        assert_eq!(check_ddnnf(&c), Err(CircuitError::TooManyInputsForDeterminismCheck(21)));
        assert!(check_ddnnf_structure(&c).decomposable);
    }
}
