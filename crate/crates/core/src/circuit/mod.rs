//! Boolean lineage circuits over fact variables.
//!
//! Gates are stored in topological order: every gate appears after its inputs.

mod build;
mod ddnnf;
mod fanin;

pub use build::{build_lineage_circuit, LineageCircuit};
pub use ddnnf::{check_ddnnf, check_ddnnf_structure, DdnnfReport, DETERMINISM_INPUT_LIMIT};
pub use fanin::with_fanin_two;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::AutomatonError;
use crate::decomposition::{CoverViolation, DecompositionJson, TreeDecomposition};
use crate::model::FactSet;

pub type GateId = usize;

/// A tree decomposition whose vertices are gate ids.
pub type CircuitDecomposition = TreeDecomposition;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("automaton does not match the encoding: {0}")]
    AlphabetMismatch(String),
    #[error("valuation covers {given} facts, circuit reads fact {needed}")]
    MissingInput { given: usize, needed: usize },
    #[error("{0} inputs is too many for the exhaustive determinism check")]
    TooManyInputsForDeterminismCheck(usize),
    #[error("malformed circuit: {0}")]
    Malformed(String),
    #[error("invalid circuit decomposition: {0}")]
    InvalidDecomposition(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    Input(usize),
    Const(bool),
    Not(GateId),
    And(Vec<GateId>),
    Or(Vec<GateId>),
}

impl Gate {
    pub fn inputs(&self) -> &[GateId] {
        match self {
            Gate::Input(_) | Gate::Const(_) => &[],
            Gate::Not(g) => std::slice::from_ref(g),
            Gate::And(xs) | Gate::Or(xs) => xs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    gates: Vec<Gate>,
    names: Vec<String>,
    output: GateId,
    fact_count: usize,
}

/// Incremental construction of a circuit in topological order.
#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    gates: Vec<Gate>,
    names: Vec<String>,
    inputs: std::collections::HashMap<usize, GateId>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, gate: Gate, name: impl Into<String>) -> GateId {
        if let Gate::Input(f) = gate {
            if let Some(&g) = self.inputs.get(&f) {
                return g;
            }
            self.inputs.insert(f, self.gates.len());
        }
        self.gates.push(gate);
        self.names.push(name.into());
        self.gates.len() - 1
    }

    pub fn input(&mut self, fact: usize) -> GateId {
        self.add(Gate::Input(fact), format!("x{fact}"))
    }

    pub fn constant(&mut self, value: bool) -> GateId {
        self.add(Gate::Const(value), if value { "true" } else { "false" })
    }

    pub fn not(&mut self, g: GateId) -> GateId {
        self.add(Gate::Not(g), format!("not{g}"))
    }

    pub fn and(&mut self, xs: Vec<GateId>) -> GateId {
        let name = format!("and{}", self.gates.len());
        self.add(Gate::And(xs), name)
    }

    pub fn or(&mut self, xs: Vec<GateId>) -> GateId {
        let name = format!("or{}", self.gates.len());
        self.add(Gate::Or(xs), name)
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn finish(self, output: GateId, fact_count: usize) -> Result<Circuit, CircuitError> {
        Circuit::from_gates(self.gates, self.names, output, fact_count)
    }
}

impl Circuit {
    pub fn from_gates(
        gates: Vec<Gate>,
        names: Vec<String>,
        output: GateId,
        fact_count: usize,
    ) -> Result<Self, CircuitError> {
        if output >= gates.len() {
            return Err(CircuitError::Malformed("output gate out of range".into()));
        }
        if names.len() != gates.len() {
            return Err(CircuitError::Malformed("one name per gate".into()));
        }
        let mut seen = vec![false; fact_count];
        for (i, g) in gates.iter().enumerate() {
            if g.inputs().iter().any(|&x| x >= i) {
                return Err(CircuitError::Malformed(format!("gate {i} is not in topological order")));
            }
            match g {
                Gate::Input(f) if *f >= fact_count => {
                    return Err(CircuitError::Malformed(format!("gate {i} reads unknown fact {f}")));
                }
                Gate::Input(f) if std::mem::replace(&mut seen[*f], true) => {
                    return Err(CircuitError::Malformed(format!("fact {f} has two input gates")));
                }
                _ => {}
            }
        }
        Ok(Circuit {
            gates,
            names,
            output,
            fact_count,
        })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, g: GateId) -> &Gate {
        &self.gates[g]
    }

    pub fn name(&self, g: GateId) -> &str {
        &self.names[g]
    }

    pub fn output(&self) -> GateId {
        self.output
    }

    /// Number of facts of the underlying instance.
    pub fn fact_count(&self) -> usize {
        self.fact_count
    }

    /// Number of gates.
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn wire_count(&self) -> usize {
        self.gates.iter().map(|g| g.inputs().len()).sum()
    }

    /// Input gates with their facts, in gate order.
    pub fn input_gates(&self) -> Vec<(GateId, usize)> {
        self.gates
            .iter()
            .enumerate()
            .filter_map(|(i, g)| match g {
                Gate::Input(f) => Some((i, *f)),
                _ => None,
            })
            .collect()
    }

    pub fn evaluate(&self, valuation: &FactSet) -> Result<bool, CircuitError> {
        if let Some((_, f)) = self.input_gates().into_iter().find(|&(_, f)| f >= valuation.universe()) {
            return Err(CircuitError::MissingInput {
                given: valuation.universe(),
                needed: f,
            });
        }
        let mut val = vec![false; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            val[i] = match g {
                Gate::Input(f) => valuation.contains(*f),
                Gate::Const(b) => *b,
                Gate::Not(x) => !val[*x],
                Gate::And(xs) => xs.iter().all(|&x| val[x]),
                Gate::Or(xs) => xs.iter().any(|&x| val[x]),
            };
        }
        Ok(val[self.output])
    }

    /// Evaluates 64 valuations at once; `word(f)` gives the bits of fact `f`.
    pub fn evaluate_words(&self, word: impl Fn(usize) -> u64) -> Vec<u64> {
        let mut val = vec![0u64; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            val[i] = match g {
                Gate::Input(f) => word(*f),
                Gate::Const(b) => {
                    if *b {
                        !0
                    } else {
                        0
                    }
                }
                Gate::Not(x) => !val[*x],
                Gate::And(xs) => xs.iter().fold(!0, |acc, &x| acc & val[x]),
                Gate::Or(xs) => xs.iter().fold(0, |acc, &x| acc | val[x]),
            };
        }
        val
    }

    /// Truth table of the output over all valuations of facts `0..fact_count`
    /// (at most 24 facts); bit `m` is the value on the valuation with mask `m`.
    pub fn truth_table(&self) -> Vec<u64> {
        let n = self.fact_count;
        assert!(n <= 24, "truth tables are limited to 24 facts");
        let total = 1usize << n;
        let words = total.div_ceil(64);
        let mut out = vec![0u64; words];
        for (w, slot) in out.iter_mut().enumerate() {
            let vals = self.evaluate_words(|f| fact_word(f, w));
            *slot = vals[self.output];
        }
        if total < 64 {
            out[0] &= (1u64 << total) - 1;
        }
        out
    }

    /// Checks that `cd` is a decomposition of the circuit graph.
    pub fn check_decomposition(&self, cd: &CircuitDecomposition) -> Result<(), CircuitError> {
        let edges: Vec<[usize; 2]> = self
            .gates
            .iter()
            .enumerate()
            .flat_map(|(i, g)| g.inputs().iter().map(move |&x| [x, i]))
            .collect();
        let singles: Vec<[usize; 1]> = (0..self.gates.len()).map(|g| [g]).collect();
        cd.check_cover(
            self.gates.len(),
            edges.iter().map(|e| e.as_slice()).chain(singles.iter().map(|s| s.as_slice())),
        )
        .map_err(|v| {
            CircuitError::InvalidDecomposition(match v {
                CoverViolation::Edge(i) if i < edges.len() => {
                    format!("wire {} -> {} not covered", edges[i][0], edges[i][1])
                }
                CoverViolation::Edge(i) => format!("gate {} in no bag", i - edges.len()),
                CoverViolation::Disconnected(g) => format!("gate {g} has disconnected occurrences"),
                CoverViolation::UnknownVertex(g) => format!("unknown gate {g}"),
            })
        })
    }

    pub fn to_json(&self, cd: Option<&CircuitDecomposition>) -> CircuitJson {
        let gates = self
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let (kind, fact, value) = match g {
                    Gate::Input(f) => ("input", Some(*f), None),
                    Gate::Const(b) => ("const", None, Some(*b)),
                    Gate::Not(_) => ("not", None, None),
                    Gate::And(_) => ("and", None, None),
                    Gate::Or(_) => ("or", None, None),
                };
                GateJson {
                    id: i,
                    kind: kind.to_string(),
                    inputs: g.inputs().to_vec(),
                    fact,
                    value,
                    name: Some(self.names[i].clone()),
                }
            })
            .collect();
        CircuitJson {
            gates,
            output: self.output,
            facts: self.fact_count,
            decomposition: cd.map(|td| DecompositionJson::from_decomposition(td, |g| g.to_string())),
        }
    }

    pub fn from_json(j: &CircuitJson) -> Result<(Circuit, Option<CircuitDecomposition>), CircuitError> {
        let mut gates = Vec::with_capacity(j.gates.len());
        let mut names = Vec::with_capacity(j.gates.len());
        for (i, g) in j.gates.iter().enumerate() {
            if g.id != i {
                return Err(CircuitError::Malformed("gate ids must be 0..n in order".into()));
            }
            let need = |what: &str| CircuitError::Malformed(format!("gate {i}: {what}"));
            let gate = match g.kind.as_str() {
                "input" => Gate::Input(g.fact.ok_or_else(|| need("input without fact"))?),
                "const" => Gate::Const(g.value.ok_or_else(|| need("const without value"))?),
                "not" => match g.inputs.as_slice() {
                    [x] => Gate::Not(*x),
                    _ => return Err(need("not needs one input")),
                },
                "and" => Gate::And(g.inputs.clone()),
                "or" => Gate::Or(g.inputs.clone()),
                other => return Err(need(&format!("unknown kind `{other}`"))),
            };
            gates.push(gate);
            names.push(g.name.clone().unwrap_or_else(|| format!("g{i}")));
        }
        let c = Circuit::from_gates(gates, names, j.output, j.facts)?;
        let cd = match &j.decomposition {
            Some(d) => {
                let td = d
                    .to_decomposition(|s| s.parse().ok().filter(|&g: &usize| g < c.size()))
                    .map_err(|e| CircuitError::InvalidDecomposition(e.to_string()))?;
                c.check_decomposition(&td)?;
                Some(td)
            }
            None => None,
        };
        Ok((c, cd))
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph circuit {\n  rankdir=BT;\n");
        for (i, g) in self.gates.iter().enumerate() {
            let (label, shape) = match g {
                Gate::Input(f) => (format!("x{f}"), "box"),
                Gate::Const(b) => (if *b { "1".into() } else { "0".into() }, "box"),
                Gate::Not(_) => ("NOT".into(), "ellipse"),
                Gate::And(_) => ("AND".into(), "ellipse"),
                Gate::Or(_) => ("OR".into(), "ellipse"),
            };
            let extra = if i == self.output { ", peripheries=2" } else { "" };
            let _ = writeln!(
                out,
                "  g{i} [label=\"{label}\\n{}\", shape={shape}{extra}];",
                self.names[i].replace('"', "'")
            );
            for &x in g.inputs() {
                let _ = writeln!(out, "  g{x} -> g{i};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Bits of fact `f` in word `w` when valuations are enumerated by mask.
pub(crate) fn fact_word(f: usize, w: usize) -> u64 {
    const PATTERNS: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    if f < 6 {
        PATTERNS[f]
    } else if w >> (f - 6) & 1 == 1 {
        !0
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateJson {
    pub id: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitJson {
    pub gates: Vec<GateJson>,
    pub output: usize,
    pub facts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionJson>,
}
