//! Unions of conjunctive queries with disequalities.
//!
//! Grammar:
//!
//! ```text
//! query    := disjunct ("|" disjunct)*
//! disjunct := literal ("&" literal)*
//! literal  := IDENT "(" IDENT ("," IDENT)* ")" | IDENT "!=" IDENT
//! ```
//!
//! Identifiers are `[A-Za-z_][A-Za-z0-9_]*`. Quoted strings and numbers are
//! constants, which are rejected.

mod eval;
mod inversion_free;
mod parse;
mod rank;

pub use eval::{
    connected, evaluate, evaluate_on, matches, minimal_matches, minimal_matches_with_limit, Match,
    DEFAULT_MATCH_LIMIT,
};
pub use inversion_free::{Expr, InversionFreeExpression, ValidatedExpression};
pub use parse::parse_query;
pub use rank::{rank, Ranked};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at byte {pos}: {message}")]
    SyntaxError { pos: usize, message: String },
    #[error("variable `{0}` occurs in a disequality but in no atom")]
    FreeDisequalityVariable(String),
    #[error("constant `{0}` is not allowed in queries")]
    ConstantNotAllowed(String),
    #[error("instance has {facts} facts, above the enumeration limit {limit}")]
    InstanceTooLarge { facts: usize, limit: usize },
    #[error("relation `{relation}` has arity {arity}; ranking supports arity at most 2")]
    UnsupportedArity { relation: String, arity: usize },
    #[error("no disjunct survives ranking")]
    UnrankableQuery,
    #[error("variable `{var}` does not occur in atom {atom} inside its scope")]
    NotHierarchical { var: String, atom: String },
    #[error("order on `{relation}` puts position {first} before {second} against quantifier nesting")]
    OrderInconsistency {
        relation: String,
        first: usize,
        second: usize,
    },
    #[error("variable `{0}` is not bound by any quantifier")]
    UnboundVariable(String),
    #[error("malformed position order: {0}")]
    MalformedOrder(String),
    #[error("relation `{0}` used with different arities")]
    ArityConflict(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub relation: String,
    /// Indices into the disjunct's variable list.
    pub vars: Vec<usize>,
}

/// A conjunctive query with disequalities, all variables existential.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CqNeq {
    pub variables: Vec<String>,
    pub atoms: Vec<Atom>,
    pub diseqs: Vec<(usize, usize)>,
}

impl CqNeq {
    /// Builds a disjunct from named atoms and disequalities.
    pub fn new(atoms: &[(&str, &[&str])], diseqs: &[(&str, &str)]) -> Result<Self, QueryError> {
        let mut cq = CqNeq {
            variables: Vec::new(),
            atoms: Vec::new(),
            diseqs: Vec::new(),
        };
        for (rel, args) in atoms {
            let vars = args.iter().map(|a| cq.var(a)).collect();
            cq.atoms.push(Atom {
                relation: rel.to_string(),
                vars,
            });
        }
        let in_atoms = cq.variables.len();
        for (a, b) in diseqs {
            let (x, y) = (cq.var(a), cq.var(b));
            if x >= in_atoms {
                return Err(QueryError::FreeDisequalityVariable(a.to_string()));
            }
            if y >= in_atoms {
                return Err(QueryError::FreeDisequalityVariable(b.to_string()));
            }
            cq.diseqs.push((x, y));
        }
        Ok(cq)
    }

    fn var(&mut self, name: &str) -> usize {
        match self.variables.iter().position(|v| v == name) {
            Some(i) => i,
            None => {
                self.variables.push(name.to_string());
                self.variables.len() - 1
            }
        }
    }

    /// Atoms sharing a variable are adjacent; disequalities are ignored.
    pub fn is_connected(&self) -> bool {
        let n = self.atoms.len();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..n {
                if !seen[b] && self.atoms[a].vars.iter().any(|v| self.atoms[b].vars.contains(v)) {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UcqNeq {
    pub disjuncts: Vec<CqNeq>,
}

impl UcqNeq {
    pub fn new(disjuncts: Vec<CqNeq>) -> Self {
        UcqNeq { disjuncts }
    }

    /// Total number of relational atoms over all disjuncts.
    pub fn size(&self) -> usize {
        self.disjuncts.iter().map(|d| d.atoms.len()).sum()
    }

    /// Relation names with their arities, in order of first use.
    pub fn relations(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for d in &self.disjuncts {
            for a in &d.atoms {
                if !out.iter().any(|(r, _)| *r == a.relation) {
                    out.push((a.relation.clone(), a.vars.len()));
                }
            }
        }
        out
    }

    pub fn has_disequalities(&self) -> bool {
        self.disjuncts.iter().any(|d| !d.diseqs.is_empty())
    }
}

impl fmt::Display for CqNeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| {
                let args: Vec<&str> = a.vars.iter().map(|&v| self.variables[v].as_str()).collect();
                format!("{}({})", a.relation, args.join(","))
            })
            .collect();
        for &(x, y) in &self.diseqs {
            parts.push(format!("{}!={}", self.variables[x], self.variables[y]));
        }
        write!(f, "{}", parts.join(" & "))
    }
}

impl fmt::Display for UcqNeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.disjuncts.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join(" | "))
    }
}

impl std::str::FromStr for UcqNeq {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_query(s)
    }
}
