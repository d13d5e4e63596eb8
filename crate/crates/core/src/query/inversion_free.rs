//! Hierarchical, inversion-free query expressions.
//!
//! An expression is a tree of atoms, conjunctions, disjunctions and
//! existential quantifiers, together with a total order on the positions of
//! every relation. It is hierarchical when every quantified variable occurs in
//! all atoms in the scope of its quantifier, and inversion-free when, for every
//! atom, position `i` before position `j` in the relation's order implies that
//! the variable at `j` is quantified inside the scope of the variable at `i`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{parse::check_arities, CqNeq, QueryError, UcqNeq};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expr {
    Atom { relation: String, vars: Vec<String> },
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Exists { var: String, body: Box<Expr> },
}

impl Expr {
    pub fn atom(relation: &str, vars: &[&str]) -> Expr {
        Expr::Atom {
            relation: relation.to_string(),
            vars: vars.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn exists(var: &str, body: Expr) -> Expr {
        Expr::Exists {
            var: var.to_string(),
            body: Box::new(body),
        }
    }

    fn render(&self) -> String {
        match self {
            Expr::Atom { relation, vars } => format!("{relation}({})", vars.join(",")),
            Expr::And(xs) => {
                let parts: Vec<String> = xs.iter().map(Expr::render).collect();
                format!("({})", parts.join(" & "))
            }
            Expr::Or(xs) => {
                let parts: Vec<String> = xs.iter().map(Expr::render).collect();
                format!("({})", parts.join(" | "))
            }
            Expr::Exists { var, body } => format!("E{var}.{}", body.render()),
        }
    }

    fn atoms<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Atom { .. } => out.push(self),
            Expr::And(xs) | Expr::Or(xs) => xs.iter().for_each(|x| x.atoms(out)),
            Expr::Exists { body, .. } => body.atoms(out),
        }
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Expression plus 1-based position orders; relations without an order use
/// the identity order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InversionFreeExpression {
    pub expr: Expr,
    #[serde(default)]
    pub orders: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedExpression {
    pub expr: Expr,
    /// Complete position orders (1-based) for every relation of the expression.
    pub orders: BTreeMap<String, Vec<usize>>,
    /// Ordered free variables of every subexpression, in preorder; variables
    /// are listed from the outermost quantifier inwards.
    pub ofv: Vec<Vec<String>>,
    pub arities: BTreeMap<String, usize>,
}

impl InversionFreeExpression {
    pub fn new(expr: Expr) -> Self {
        InversionFreeExpression {
            expr,
            orders: BTreeMap::new(),
        }
    }

    pub fn with_order(mut self, relation: &str, order: &[usize]) -> Self {
        self.orders.insert(relation.to_string(), order.to_vec());
        self
    }

    pub fn validate(&self) -> Result<ValidatedExpression, QueryError> {
        let mut atoms = Vec::new();
        self.expr.atoms(&mut atoms);
        let mut arities: BTreeMap<String, usize> = BTreeMap::new();
        for a in &atoms {
            if let Expr::Atom { relation, vars } = a {
                if *arities.entry(relation.clone()).or_insert(vars.len()) != vars.len() {
                    return Err(QueryError::ArityConflict(relation.clone()));
                }
            }
        }
        let mut orders = BTreeMap::new();
        for (rel, &arity) in &arities {
            let order = match self.orders.get(rel) {
                Some(o) => {
                    let mut sorted = o.clone();
                    sorted.sort_unstable();
                    if sorted != (1..=arity).collect::<Vec<_>>() {
                        return Err(QueryError::MalformedOrder(format!(
                            "order {o:?} for `{rel}` is not a permutation of 1..={arity}"
                        )));
                    }
                    o.clone()
                }
                None => (1..=arity).collect(),
            };
            orders.insert(rel.clone(), order);
        }
        for rel in self.orders.keys() {
            if !arities.contains_key(rel) {
                return Err(QueryError::MalformedOrder(format!("`{rel}` does not occur")));
            }
        }

        let mut ofv = Vec::new();
        let mut scope: Vec<(String, usize)> = Vec::new();
        let mut counter = 0;
        check(&self.expr, &mut scope, &mut counter, &orders, &mut ofv)?;
        Ok(ValidatedExpression {
            expr: self.expr.clone(),
            orders,
            ofv,
            arities,
        })
    }
}

/// Binder ids for the variables currently in scope, innermost last.
fn binder(scope: &[(String, usize)], var: &str) -> Option<(usize, usize)> {
    scope
        .iter()
        .enumerate()
        .rev()
        .find(|(_, (v, _))| v == var)
        .map(|(depth, (_, id))| (depth, *id))
}

fn check(
    e: &Expr,
    scope: &mut Vec<(String, usize)>,
    counter: &mut usize,
    orders: &BTreeMap<String, Vec<usize>>,
    ofv: &mut Vec<Vec<String>>,
) -> Result<Vec<(usize, String)>, QueryError> {
    let slot = ofv.len();
    ofv.push(Vec::new());
    let mut free: Vec<(usize, String)> = match e {
        Expr::Atom { relation, vars } => {
            let mut out = Vec::new();
            for v in vars {
                let (depth, _) = binder(scope, v).ok_or_else(|| QueryError::UnboundVariable(v.clone()))?;
                out.push((depth, v.clone()));
            }
            let order = &orders[relation];
            for (i, &p) in order.iter().enumerate() {
                for &q in &order[i + 1..] {
                    let (dp, _) = binder(scope, &vars[p - 1]).expect("bound above");
                    let (dq, _) = binder(scope, &vars[q - 1]).expect("bound above");
                    if vars[p - 1] != vars[q - 1] && dq <= dp {
                        return Err(QueryError::OrderInconsistency {
                            relation: relation.clone(),
                            first: p,
                            second: q,
                        });
                    }
                }
            }
            out
        }
        Expr::And(xs) | Expr::Or(xs) => {
            let mut out = Vec::new();
            for x in xs {
                out.extend(check(x, scope, counter, orders, ofv)?);
            }
            out
        }
        Expr::Exists { var, body } => {
            let mut atoms = Vec::new();
            body.atoms(&mut atoms);
            for a in atoms {
                if let Expr::Atom { vars, .. } = a {
                    if !vars.contains(var) {
                        return Err(QueryError::NotHierarchical {
                            var: var.clone(),
                            atom: a.render(),
                        });
                    }
                }
            }
            *counter += 1;
            scope.push((var.clone(), *counter));
            let depth = scope.len() - 1;
            let inner = check(body, scope, counter, orders, ofv)?;
            scope.pop();
            inner.into_iter().filter(|(d, _)| *d != depth).collect()
        }
    };
    free.sort();
    free.dedup();
    ofv[slot] = free.iter().map(|(_, v)| v.clone()).collect();
    Ok(free)
}

impl ValidatedExpression {
    /// Equivalent union of conjunctive queries, by distributing conjunction
    /// over disjunction. Quantified variables are renamed apart when a name is
    /// bound twice.
    pub fn to_ucq(&self) -> UcqNeq {
        let mut used: BTreeMap<String, usize> = BTreeMap::new();
        let mut env: Vec<(String, String)> = Vec::new();
        let conjunctions = dnf(&self.expr, &mut env, &mut used);
        let disjuncts = conjunctions
            .into_iter()
            .map(|atoms| {
                let owned: Vec<(String, Vec<&str>)> = atoms
                    .iter()
                    .map(|(r, vs)| (r.clone(), vs.iter().map(String::as_str).collect()))
                    .collect();
                let refs: Vec<(&str, &[&str])> = owned.iter().map(|(r, v)| (r.as_str(), v.as_slice())).collect();
                let mut cq = CqNeq::new(&refs, &[]).expect("no disequalities");
                cq.atoms.dedup();
                cq
            })
            .collect();
        let q = UcqNeq { disjuncts };
        check_arities(&q).expect("arities checked during validation");
        q
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.arities.iter().map(|(r, a)| (r.as_str(), *a))
    }
}

type Conj = Vec<(String, Vec<String>)>;

fn dnf(e: &Expr, env: &mut Vec<(String, String)>, used: &mut BTreeMap<String, usize>) -> Vec<Conj> {
    match e {
        Expr::Atom { relation, vars } => {
            let vs = vars
                .iter()
                .map(|v| {
                    env.iter()
                        .rev()
                        .find(|(orig, _)| orig == v)
                        .map_or_else(|| v.clone(), |(_, new)| new.clone())
                })
                .collect();
            vec![vec![(relation.clone(), vs)]]
        }
        Expr::Or(xs) => xs.iter().flat_map(|x| dnf(x, env, used)).collect(),
        Expr::And(xs) => {
            let mut acc: Vec<Conj> = vec![Vec::new()];
            for x in xs {
                let part = dnf(x, env, used);
                let mut next = Vec::new();
                for a in &acc {
                    for b in &part {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
        Expr::Exists { var, body } => {
            let count = used.entry(var.clone()).or_insert(0);
            *count += 1;
            let name = if *count == 1 { var.clone() } else { format!("{var}{count}") };
            env.push((var.clone(), name));
            let out = dnf(body, env, used);
            env.pop();
            out
        }
    }
}
