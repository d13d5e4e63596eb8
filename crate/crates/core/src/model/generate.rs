//! Deterministic instance families.
//!
//! The `Random` family draws from a ChaCha8 stream seeded with the given
//! 64-bit seed: relations are visited in declaration order, and for each
//! relation every tuple over `v0..v{m-1}` is visited in lexicographic order and
//! kept iff the next uniform draw in `[0,1)` is below the relation's density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Instance, ModelError, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// `R(a_i, a_{i+1})`
    Forward,
    /// `R(a_{i+1}, a_i)`
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineStep {
    pub relation: String,
    pub direction: Direction,
}

impl LineStep {
    pub fn forward(relation: &str) -> Self {
        LineStep {
            relation: relation.into(),
            direction: Direction::Forward,
        }
    }

    pub fn backward(relation: &str) -> Self {
        LineStep {
            relation: relation.into(),
            direction: Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// Elements `a1..a{k+1}` with one binary fact per step.
    Line { steps: Vec<LineStep> },
    /// `side × side` grid with `E` facts pointing right and down.
    Grid { side: usize },
    /// Random recursive tree on `nodes` elements with `E(parent, child)` facts.
    Tree { nodes: usize, seed: u64 },
    /// Every `R(l_i, r_j)` for `i < left`, `j < right`.
    CompleteBipartite { left: usize, right: usize },
    Random {
        elements: usize,
        relations: Vec<(String, usize, f64)>,
        seed: u64,
    },
}

impl Family {
    /// Line on `n` elements whose `n - 1` facts are all forward `R`.
    pub fn line(n: usize) -> Self {
        Family::Line {
            steps: vec![LineStep::forward("R"); n.saturating_sub(1)],
        }
    }
}

pub fn generate_instance(family: &Family) -> Result<Instance, ModelError> {
    match family {
        Family::Line { steps } => {
            let mut sig = Signature::default();
            for step in steps {
                if sig.lookup(&step.relation).is_none() {
                    sig.add(step.relation.clone(), 2)?;
                }
            }
            let mut inst = Instance::new(sig);
            for (i, step) in steps.iter().enumerate() {
                let a = format!("a{}", i + 1);
                let b = format!("a{}", i + 2);
                match step.direction {
                    Direction::Forward => inst.add_fact(&step.relation, &[a, b])?,
                    Direction::Backward => inst.add_fact(&step.relation, &[b, a])?,
                };
            }
            Ok(inst)
        }
        Family::Grid { side } => {
            if *side == 0 {
                return Err(ModelError::InvalidParams("grid side must be positive".into()));
            }
            let mut inst = Instance::new(Signature::new([("E", 2)])?);
            let name = |i: usize, j: usize| format!("g{i}_{j}");
            for i in 0..*side {
                for j in 0..*side {
                    if j + 1 < *side {
                        inst.add_fact("E", &[name(i, j), name(i, j + 1)])?;
                    }
                    if i + 1 < *side {
                        inst.add_fact("E", &[name(i, j), name(i + 1, j)])?;
                    }
                }
            }
            Ok(inst)
        }
        Family::Tree { nodes, seed } => {
            if *nodes < 2 {
                return Err(ModelError::InvalidParams("tree needs at least 2 nodes".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut inst = Instance::new(Signature::new([("E", 2)])?);
            for child in 1..*nodes {
                let parent = rng.gen_range(0..child);
                inst.add_fact("E", &[format!("t{parent}"), format!("t{child}")])?;
            }
            Ok(inst)
        }
        Family::CompleteBipartite { left, right } => {
            if *left == 0 || *right == 0 {
                return Err(ModelError::InvalidParams("both sides must be nonempty".into()));
            }
            let mut inst = Instance::new(Signature::new([("R", 2)])?);
            for i in 0..*left {
                for j in 0..*right {
                    inst.add_fact("R", &[format!("l{i}"), format!("r{j}")])?;
                }
            }
            Ok(inst)
        }
        Family::Random {
            elements,
            relations,
            seed,
        } => {
            if *elements == 0 {
                return Err(ModelError::InvalidParams("random family needs elements".into()));
            }
            for (name, _, density) in relations {
                if !(0.0..=1.0).contains(density) {
                    return Err(ModelError::InvalidParams(format!(
                        "density of `{name}` must lie in [0,1]"
                    )));
                }
            }
            let sig = Signature::new(relations.iter().map(|(n, a, _)| (n.clone(), *a)))?;
            let mut inst = Instance::new(sig);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for (name, arity, density) in relations {
                let total = elements.checked_pow(*arity as u32).ok_or_else(|| {
                    ModelError::InvalidParams(format!("too many tuples for `{name}`"))
                })?;
                for code in 0..total {
                    if rng.gen::<f64>() < *density {
                        // base-`elements` digits of `code`, most significant first
                        let mut args = vec![String::new(); *arity];
                        let mut rest = code;
                        for slot in args.iter_mut().rev() {
                            *slot = format!("v{}", rest % elements);
                            rest /= elements;
                        }
                        inst.add_fact(name, &args)?;
                    }
                }
            }
            Ok(inst)
        }
    }
}
