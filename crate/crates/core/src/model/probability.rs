use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{FactId, Instance, ModelError};

/// Exact rational probability for every fact of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbabilityValuation {
    probs: Vec<BigRational>,
}

impl ProbabilityValuation {
    pub fn new(probs: Vec<BigRational>) -> Result<Self, ModelError> {
        for (i, p) in probs.iter().enumerate() {
            if p < &BigRational::zero() || p > &BigRational::one() {
                return Err(ModelError::InvalidProbability(format!(
                    "fact {i} has probability {p} outside [0,1]"
                )));
            }
        }
        Ok(ProbabilityValuation { probs })
    }

    pub fn uniform(n: usize, p: BigRational) -> Result<Self, ModelError> {
        Self::new(vec![p; n])
    }

    pub fn half(n: usize) -> Self {
        Self::uniform(n, ratio(1, 2)).expect("1/2 is a probability")
    }

    pub fn certain(n: usize) -> Self {
        Self::uniform(n, BigRational::one()).expect("1 is a probability")
    }

    /// Checks that the valuation covers exactly the facts of `inst`.
    pub fn check_covers(&self, inst: &Instance) -> Result<(), ModelError> {
        if self.probs.len() != inst.len() {
            return Err(ModelError::InvalidProbability(format!(
                "valuation has {} entries, instance has {} facts",
                self.probs.len(),
                inst.len()
            )));
        }
        Ok(())
    }

    pub fn get(&self, fact: FactId) -> Option<&BigRational> {
        self.probs.get(fact.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn set(&mut self, fact: FactId, p: BigRational) -> Result<(), ModelError> {
        if p < BigRational::zero() || p > BigRational::one() {
            return Err(ModelError::InvalidProbability(format!("{p} outside [0,1]")));
        }
        self.probs[fact.0] = p;
        Ok(())
    }
}

/// `num/den` as a [`BigRational`].
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
