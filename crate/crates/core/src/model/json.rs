use std::collections::BTreeMap;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{Instance, ModelError, ProbabilityValuation, Signature};

/// Wire form of an instance:
/// `{"signature":[["R",2]], "facts":[["R","a","b"]], "probabilities":{"0":"1/2"}}`.
///
/// `order` optionally declares a total order on the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub signature: Vec<(String, usize)>,
    pub facts: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<ProbabilityJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
}

/// Fact index (as a decimal string) to `"p/q"` rational string.
pub type ProbabilityJson = BTreeMap<String, String>;

impl InstanceJson {
    pub fn to_instance(&self) -> Result<Instance, ModelError> {
        let signature = Signature::new(self.signature.iter().map(|(n, a)| (n.clone(), *a)))?;
        let mut inst = Instance::new(signature);
        for fact in &self.facts {
            let (rel, args) = fact
                .split_first()
                .ok_or_else(|| ModelError::UnknownRelation(String::new()))?;
            inst.add_fact(rel, args)?;
        }
        if let Some(order) = &self.order {
            inst.set_order(order)?;
        }
        Ok(inst)
    }

    /// Parses the instance and its probabilities. Facts missing from the
    /// probability map are an error; an absent map yields `None`.
    pub fn to_probabilistic(&self) -> Result<(Instance, Option<ProbabilityValuation>), ModelError> {
        let inst = self.to_instance()?;
        let probs = match &self.probabilities {
            None => None,
            Some(map) => Some(parse_probabilities(map, inst.len())?),
        };
        Ok((inst, probs))
    }

    pub fn from_instance(inst: &Instance, probs: Option<&ProbabilityValuation>) -> Self {
        let signature = inst
            .signature()
            .relations()
            .map(|(_, r)| (r.name.clone(), r.arity))
            .collect();
        let facts = inst
            .facts()
            .iter()
            .map(|f| {
                std::iter::once(inst.signature().name(f.relation).to_string())
                    .chain(f.args.iter().map(|a| inst.element_name(*a).to_string()))
                    .collect()
            })
            .collect();
        let order = inst.order().map(|o| {
            o.iter()
                .map(|e| inst.element_name(*e).to_string())
                .collect()
        });
        InstanceJson {
            signature,
            facts,
            probabilities: probs.map(probabilities_to_json),
            order,
        }
    }
}

pub fn parse_probabilities(
    map: &ProbabilityJson,
    fact_count: usize,
) -> Result<ProbabilityValuation, ModelError> {
    let mut probs: Vec<Option<BigRational>> = vec![None; fact_count];
    for (key, value) in map {
        let idx: usize = key
            .parse()
            .map_err(|_| ModelError::InvalidProbability(format!("bad fact index `{key}`")))?;
        if idx >= fact_count {
            return Err(ModelError::InvalidProbability(format!(
                "fact index {idx} out of range"
            )));
        }
        let p = BigRational::from_str(value.trim())
            .map_err(|_| ModelError::InvalidProbability(format!("bad rational `{value}`")))?;
        probs[idx] = Some(p);
    }
    let probs = probs
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| ModelError::InvalidProbability(format!("fact {i} has no probability")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    ProbabilityValuation::new(probs)
}

pub fn probabilities_to_json(probs: &ProbabilityValuation) -> ProbabilityJson {
    probs
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, p)| (i.to_string(), p.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_instance, ModelError};

    fn raw(facts: &[&[&str]]) -> InstanceJson {
        InstanceJson {
            signature: vec![("R".into(), 2), ("E".into(), 2)],
            facts: facts
                .iter()
                .map(|f| f.iter().map(|s| s.to_string()).collect())
                .collect(),
            probabilities: None,
            order: None,
        }
    }

    #[test]
    fn minimal_instance_is_valid() {
        assert!(validate_instance(&raw(&[&["R", "a", "b"]])).is_ok());
    }

    #[test]
    fn duplicate_fact_rejected() {
        let err = validate_instance(&raw(&[&["R", "a", "b"], &["R", "a", "b"]])).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateFact(_)));
    }

    #[test]
    fn unknown_relation_and_arity() {
        assert!(matches!(
            validate_instance(&raw(&[&["Q", "a"]])),
            Err(ModelError::UnknownRelation(_))
        ));
        assert!(matches!(
            validate_instance(&raw(&[&["R", "a"]])),
            Err(ModelError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn self_loop_violates_graph_axioms() {
        let inst = raw(&[&["E", "a", "a"]]).to_instance().unwrap();
        assert!(matches!(
            inst.validate_as_graph(),
            Err(ModelError::GraphAxiomViolation(_))
        ));
        let sym = raw(&[&["E", "a", "b"], &["E", "b", "a"]]).to_instance().unwrap();
        assert!(sym.validate_as_graph().is_ok());
        let asym = raw(&[&["E", "a", "b"]]).to_instance().unwrap();
        assert!(asym.validate_as_graph().is_err());
    }

    #[test]
    fn json_round_trip_with_probabilities() {
        let text = r#"{"signature":[["R",2]],"facts":[["R","a","b"],["R","b","c"]],
                       "probabilities":{"0":"1/2","1":"2/3"}}"#;
        let parsed: InstanceJson = serde_json::from_str(text).unwrap();
        let (inst, probs) = parsed.to_probabilistic().unwrap();
        let probs = probs.unwrap();
        assert_eq!(probs.as_slice()[1].to_string(), "2/3");
        let back = InstanceJson::from_instance(&inst, Some(&probs));
        assert_eq!(back, parsed);
    }

    #[test]
    fn probabilities_out_of_range_rejected() {
        let mut r = raw(&[&["R", "a", "b"]]);
        r.probabilities = Some([("0".to_string(), "3/2".to_string())].into());
        assert!(matches!(
            r.to_probabilistic(),
            Err(ModelError::InvalidProbability(_))
        ));
    }
}
