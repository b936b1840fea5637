use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::chain::{matrix_from_rows, ChainSpec};
use super::{CoefficientLaw, InducedModel, ModelError};

/// On-disk model document.
///
/// ```json
/// {
///   "states": ["calm", "storm"],
///   "P": [[0.9, 0.1], [0.5, 0.5]],
///   "laws": {
///     "calm":  {"q_law": {"type": "constant", "value": 1.0},
///               "m_law": {"type": "log_uniform", "lo": 0.1, "hi": 1.5},
///               "coupling": {"type": "independent"}},
///     "storm": {"q_law": {"type": "constant", "value": 1.0},
///               "m_law": {"type": "two_point", "a": 2.0, "p": 0.4, "b": 0.5},
///               "coupling": {"type": "independent"}}
///   },
///   "alpha_hint": 1.2
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    pub laws: BTreeMap<String, CoefficientLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_hint: Option<f64>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            ModelError::Parse {
                path,
                message: err.into_inner().to_string(),
            }
        })
    }

    pub fn into_model(self) -> Result<InducedModel, ModelError> {
        let invalid = |path: String, message: String| ModelError::Invalid { path, message };
        if self.states.is_empty() {
            return Err(invalid(
                "states".into(),
                "at least one state is required".into(),
            ));
        }
        let mut seen = HashSet::new();
        for (i, s) in self.states.iter().enumerate() {
            if !seen.insert(s.as_str()) {
                return Err(invalid(
                    format!("states[{i}]"),
                    format!("duplicate state id {s:?}"),
                ));
            }
        }
        let d = self.states.len();
        if self.p.len() != d {
            return Err(invalid(
                "P".into(),
                format!("{} rows for {d} states", self.p.len()),
            ));
        }
        for (i, row) in self.p.iter().enumerate() {
            if row.len() != d {
                return Err(invalid(
                    format!("P[{i}]"),
                    format!("{} entries, expected {d}", row.len()),
                ));
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return Err(invalid(
                        format!("P[{i}][{j}]"),
                        format!("{x} is not a probability"),
                    ));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > super::ROW_SUM_TOL {
                return Err(invalid(
                    format!("P[{i}]"),
                    format!("row sums to {sum}, not 1"),
                ));
            }
        }
        let transition = matrix_from_rows(&self.p)?;
        let chain = match self.pi {
            Some(pi) => ChainSpec::with_stationary(self.states.clone(), transition, pi),
            None => ChainSpec::new(self.states.clone(), transition),
        }
        .map_err(|e| match e {
            ModelError::BadChain(m) => invalid("P".into(), m),
            other => other,
        })?;

        for key in self.laws.keys() {
            if chain.index_of(key).is_none() {
                return Err(invalid(
                    format!("laws.{key}"),
                    format!("unknown state id {key:?}"),
                ));
            }
        }
        let mut laws = Vec::with_capacity(d);
        for s in &self.states {
            match self.laws.get(s) {
                Some(law) => laws.push(*law),
                None => {
                    return Err(invalid(
                        format!("laws.{s}"),
                        "missing coefficient law".into(),
                    ))
                }
            }
        }
        if let Some(a) = self.alpha_hint {
            if !(a > 0.0) || !a.is_finite() {
                return Err(invalid(
                    "alpha_hint".into(),
                    format!("{a} is not a positive exponent"),
                ));
            }
        }
        InducedModel::new(chain, laws)?.with_alpha_hint(self.alpha_hint)
    }

    pub fn from_model(model: &InducedModel) -> Self {
        let chain = model.chain();
        let d = chain.len();
        let p = (0..d)
            .map(|i| (0..d).map(|j| chain.transition()[(i, j)]).collect())
            .collect();
        let laws = chain
            .states()
            .iter()
            .cloned()
            .zip(model.laws().iter().copied())
            .collect();
        Self {
            states: chain.states().to_vec(),
            p,
            pi: None,
            laws,
            alpha_hint: model.alpha_hint(),
        }
    }
}
