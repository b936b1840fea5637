//! State space, hidden chain and per-state coefficient laws.

mod assumptions;
mod chain;
mod file;
mod law;

pub use assumptions::{
    check_assumptions, check_assumptions_with, is_lattice, A1Report, A2Report, A3Report, A4Report,
    AssumptionReport, KestenReport,
};
pub use chain::{
    balance_residual, is_irreducible, stationary_distribution, validate_stochastic, ChainSpec,
    BALANCE_TOL, ROW_SUM_TOL,
};
pub use file::ModelFile;
pub use law::{
    log_uniform_moment, pareto_quantile, CoefficientLaw, CoreLaw, Coupling, MLaw, Orientation,
    QLaw, QTail, Sign,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("bad chain: {0}")]
    BadChain(String),
    #[error("exponent must be positive, got {0}")]
    BadExponent(f64),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("malformed model file at {path}: {message}")]
    Parse { path: String, message: String },
}

impl ModelError {
    /// JSON path the error refers to, when it came from a model file.
    pub fn path(&self) -> Option<&str> {
        match self {
            ModelError::Invalid { path, .. } | ModelError::Parse { path, .. } => Some(path),
            _ => None,
        }
    }
}

/// Relative tolerance used when matching a Pareto index against an exponent.
const EXPONENT_MATCH_TOL: f64 = 1e-9;

/// A chain plus one coefficient law per state.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedModel {
    chain: ChainSpec,
    laws: Vec<CoefficientLaw>,
    alpha_hint: Option<f64>,
}

impl InducedModel {
    pub fn new(chain: ChainSpec, laws: Vec<CoefficientLaw>) -> Result<Self, ModelError> {
        if laws.len() != chain.len() {
            return Err(ModelError::Invalid {
                path: "laws".into(),
                message: format!("{} laws for {} states", laws.len(), chain.len()),
            });
        }
        for (i, law) in laws.iter().enumerate() {
            law.validate()
                .map_err(|(field, message)| ModelError::Invalid {
                    path: format!("laws.{}.{field}", chain.states()[i]),
                    message,
                })?;
        }
        Ok(Self {
            chain,
            laws,
            alpha_hint: None,
        })
    }

    /// i.i.d. coefficients: a single-state chain.
    pub fn iid(law: CoefficientLaw) -> Result<Self, ModelError> {
        Self::new(ChainSpec::single("0"), vec![law])
    }

    pub fn with_alpha_hint(mut self, alpha: Option<f64>) -> Result<Self, ModelError> {
        if let Some(a) = alpha {
            if !(a > 0.0) || !a.is_finite() {
                return Err(ModelError::BadExponent(a));
            }
        }
        self.alpha_hint = alpha;
        Ok(self)
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn laws(&self) -> &[CoefficientLaw] {
        &self.laws
    }

    pub fn law(&self, state: usize) -> &CoefficientLaw {
        &self.laws[state]
    }

    pub fn alpha_hint(&self) -> Option<f64> {
        self.alpha_hint
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    /// `(m_i^{(orientation)})_i` at exponent `beta`.
    pub fn m_vector(&self, beta: f64, orientation: Orientation) -> Vec<f64> {
        self.laws
            .iter()
            .map(|l| l.m_moment(beta, orientation))
            .collect()
    }

    /// Tail-constant vectors `(q^{(+1)}, q^{(-1)})` of `Q` at exponent `alpha`.
    ///
    /// A Pareto index above `alpha` contributes zero; an index below `alpha`
    /// makes the normalised tail diverge and yields `+inf`.
    pub fn tail_weights(&self, alpha: f64) -> (Vec<f64>, Vec<f64>) {
        let mut plus = Vec::with_capacity(self.len());
        let mut minus = Vec::with_capacity(self.len());
        for law in &self.laws {
            let tail = law.q_tail();
            let (p, m) = if tail.is_bounded() || tail.alpha0 > alpha * (1.0 + EXPONENT_MATCH_TOL) {
                (0.0, 0.0)
            } else if tail.alpha0 < alpha * (1.0 - EXPONENT_MATCH_TOL) {
                (
                    if tail.q_plus > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    },
                    if tail.q_minus > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    },
                )
            } else {
                (tail.q_plus, tail.q_minus)
            };
            plus.push(p);
            minus.push(m);
        }
        (plus, minus)
    }

    /// Smallest Pareto index among the `Q` laws, `+inf` if every `Q` is bounded.
    pub fn q_tail_index(&self) -> f64 {
        self.laws
            .iter()
            .map(|l| l.q_tail().alpha0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Top Lyapunov exponent of the multiplier, `sum_i pi_i E log|M_i|`.
    pub fn lyapunov_exponent(&self) -> f64 {
        self.chain
            .stationary()
            .iter()
            .zip(&self.laws)
            .map(|(p, l)| p * l.m_law.mean_log_abs())
            .sum()
    }

    /// Whether `M` is almost surely positive in every state.
    pub fn multipliers_positive(&self) -> bool {
        self.laws
            .iter()
            .all(|l| l.m_moment(0.0, Orientation::Minus) == 0.0)
    }

    /// Parses and validates a JSON model document.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        ModelFile::parse(text)?.into_model()
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile::from_model(self)
    }
}

/// `q_tail_params` of a single law.
pub fn q_tail_params(law: &CoefficientLaw) -> QTail {
    law.q_tail()
}

/// `m_moment` of a single law.
pub fn m_moment(law: &CoefficientLaw, beta: f64, orientation: Orientation) -> f64 {
    law.m_moment(beta, orientation)
}

/// `sample_pair` of a single law.
pub fn sample_pair<R: rand::Rng + ?Sized>(law: &CoefficientLaw, rng: &mut R) -> (f64, f64) {
    law.sample_pair(rng)
}
