use serde::Serialize;

use super::{InducedModel, ModelError, Orientation};
use crate::spectral;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A1Report {
    pub holds: bool,
    pub q_plus: Vec<f64>,
    pub q_minus: Vec<f64>,
    pub sup_q: f64,
    pub sum_q_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A2Report {
    pub holds: bool,
    pub beta_used: f64,
    pub sup_beta_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A3Report {
    pub holds: bool,
    pub m_plus: Vec<f64>,
    pub m_minus: Vec<f64>,
    pub sup_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A4Report {
    /// Every catalog multiplier law is free of mass accumulating at `0+`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KestenReport {
    /// `|Q|` bounded and `|M|` bounded away from 0 and infinity.
    pub bounds_hold: bool,
    /// `log|M|` is not supported on any lattice `delta Z`.
    pub lattice_free: bool,
    /// `Lambda` is negative somewhere and positive somewhere on `(0, inf)`.
    pub sign_change: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub alpha: f64,
    pub a1: A1Report,
    pub a2: A2Report,
    pub a3: A3Report,
    pub a4: A4Report,
    pub kesten: KestenReport,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.a1.holds && self.a2.holds && self.a3.holds && self.a4.holds
    }
}

/// Checks the standing assumptions at `alpha`, with `beta = alpha + 1` for (A2).
pub fn check_assumptions(model: &InducedModel, alpha: f64) -> Result<AssumptionReport, ModelError> {
    check_assumptions_with(model, alpha, alpha + 1.0)
}

pub fn check_assumptions_with(
    model: &InducedModel,
    alpha: f64,
    beta: f64,
) -> Result<AssumptionReport, ModelError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(ModelError::BadExponent(alpha));
    }
    if !(beta > alpha) || !beta.is_finite() {
        return Err(ModelError::BadExponent(beta));
    }

    let (q_plus, q_minus) = model.tail_weights(alpha);
    let sup_q = q_plus.iter().chain(&q_minus).copied().fold(0.0, f64::max);
    let sum_q_plus: f64 = q_plus.iter().sum();
    let a1 = A1Report {
        holds: sup_q.is_finite() && sum_q_plus > 0.0,
        q_plus,
        q_minus,
        sup_q,
        sum_q_plus,
    };

    let sup_beta_moment = model
        .m_vector(beta, Orientation::Both)
        .into_iter()
        .fold(0.0, f64::max);
    let a2 = A2Report {
        holds: sup_beta_moment.is_finite(),
        beta_used: beta,
        sup_beta_moment,
    };

    let m_plus = model.m_vector(alpha, Orientation::Plus);
    let m_minus = model.m_vector(alpha, Orientation::Minus);
    let sup_m = m_plus
        .iter()
        .zip(&m_minus)
        .map(|(a, b)| a + b)
        .fold(0.0, f64::max);
    let a3 = A3Report {
        holds: sup_m < 1.0,
        m_plus,
        m_minus,
        sup_m,
    };

    let kesten = KestenReport {
        // every catalog multiplier is bounded away from 0 and infinity
        bounds_hold: model.laws().iter().all(|l| l.q_is_bounded()),
        lattice_free: !is_lattice(model),
        sign_change: spectral::lambda_changes_sign(model).unwrap_or(false),
    };

    Ok(AssumptionReport {
        alpha,
        a1,
        a2,
        a3,
        a4: A4Report { holds: true },
        kesten,
    })
}

/// Largest denominator tried when testing two log-magnitudes for commensurability.
const MAX_DENOMINATOR: i64 = 1000;

/// Whether the attainable values of `log|M|`, pooled over all states, lie in
/// a common lattice `delta Z`.
///
/// Continuous magnitudes are never lattice. Finite supports are lattice iff
/// every nonzero value is a rational multiple of the first one.
pub fn is_lattice(model: &InducedModel) -> bool {
    let mut values = Vec::new();
    for law in model.laws() {
        match law.m_law.log_magnitude_support() {
            Some(v) => values.extend(v),
            None => return false,
        }
    }
    let nonzero: Vec<f64> = values.into_iter().filter(|v| v.abs() > 1e-15).collect();
    let Some(&base) = nonzero.first() else {
        return true;
    };
    nonzero.iter().all(|&v| is_rational(v / base))
}

/// Best rational approximation with denominator at most `MAX_DENOMINATOR`,
/// accepted when it matches to 1e-9 relative.
fn is_rational(x: f64) -> bool {
    let target = x.abs();
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut rest = target;
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e12 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > MAX_DENOMINATOR {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let approx = h1 as f64 / k1 as f64;
        if (approx - target).abs() <= 1e-9 * target.max(1.0) {
            return true;
        }
        let frac = rest - rest.floor();
        if frac < 1e-15 {
            break;
        }
        rest = 1.0 / frac;
    }
    false
}
