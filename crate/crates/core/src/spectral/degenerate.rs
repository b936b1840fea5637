use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::model::{Coupling, InducedModel};

/// Outcome of the degeneracy test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Degeneracy {
    pub is_degenerate: bool,
    /// Common value when `Gamma` is constant.
    pub c: Option<f64>,
    #[serde(rename = "Gamma")]
    pub gamma: Option<Vec<f64>>,
}

impl Degeneracy {
    fn no() -> Self {
        Self {
            is_degenerate: false,
            c: None,
            gamma: None,
        }
    }
}

/// How `Q_i + Gamma_i M_i` can be almost surely constant in one state.
enum StateForm {
    /// Constant for every `Gamma_i`, equal to `a + b Gamma_i`.
    Affine { a: f64, b: f64 },
    /// Constant only at `Gamma_i = at`, where it equals `value`.
    Pinned { at: f64, value: f64 },
}

fn state_form(model: &InducedModel, i: usize) -> Option<StateForm> {
    let law = model.law(i);
    let m_const = law.m_law.constant_value();
    match law.coupling {
        Coupling::DegenerateLine { c } => Some(match m_const {
            Some(m) => StateForm::Affine {
                a: c * (1.0 - m),
                b: m,
            },
            None => StateForm::Pinned { at: c, value: c },
        }),
        Coupling::Independent => {
            let q = law.q_law.constant_value()?;
            Some(match m_const {
                Some(m) => StateForm::Affine { a: q, b: m },
                None => StateForm::Pinned { at: 0.0, value: q },
            })
        }
    }
}

/// Looks for `Gamma` with `Q_i + Gamma(i) M_i = Gamma(j)` almost surely for
/// every transition `i -> j` of the chain.
pub fn detect_degenerate(model: &InducedModel) -> Degeneracy {
    let d = model.len();
    let mut forms = Vec::with_capacity(d);
    for i in 0..d {
        match state_form(model, i) {
            Some(f) => forms.push(f),
            None => return Degeneracy::no(),
        }
    }
    let p = model.chain().transition();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for (i, form) in forms.iter().enumerate() {
        if let StateForm::Pinned { at, .. } = *form {
            let mut row = vec![0.0; d];
            row[i] = 1.0;
            rows.push(row);
            rhs.push(at);
        }
        for j in (0..d).filter(|&j| p[(i, j)] > 0.0) {
            let mut row = vec![0.0; d];
            row[j] += 1.0;
            match *form {
                StateForm::Affine { a, b } => {
                    row[i] -= b;
                    rhs.push(a);
                }
                StateForm::Pinned { value, .. } => rhs.push(value),
            }
            rows.push(row);
        }
    }
    let a = DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]);
    let b = DVector::from_vec(rhs);
    let scale = b.amax().max(1.0);
    let svd = a.clone().svd(true, true);
    let Ok(gamma) = svd.solve(&b, 1e-12 * scale) else {
        return Degeneracy::no();
    };
    let residual = (&a * &gamma - &b).amax();
    if !(residual <= 1e-9 * scale) {
        return Degeneracy::no();
    }
    let gamma: Vec<f64> = gamma.iter().copied().collect();
    let first = gamma[0];
    let c = gamma
        .iter()
        .all(|g| (g - first).abs() <= 1e-9 * first.abs().max(1.0))
        .then_some(first);
    Degeneracy {
        is_degenerate: true,
        c,
        gamma: Some(gamma),
    }
}
