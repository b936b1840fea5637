use nalgebra::DMatrix;
use rand::Rng;

use crate::model::{CoefficientLaw, InducedModel};
use crate::spectral::{backward_matrix, SpectralError};

/// Cumulative tables for fast categorical draws from `pi`, `P` and `H`.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    laws: Vec<CoefficientLaw>,
    initial: Vec<f64>,
    forward: Vec<Vec<f64>>,
    backward: Vec<Vec<f64>>,
}

/// Cumulative sums with the last positive entry (and everything after it) set to 1.
fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = weights.iter().rposition(|&w| w > 0.0) {
        for c in &mut out[last..] {
            *c = 1.0;
        }
    }
    out
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| cumulative(&m.row(i).iter().copied().collect::<Vec<_>>()))
        .collect()
}

fn pick<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

impl CompiledModel {
    pub fn new(model: &InducedModel) -> Result<Self, SpectralError> {
        Ok(Self {
            laws: model.laws().to_vec(),
            initial: cumulative(model.chain().stationary()),
            forward: rows(model.chain().transition()),
            backward: rows(&backward_matrix(model.chain())?),
        })
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        pick(&self.initial, rng)
    }

    pub fn step_forward<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        pick(&self.forward[state], rng)
    }

    pub fn step_backward<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        pick(&self.backward[state], rng)
    }

    pub fn coefficients<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> (f64, f64) {
        self.laws[state].sample_pair(rng)
    }
}
