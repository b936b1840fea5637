use nalgebra::DMatrix;

use super::SimError;
use crate::model::{ChainSpec, CoefficientLaw, InducedModel};

/// Conditional law of the next symbol given the previous `order` symbols.
///
/// Row `w` is indexed by the word `(x_1, ..., x_k)` read as a base-`d`
/// number with `x_1` most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderKernel {
    pub alphabet: Vec<String>,
    pub order: usize,
    pub rows: Vec<Vec<f64>>,
}

impl OrderKernel {
    pub fn word_index(&self, word: &[usize]) -> usize {
        let d = self.alphabet.len();
        word.iter().fold(0, |acc, &x| acc * d + x)
    }

    pub fn word(&self, mut index: usize) -> Vec<usize> {
        let d = self.alphabet.len();
        let mut w = vec![0; self.order];
        for slot in w.iter_mut().rev() {
            *slot = index % d;
            index /= d;
        }
        w
    }
}

/// Markov chain on words of length `order` together with the projection to
/// the last symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedModel {
    pub base_alphabet: Vec<String>,
    pub order: usize,
    pub lifted: InducedModel,
    /// `projection[w]` is the last symbol of word-state `w`.
    pub projection: Vec<usize>,
}

/// Builds the `d^k`-state chain `(x_1..x_k) -> (x_2..x_k, y)` with coefficient
/// law of the last symbol.
pub fn lift_order_k(
    kernel: &OrderKernel,
    laws: &[CoefficientLaw],
) -> Result<LiftedModel, SimError> {
    let d = kernel.alphabet.len();
    let k = kernel.order;
    if d == 0 || k == 0 {
        return Err(SimError::InvalidArgument(
            "alphabet and order must be nonempty".into(),
        ));
    }
    if laws.len() != d {
        return Err(SimError::InvalidArgument(format!(
            "{} laws for {d} symbols",
            laws.len()
        )));
    }
    let n = d
        .checked_pow(k as u32)
        .filter(|&n| n <= 10_000)
        .ok_or_else(|| SimError::InvalidArgument(format!("{d}^{k} word states is too many")))?;
    if kernel.rows.len() != n || kernel.rows.iter().any(|r| r.len() != d) {
        return Err(SimError::InvalidArgument(format!(
            "kernel must have {n} rows of length {d}"
        )));
    }
    let name = |w: &[usize]| {
        w.iter()
            .map(|&x| kernel.alphabet[x].as_str())
            .collect::<Vec<_>>()
            .join("|")
    };
    let mut p = DMatrix::zeros(n, n);
    for (wi, row) in kernel.rows.iter().enumerate() {
        let word = kernel.word(wi);
        for (y, &prob) in row.iter().enumerate() {
            if !(prob > 0.0) {
                return Err(SimError::NotCChain(format!(
                    "P({} | {})",
                    kernel.alphabet[y],
                    name(&word)
                )));
            }
            let mut next = word[1..].to_vec();
            next.push(y);
            p[(wi, kernel.word_index(&next))] = prob;
        }
    }
    let states: Vec<String> = (0..n).map(|i| name(&kernel.word(i))).collect();
    let projection: Vec<usize> = (0..n).map(|i| kernel.word(i)[k - 1]).collect();
    let chain = ChainSpec::new(states, p)?;
    let lifted_laws = projection.iter().map(|&s| laws[s]).collect();
    Ok(LiftedModel {
        base_alphabet: kernel.alphabet.clone(),
        order: k,
        lifted: InducedModel::new(chain, lifted_laws)?,
        projection,
    })
}
