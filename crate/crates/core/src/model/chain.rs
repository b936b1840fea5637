use nalgebra::{DMatrix, DVector};

use super::ModelError;

/// Tolerance on row sums of a transition matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Tolerance on the balance equation `pi P = pi`.
pub const BALANCE_TOL: f64 = 1e-10;

/// A finite irreducible Markov chain together with its stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    states: Vec<String>,
    transition: DMatrix<f64>,
    stationary: Vec<f64>,
}

impl ChainSpec {
    /// Builds a chain from a transition matrix and computes its stationary law.
    pub fn new(states: Vec<String>, transition: DMatrix<f64>) -> Result<Self, ModelError> {
        if states.len() != transition.nrows() {
            return Err(ModelError::BadChain(format!(
                "{} state ids for a {}x{} transition matrix",
                states.len(),
                transition.nrows(),
                transition.ncols()
            )));
        }
        let stationary = stationary_distribution(&transition)?;
        Ok(Self {
            states,
            transition,
            stationary,
        })
    }

    /// Builds a chain from row vectors.
    pub fn from_rows(states: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let transition = matrix_from_rows(rows)?;
        Self::new(states, transition)
    }

    /// Builds a chain with a caller-supplied stationary law, which is checked
    /// against the balance equation instead of being recomputed.
    pub fn with_stationary(
        states: Vec<String>,
        transition: DMatrix<f64>,
        stationary: Vec<f64>,
    ) -> Result<Self, ModelError> {
        validate_stochastic(&transition)?;
        if !is_irreducible(&transition) {
            return Err(ModelError::BadChain(
                "transition matrix is reducible".into(),
            ));
        }
        if states.len() != transition.nrows() || stationary.len() != transition.nrows() {
            return Err(ModelError::BadChain(format!(
                "{} states and stationary law of length {}, expected {}",
                states.len(),
                stationary.len(),
                transition.nrows()
            )));
        }
        if stationary.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(ModelError::BadChain(
                "stationary law must be strictly positive".into(),
            ));
        }
        let total: f64 = stationary.iter().sum();
        if (total - 1.0).abs() > BALANCE_TOL {
            return Err(ModelError::BadChain(format!(
                "stationary law sums to {total}"
            )));
        }
        let residual = balance_residual(&transition, &stationary);
        if residual > BALANCE_TOL {
            return Err(ModelError::BadChain(format!(
                "supplied stationary law violates pi P = pi (residual {residual:e})"
            )));
        }
        Ok(Self {
            states,
            transition,
            stationary,
        })
    }

    /// Single-state chain, the i.i.d. special case.
    pub fn single(state: impl Into<String>) -> Self {
        Self {
            states: vec![state.into()],
            transition: DMatrix::from_element(1, 1, 1.0),
            stationary: vec![1.0],
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, ModelError> {
    let d = rows.len();
    if d == 0 {
        return Err(ModelError::BadChain("empty transition matrix".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(ModelError::BadChain(format!(
                "row {i} has {} entries, expected {d}",
                row.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

/// Checks that `p` is square, nonnegative and row-stochastic.
pub fn validate_stochastic(p: &DMatrix<f64>) -> Result<(), ModelError> {
    let d = p.nrows();
    if d == 0 || p.ncols() != d {
        return Err(ModelError::BadChain(format!(
            "transition matrix must be square and nonempty, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    for i in 0..d {
        let mut sum = 0.0;
        for j in 0..d {
            let x = p[(i, j)];
            if !x.is_finite() || x < 0.0 {
                return Err(ModelError::BadChain(format!(
                    "entry ({i},{j}) = {x} is not a probability"
                )));
            }
            sum += x;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(ModelError::BadChain(format!(
                "row {i} sums to {sum}, not 1"
            )));
        }
    }
    Ok(())
}

/// Strong connectivity of the support graph of `p`.
pub fn is_irreducible(p: &DMatrix<f64>) -> bool {
    let d = p.nrows();
    if d == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; d];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..d {
                let w = if forward { p[(i, j)] } else { p[(j, i)] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// `max_j |(pi P)_j - pi_j|`.
pub fn balance_residual(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let d = p.nrows();
    (0..d)
        .map(|j| {
            let flow: f64 = (0..d).map(|i| pi[i] * p[(i, j)]).sum();
            (flow - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// Stationary law of an irreducible row-stochastic matrix, by a direct solve
/// of `pi (P - I) = 0` with one balance equation replaced by `sum pi = 1`.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>, ModelError> {
    validate_stochastic(p)?;
    if !is_irreducible(p) {
        return Err(ModelError::BadChain(
            "transition matrix is reducible".into(),
        ));
    }
    let d = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(d, d);
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(d);
    b[d - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| ModelError::BadChain("singular balance system".into()))?;
    // one step of iterative refinement
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let total: f64 = x.iter().sum();
    let pi: Vec<f64> = x.iter().map(|v| v / total).collect();
    if pi.iter().any(|&v| !(v > 0.0)) {
        return Err(ModelError::BadChain(
            "stationary law has a non-positive entry".into(),
        ));
    }
    let residual = balance_residual(p, &pi);
    if residual > BALANCE_TOL {
        return Err(ModelError::BadChain(format!(
            "stationary solve residual {residual:e} exceeds {BALANCE_TOL:e}"
        )));
    }
    Ok(pi)
}
