use nalgebra::DMatrix;

use super::perron::{perron_root, DEFAULT_MAX_ITER};
use super::{SpectralError, Tolerances};
use crate::model::{ChainSpec, InducedModel, ModelError, Orientation};

/// Transition matrix of the time-reversed chain: `H(i,j) = pi_j P(j,i) / pi_i`.
pub fn backward_matrix(chain: &ChainSpec) -> Result<DMatrix<f64>, SpectralError> {
    let pi = chain.stationary();
    if pi.iter().any(|&x| !(x > 0.0)) {
        return Err(SpectralError::DegenerateStationary);
    }
    let p = chain.transition();
    let d = chain.len();
    let mut h = DMatrix::from_fn(d, d, |i, j| pi[j] * p[(j, i)] / pi[i]);
    // remove roundoff so rows are stochastic to machine precision
    for i in 0..d {
        let s = h.row(i).sum();
        for j in 0..d {
            h[(i, j)] /= s;
        }
    }
    Ok(h)
}

/// The backward kernel and the moment-weighted matrices built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub h: DMatrix<f64>,
    pub g_plus: DMatrix<f64>,
    pub g_minus: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub alpha_used: f64,
}

/// `G_eta(i,j) = m_i^{(eta)} H(i,j)` and `G = G_+ + G_-` at exponent `alpha`.
pub fn build_operators(model: &InducedModel, alpha: f64) -> Result<OperatorSet, SpectralError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(ModelError::BadExponent(alpha).into());
    }
    let h = backward_matrix(model.chain())?;
    let m_plus = model.m_vector(alpha, Orientation::Plus);
    let m_minus = model.m_vector(alpha, Orientation::Minus);
    let scale_rows = |w: &[f64]| {
        let mut out = h.clone();
        for (i, &wi) in w.iter().enumerate() {
            out.row_mut(i).scale_mut(wi);
        }
        out
    };
    let g_plus = scale_rows(&m_plus);
    let g_minus = scale_rows(&m_minus);
    let g = &g_plus + &g_minus;
    Ok(OperatorSet {
        h,
        g_plus,
        g_minus,
        g,
        alpha_used: alpha,
    })
}

/// `H_beta(i,j) = H(i,j) E|M_j|^beta`.
pub fn weighted_backward(h: &DMatrix<f64>, model: &InducedModel, beta: f64) -> DMatrix<f64> {
    let w = model.m_vector(beta, Orientation::Both);
    let mut out = h.clone();
    for (j, &wj) in w.iter().enumerate() {
        out.column_mut(j).scale_mut(wj);
    }
    out
}

/// Evaluates `Lambda(beta) = log rho(H_beta)` with the backward kernel cached.
#[derive(Debug, Clone)]
pub struct LambdaCurve<'a> {
    model: &'a InducedModel,
    h: DMatrix<f64>,
    tol: f64,
}

impl<'a> LambdaCurve<'a> {
    pub fn new(model: &'a InducedModel, tol: f64) -> Result<Self, SpectralError> {
        Ok(Self {
            model,
            h: backward_matrix(model.chain())?,
            tol,
        })
    }

    pub fn backward(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn eval(&self, beta: f64) -> Result<f64, SpectralError> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(SpectralError::BadArgument(format!(
                "beta = {beta} must be >= 0"
            )));
        }
        let hb = weighted_backward(&self.h, self.model, beta);
        let rho = perron_root(&hb, self.tol, DEFAULT_MAX_ITER)?.value;
        Ok(rho.ln())
    }
}

/// `Lambda(beta)` at the default spectral tolerance.
pub fn lambda_beta(model: &InducedModel, beta: f64) -> Result<f64, SpectralError> {
    LambdaCurve::new(model, Tolerances::default().spectral)?.eval(beta)
}

/// Root-finding output for `Lambda(alpha) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSolution {
    pub alpha: f64,
    pub lambda_at_alpha: f64,
    pub bracket: (f64, f64),
    /// `(beta, Lambda(beta))` on the scan grid, `beta = beta_max k / 64`.
    pub curve: Vec<(f64, f64)>,
    /// Second differences of the sampled curve are all `>= -1e-9`.
    pub convex: bool,
    pub bisection_steps: usize,
}

pub const ALPHA_GRID: usize = 64;
const MAX_BISECTION: usize = 200;

/// Positive root of `Lambda` in `(0, beta_max]`.
pub fn solve_alpha(model: &InducedModel, beta_max: f64, tol: f64) -> Result<f64, SpectralError> {
    let tols = Tolerances {
        root: tol,
        ..Tolerances::default()
    };
    solve_alpha_detailed(model, beta_max, &tols).map(|s| s.alpha)
}

pub fn solve_alpha_detailed(
    model: &InducedModel,
    beta_max: f64,
    tols: &Tolerances,
) -> Result<AlphaSolution, SpectralError> {
    if !(beta_max > 0.0) || !beta_max.is_finite() {
        return Err(SpectralError::BadArgument(format!(
            "beta_max = {beta_max} must be positive"
        )));
    }
    let lambda = LambdaCurve::new(model, tols.spectral)?;
    let mut curve = Vec::with_capacity(ALPHA_GRID + 1);
    for k in 0..=ALPHA_GRID {
        let beta = beta_max * k as f64 / ALPHA_GRID as f64;
        curve.push((beta, lambda.eval(beta)?));
    }
    let convex = curve
        .windows(3)
        .all(|w| w[0].1 - 2.0 * w[1].1 + w[2].1 >= -1e-9);

    let mut lo = None;
    let mut hi = None;
    for &(beta, value) in &curve[1..] {
        match lo {
            None if value < 0.0 => lo = Some((beta, value)),
            Some(_) if value >= 0.0 => {
                hi = Some((beta, value));
                break;
            }
            _ => {}
        }
    }
    // a root below the first grid point: look for negativity closer to 0
    if lo.is_none() && curve[1].1 > 0.0 {
        let mut beta = curve[1].0;
        for _ in 0..40 {
            beta *= 0.5;
            let value = lambda.eval(beta)?;
            if value < 0.0 {
                lo = Some((beta, value));
                hi = Some(curve[1]);
                break;
            }
        }
    }
    let (Some((mut a, _)), Some((mut b, fb))) = (lo, hi) else {
        return Err(SpectralError::NoKestenExponent);
    };
    if fb == 0.0 {
        return Ok(AlphaSolution {
            alpha: b,
            lambda_at_alpha: 0.0,
            bracket: (a, b),
            curve,
            convex,
            bisection_steps: 0,
        });
    }
    let mut best = (b, fb);
    let mut steps = 0;
    while steps < MAX_BISECTION {
        steps += 1;
        let mid = 0.5 * (a + b);
        let value = lambda.eval(mid)?;
        if value.abs() < best.1.abs() {
            best = (mid, value);
        }
        if value < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        let width_done = b - a <= 4.0 * f64::EPSILON * b;
        if (value.abs() < tols.root && b - a < tols.root) || width_done || value == 0.0 {
            break;
        }
    }
    if !(best.1.abs() < tols.root) {
        return Err(SpectralError::NoConvergence {
            lower: a,
            upper: b,
            iterations: steps,
        });
    }
    Ok(AlphaSolution {
        alpha: best.0,
        lambda_at_alpha: best.1,
        bracket: (a, b),
        curve,
        convex,
        bisection_steps: steps,
    })
}

/// Smallest `beta` in `1, 2, 4, ..., 512` with `Lambda(beta) > 0`.
pub fn find_beta_max(model: &InducedModel, tol: f64) -> Result<f64, SpectralError> {
    let lambda = LambdaCurve::new(model, tol)?;
    let mut beta = 1.0;
    while beta <= 512.0 {
        if lambda.eval(beta)? > 0.0 {
            return Ok(beta);
        }
        beta *= 2.0;
    }
    Err(SpectralError::NoKestenExponent)
}

/// Whether `Lambda` takes both signs on `(0, inf)`.
pub fn lambda_changes_sign(model: &InducedModel) -> Result<bool, SpectralError> {
    let lambda = LambdaCurve::new(model, Tolerances::default().spectral)?;
    // Lambda is convex with Lambda(0) = 0 and slope at 0 equal to the Lyapunov exponent
    let mut negative = model.lyapunov_exponent() < 0.0;
    let mut positive = false;
    let mut beta = 1.0 / 1024.0;
    while beta <= 512.0 && !(negative && positive) {
        let v = lambda.eval(beta)?;
        negative |= v < 0.0;
        positive |= v > 0.0;
        beta *= 2.0;
    }
    Ok(negative && positive)
}

/// Sub-stochastic kernel between regenerations and its moment-weighted form.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSplit {
    /// `Theta(x,y) = (1 - r 1{y = y*}) H(x,y)`.
    pub theta: DMatrix<f64>,
    /// `Theta_alpha(x,y) = Theta(x,y) E|M_y|^alpha`.
    pub theta_weighted: DMatrix<f64>,
    pub rho: f64,
}

pub fn theta_matrix(
    model: &InducedModel,
    alpha: f64,
    y_star: usize,
    r: f64,
) -> Result<ThetaSplit, SpectralError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(SpectralError::BadArgument(format!(
            "coin probability r = {r} not in (0,1)"
        )));
    }
    if y_star >= model.len() {
        return Err(SpectralError::BadArgument(format!(
            "state index {y_star} out of range"
        )));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(SpectralError::BadArgument(format!(
            "alpha = {alpha} must be >= 0"
        )));
    }
    let mut theta = backward_matrix(model.chain())?;
    theta.column_mut(y_star).scale_mut(1.0 - r);
    let theta_weighted = weighted_backward(&theta, model, alpha);
    let rho = perron_root(
        &theta_weighted,
        Tolerances::default().spectral,
        DEFAULT_MAX_ITER,
    )?
    .value;
    Ok(ThetaSplit {
        theta,
        theta_weighted,
        rho,
    })
}
