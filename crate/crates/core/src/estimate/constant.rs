use serde::{Deserialize, Serialize};

use super::hill::{default_hill_k, hill};
use super::{EstimateError, TailSample};
use crate::model::Sign;

/// Number of log-spaced points in the estimation window.
pub const GRID_POINTS: usize = 16;
/// Smallest number of `|R| > t_lo` exceedances accepted for an estimate.
pub const MIN_EXCEEDANCES: usize = 100;

/// Range of `t` used for tail-constant estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Window {
    /// Empirical quantiles of `|R|` over all samples.
    Quantiles {
        lo: f64,
        hi: f64,
    },
    Absolute {
        t_lo: f64,
        t_hi: f64,
    },
}

impl Default for Window {
    fn default() -> Self {
        Window::Quantiles {
            lo: 0.99,
            hi: 0.9999,
        }
    }
}

impl Window {
    /// `(t_lo, t_hi)` for the given samples.
    pub fn resolve<S: TailSample>(&self, samples: &[S]) -> Result<(f64, f64), EstimateError> {
        let (lo, hi) = match *self {
            Window::Absolute { t_lo, t_hi } => (t_lo, t_hi),
            Window::Quantiles { lo, hi } => {
                if !(0.0 < lo && lo < hi && hi < 1.0) {
                    return Err(EstimateError::InvalidArgument(format!(
                        "quantile window ({lo}, {hi}) must satisfy 0 < lo < hi < 1"
                    )));
                }
                if samples.is_empty() {
                    return Err(EstimateError::NoSamples(String::new()));
                }
                let mut abs: Vec<f64> = samples.iter().map(|s| s.value().abs()).collect();
                abs.sort_unstable_by(f64::total_cmp);
                let at = |q: f64| abs[(q * (abs.len() - 1) as f64).floor() as usize];
                (at(lo), at(hi))
            }
        };
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(EstimateError::InvalidArgument(format!(
                "window [{lo}, {hi}] must satisfy 0 < t_lo < t_hi < inf"
            )));
        }
        Ok((lo, hi))
    }
}

fn log_grid(t_lo: f64, t_hi: f64) -> Vec<f64> {
    let ratio = (t_hi / t_lo).ln();
    (0..GRID_POINTS)
        .map(|j| match j {
            0 => t_lo,
            j if j == GRID_POINTS - 1 => t_hi,
            j => t_lo * (ratio * j as f64 / (GRID_POINTS - 1) as f64).exp(),
        })
        .collect()
}

/// Windowed estimate of one tail constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KHat {
    /// Mean of `t^alpha P(eta R > t)` over the grid.
    pub k: f64,
    /// `(max - min) / mean` of the grid values; 0 when the mean is 0.
    pub spread: f64,
    pub values: Vec<f64>,
    pub n_samples: usize,
    /// Samples with `|R| > t_lo`.
    pub exceedances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KConstantEstimate {
    pub alpha: f64,
    pub sign: Sign,
    pub t_window: (f64, f64),
    pub grid: Vec<f64>,
    pub pooled: KHat,
    /// Indexed by state when requested.
    pub per_state: Option<Vec<KHat>>,
}

/// Sorted values of `eta R` and the sorted `|R|`, for fast tail counts.
struct Sorted {
    signed: Vec<f64>,
    abs: Vec<f64>,
}

impl Sorted {
    fn new(values: impl Iterator<Item = f64> + Clone, eta: f64) -> Self {
        let mut signed: Vec<f64> = values.clone().map(|v| eta * v).collect();
        let mut abs: Vec<f64> = values.map(f64::abs).collect();
        signed.sort_unstable_by(f64::total_cmp);
        abs.sort_unstable_by(f64::total_cmp);
        Self { signed, abs }
    }

    fn above(sorted: &[f64], t: f64) -> usize {
        sorted.len() - sorted.partition_point(|&v| v <= t)
    }

    fn estimate(&self, alpha: f64, grid: &[f64], which: String) -> Result<KHat, EstimateError> {
        let n = self.signed.len();
        if n == 0 {
            return Err(EstimateError::NoSamples(which));
        }
        let exceedances = Self::above(&self.abs, grid[0]);
        if exceedances < MIN_EXCEEDANCES {
            return Err(EstimateError::ThinTail {
                found: exceedances,
                needed: MIN_EXCEEDANCES,
                t: grid[0],
                which,
            });
        }
        let values: Vec<f64> = grid
            .iter()
            .map(|&t| t.powf(alpha) * Self::above(&self.signed, t) as f64 / n as f64)
            .collect();
        let k = values.iter().sum::<f64>() / values.len() as f64;
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        Ok(KHat {
            k,
            spread: if k > 0.0 { (hi - lo) / k } else { 0.0 },
            values,
            n_samples: n,
            exceedances,
        })
    }
}

/// Tail constant `K = lim t^alpha P(eta R > t)` averaged over a log grid in the window.
pub fn k_constant_estimate<S: TailSample>(
    samples: &[S],
    alpha: f64,
    window: &Window,
    sign: Sign,
    per_state: bool,
) -> Result<KConstantEstimate, EstimateError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(EstimateError::InvalidArgument(format!(
            "alpha = {alpha} must be positive"
        )));
    }
    let t_window = window.resolve(samples)?;
    let grid = log_grid(t_window.0, t_window.1);
    let eta = sign.value();
    let pooled = Sorted::new(samples.iter().map(|s| s.value()), eta).estimate(
        alpha,
        &grid,
        String::new(),
    )?;
    let per_state = if per_state {
        let d = samples.iter().map(|s| s.state() + 1).max().unwrap_or(0);
        let mut out = Vec::with_capacity(d);
        for i in 0..d {
            let values = samples.iter().filter(|s| s.state() == i).map(|s| s.value());
            out.push(Sorted::new(values, eta).estimate(alpha, &grid, format!(" for state {i}"))?);
        }
        Some(out)
    } else {
        None
    };
    Ok(KConstantEstimate {
        alpha,
        sign,
        t_window,
        grid,
        pooled,
        per_state,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Symmetry {
    pub k_plus: f64,
    pub k_minus: f64,
    /// Grid average of the multinomial standard error of `t^alpha (p+ - p-)`.
    pub std_err: f64,
    pub z_score: f64,
    pub t_window: (f64, f64),
}

/// Compares the two signed tail constants on a common window.
///
/// The standard error averages the per-point errors over the grid, which
/// bounds the error of the grid average from above.
pub fn symmetry_check<S: TailSample>(
    samples: &[S],
    alpha: f64,
    window: &Window,
) -> Result<Symmetry, EstimateError> {
    let plus = k_constant_estimate(samples, alpha, window, Sign::Plus, false)?;
    let minus = k_constant_estimate(samples, alpha, window, Sign::Minus, false)?;
    let n = plus.pooled.n_samples as f64;
    let std_err = plus
        .grid
        .iter()
        .zip(plus.pooled.values.iter().zip(&minus.pooled.values))
        .map(|(&t, (&vp, &vm))| {
            let scale = t.powf(alpha);
            let (pp, pm) = (vp / scale, vm / scale);
            scale * ((pp + pm - (pp - pm).powi(2)) / n).max(0.0).sqrt()
        })
        .sum::<f64>()
        / plus.grid.len() as f64;
    let diff = plus.pooled.k - minus.pooled.k;
    let z_score = if std_err > 0.0 {
        diff / std_err
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(Symmetry {
        k_plus: plus.pooled.k,
        k_minus: minus.pooled.k,
        std_err,
        z_score,
        t_window: plus.t_window,
    })
}

/// Exponent used for the constants: supplied, or estimated by Hill on `|R|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaChoice {
    Value(f64),
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KEntry {
    /// `None` for the estimate over all states.
    pub state: Option<usize>,
    pub sign: i8,
    pub k: f64,
    pub spread: f64,
}

/// Combined output of the `estimate` step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub alpha: f64,
    pub alpha_hat: Option<f64>,
    pub alpha_std_err: Option<f64>,
    pub k_used: Option<usize>,
    #[serde(rename = "K_hat")]
    pub k_hat: Vec<KEntry>,
    pub t_window: (f64, f64),
    pub n_samples: usize,
}

pub fn tail_estimate<S: TailSample>(
    samples: &[S],
    alpha: AlphaChoice,
    window: &Window,
    per_state: bool,
) -> Result<TailEstimate, EstimateError> {
    if samples.is_empty() {
        return Err(EstimateError::NoSamples(String::new()));
    }
    let abs: Vec<f64> = samples.iter().map(|s| s.value().abs()).collect();
    let h = hill(
        &abs,
        default_hill_k(abs.len()).min(abs.len().saturating_sub(1)),
    );
    let (alpha, h) = match alpha {
        AlphaChoice::Value(a) => (a, h.ok()),
        AlphaChoice::Auto => {
            let h = h?;
            (h.alpha_hat, Some(h))
        }
    };
    let mut k_hat = Vec::new();
    let mut t_window = (0.0, 0.0);
    for sign in [Sign::Plus, Sign::Minus] {
        let est = k_constant_estimate(samples, alpha, window, sign, per_state)?;
        t_window = est.t_window;
        let eta = sign.value() as i8;
        k_hat.push(KEntry {
            state: None,
            sign: eta,
            k: est.pooled.k,
            spread: est.pooled.spread,
        });
        for (i, kh) in est.per_state.iter().flatten().enumerate() {
            k_hat.push(KEntry {
                state: Some(i),
                sign: eta,
                k: kh.k,
                spread: kh.spread,
            });
        }
    }
    Ok(TailEstimate {
        alpha,
        alpha_hat: h.map(|h| h.alpha_hat),
        alpha_std_err: h.map(|h| h.std_err),
        k_used: h.map(|h| h.k),
        k_hat,
        t_window,
        n_samples: samples.len(),
    })
}
