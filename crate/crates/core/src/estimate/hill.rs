use serde::Serialize;

use super::EstimateError;

pub const MAX_DEFAULT_K: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HillEstimate {
    pub alpha_hat: f64,
    pub std_err: f64,
    pub k: usize,
}

/// `floor(n^{2/3})`, capped at `MAX_DEFAULT_K`.
pub fn default_hill_k(n: usize) -> usize {
    let k = (n as f64).powf(2.0 / 3.0).floor() as usize;
    // guard against powf landing just below an exact cube
    let k = if (k + 1).pow(3) as f64 <= (n as f64).powi(2) {
        k + 1
    } else {
        k
    };
    k.min(MAX_DEFAULT_K)
}

/// Hill estimator on the positive values: `k / sum_{j<=k} log(R_(j) / R_(k+1))`.
pub fn hill(values: &[f64], k: usize) -> Result<HillEstimate, EstimateError> {
    let mut pos: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    if k < 2 || k >= pos.len() {
        return Err(EstimateError::InvalidArgument(format!(
            "k = {k} must satisfy 2 <= k < {} positive samples",
            pos.len()
        )));
    }
    if pos.iter().any(|v| !v.is_finite()) {
        return Err(EstimateError::InvalidArgument(
            "samples must be finite".into(),
        ));
    }
    // top k+1 values land in pos[..=k], with pos[k] the (k+1)-th largest
    pos.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = pos[k];
    let sum: f64 = pos[..k].iter().map(|&v| (v / threshold).ln()).sum();
    if !(sum > 0.0) {
        return Err(EstimateError::DegenerateOrderStats);
    }
    let alpha_hat = k as f64 / sum;
    Ok(HillEstimate {
        alpha_hat,
        std_err: alpha_hat / (k as f64).sqrt(),
        k,
    })
}
