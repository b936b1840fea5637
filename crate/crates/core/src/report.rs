//! Theory report: exponent, regime, spectral radii, tail constants and the
//! degeneracy verdict for one model.

use serde::{Deserialize, Serialize};

use crate::model::{check_assumptions, AssumptionReport, InducedModel};
use crate::spectral::{
    build_operators, detect_degenerate, find_beta_max, solve_alpha_detailed,
    solve_signed_constants, solve_tail_constants, spectral_radius, theta_matrix, Degeneracy,
    LambdaCurve, SpectralError, Tolerances,
};

/// Which mechanism produces the power tail of `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Tail inherited from the heaviest `Q`, with `Lambda(alpha_Q) < 0`.
    Grey,
    /// Tail generated by the multiplier: `alpha` is the root of `Lambda`.
    Kesten,
    /// Bounded `Q` and no root of `Lambda`: lighter than every power.
    Light,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub beta: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportOptions {
    /// Regeneration state used for `rho_Theta_alpha`.
    pub y_star: usize,
    /// Coin probability used for `rho_Theta_alpha`.
    pub r: f64,
    pub tolerances: Tolerances,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            y_star: 0,
            r: 0.5,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub regime: Regime,
    pub alpha: Option<f64>,
    pub lyapunov_exponent: f64,
    pub lambda_curve: Vec<LambdaPoint>,
    pub lambda_convex: bool,
    #[serde(rename = "rho_G")]
    pub rho_g: Option<f64>,
    #[serde(rename = "rho_H_alpha")]
    pub rho_h_alpha: Option<f64>,
    #[serde(rename = "rho_Theta_alpha")]
    pub rho_theta_alpha: Option<f64>,
    /// Right-tail constants `(I - G)^{-1} q^{(1)}`; requires `M > 0`.
    #[serde(rename = "K")]
    pub k: Option<Vec<f64>>,
    #[serde(rename = "K_plus")]
    pub k_plus: Option<Vec<f64>>,
    #[serde(rename = "K_minus")]
    pub k_minus: Option<Vec<f64>>,
    pub degenerate: Degeneracy,
    pub assumptions: Option<AssumptionReport>,
    /// Why a constant is absent, when it is.
    pub notes: Vec<String>,
}

const CURVE_POINTS: usize = 64;

/// Resolves the regime and exponent of `model`.
///
/// With `alpha_Q` the smallest Pareto index of `Q`: if `Lambda(alpha_Q) < 0`
/// the tail is inherited from `Q`; otherwise the root of `Lambda` in
/// `(0, alpha_Q]` governs. Bounded `Q` leaves only the root, if any.
pub fn resolve_regime(
    model: &InducedModel,
    tols: &Tolerances,
) -> Result<(Regime, Option<f64>), SpectralError> {
    let gamma = model.lyapunov_exponent();
    if !(gamma < 0.0) {
        return Err(SpectralError::NotContracting { rho: gamma.exp() });
    }
    let lambda = LambdaCurve::new(model, tols.spectral)?;
    let alpha_q = model.q_tail_index();
    if alpha_q.is_finite() {
        let at_q = lambda.eval(alpha_q)?;
        if at_q < 0.0 {
            return Ok((Regime::Grey, Some(alpha_q)));
        }
        if at_q == 0.0 {
            return Ok((Regime::Kesten, Some(alpha_q)));
        }
        let sol = solve_alpha_detailed(model, alpha_q, tols)?;
        return Ok((Regime::Kesten, Some(sol.alpha)));
    }
    match find_beta_max(model, tols.spectral) {
        Ok(beta_max) => {
            let sol = solve_alpha_detailed(model, beta_max, tols)?;
            Ok((Regime::Kesten, Some(sol.alpha)))
        }
        Err(SpectralError::NoKestenExponent) => Ok((Regime::Light, None)),
        Err(e) => Err(e),
    }
}

pub fn theory_report(
    model: &InducedModel,
    opts: &ReportOptions,
) -> Result<TheoryReport, SpectralError> {
    let tols = &opts.tolerances;
    let (regime, alpha) = resolve_regime(model, tols)?;
    let degenerate = detect_degenerate(model);
    let lambda = LambdaCurve::new(model, tols.spectral)?;

    let beta_max = alpha.map_or(4.0, |a| 2.0 * a);
    let mut lambda_curve = Vec::with_capacity(CURVE_POINTS + 1);
    for k in 0..=CURVE_POINTS {
        let beta = beta_max * k as f64 / CURVE_POINTS as f64;
        lambda_curve.push(LambdaPoint {
            beta,
            lambda: lambda.eval(beta)?,
        });
    }
    let lambda_convex = lambda_curve
        .windows(3)
        .all(|w| w[0].lambda - 2.0 * w[1].lambda + w[2].lambda >= -1e-9);

    let mut report = TheoryReport {
        regime,
        alpha,
        lyapunov_exponent: model.lyapunov_exponent(),
        lambda_curve,
        lambda_convex,
        rho_g: None,
        rho_h_alpha: None,
        rho_theta_alpha: None,
        k: None,
        k_plus: None,
        k_minus: None,
        degenerate,
        assumptions: None,
        notes: Vec::new(),
    };
    let d = model.len();
    let zeros = || Some(vec![0.0; d]);

    let Some(alpha) = alpha else {
        report
            .notes
            .push("no power tail: all tail constants vanish".into());
        (report.k, report.k_plus, report.k_minus) = (zeros(), zeros(), zeros());
        return Ok(report);
    };

    let ops = build_operators(model, alpha)?;
    report.rho_g = Some(spectral_radius(&ops.g, tols.spectral)?);
    report.rho_h_alpha = Some(lambda.eval(alpha)?.exp());
    report.rho_theta_alpha = Some(theta_matrix(model, alpha, opts.y_star, opts.r)?.rho);
    report.assumptions = Some(check_assumptions(model, alpha)?);

    if report.degenerate.is_degenerate {
        report
            .notes
            .push("degenerate model: R takes finitely many values".into());
        (report.k, report.k_plus, report.k_minus) = (zeros(), zeros(), zeros());
        return Ok(report);
    }
    match regime {
        Regime::Grey => {
            let signed = solve_signed_constants(model, alpha, tols)?;
            if model.multipliers_positive() {
                report.k = Some(solve_tail_constants(model, alpha, tols)?.k);
            } else {
                report
                    .notes
                    .push("K requires M > 0; see K_plus and K_minus".into());
            }
            report.k_plus = Some(signed.k_plus);
            report.k_minus = Some(signed.k_minus);
        }
        Regime::Kesten => report
            .notes
            .push("Kesten regime: tail constants have no closed form".into()),
        Regime::Light => unreachable!("light regime has no exponent"),
    }
    Ok(report)
}
