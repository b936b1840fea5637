use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::operators::build_operators;
use super::perron::{perron_root, DEFAULT_MAX_ITER};
use super::{SpectralError, Tolerances};
use crate::model::{check_assumptions, InducedModel};

/// Neumann partial sums stop once a term is below this in sup norm.
pub const NEUMANN_INCREMENT: f64 = 1e-12;
/// Entries above `-NEGATIVE_CLAMP` are treated as roundoff and clamped to 0.
pub const NEGATIVE_CLAMP: f64 = 1e-10;
const NEUMANN_MAX_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailConstants {
    pub k: Vec<f64>,
    /// `sum_{n <= N} G^n q` with `N` the first term below `NEUMANN_INCREMENT`.
    pub neumann: Vec<f64>,
    pub neumann_terms: usize,
    /// Sup-norm gap between the direct and series solutions.
    pub neumann_gap: f64,
    pub rho_g: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedConstants {
    pub k_plus: Vec<f64>,
    pub k_minus: Vec<f64>,
    pub rho_g: f64,
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}

fn solve(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>, SpectralError> {
    let lu = a.clone().lu();
    let mut x = lu
        .solve(b)
        .ok_or_else(|| SpectralError::SingularSystem(what.to_string()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::SingularSystem(what.to_string()));
    }
    // one step of iterative refinement
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x)
}

fn clamp_nonnegative(x: DVector<f64>, what: &str) -> Result<Vec<f64>, SpectralError> {
    if let Some(v) = x.iter().find(|&&v| v < -NEGATIVE_CLAMP) {
        return Err(SpectralError::NumericalInconsistency(format!(
            "{what} has entry {v} below -{NEGATIVE_CLAMP}"
        )));
    }
    Ok(x.iter().map(|&v| v.max(0.0)).collect())
}

/// Solves `(I - G) K = q` directly and by the Neumann series.
pub fn tail_constants_from(
    g: &DMatrix<f64>,
    q: &[f64],
    tols: &Tolerances,
) -> Result<TailConstants, SpectralError> {
    let d = g.nrows();
    if g.ncols() != d || q.len() != d {
        return Err(SpectralError::NotSquare(g.nrows(), g.ncols()));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::AssumptionViolated(
            "A1 (tail weights are infinite)".into(),
        ));
    }
    let rho_g = perron_root(g, tols.spectral, DEFAULT_MAX_ITER)?.value;
    if rho_g >= 1.0 {
        return Err(SpectralError::NotContracting { rho: rho_g });
    }
    let q = DVector::from_column_slice(q);
    let a = DMatrix::identity(d, d) - g;
    let k = solve(&a, &q, "I - G")?;
    let residual = sup_norm(&(&a * &k - &q));
    if residual > tols.residual * sup_norm(&q).max(1.0) {
        return Err(SpectralError::NumericalInconsistency(format!(
            "residual {residual} of (I - G) K = q"
        )));
    }

    let mut sum = q.clone();
    let mut term = q.clone();
    let mut terms = 1;
    while sup_norm(&term) >= NEUMANN_INCREMENT && terms < NEUMANN_MAX_TERMS {
        term = g * term;
        sum += &term;
        terms += 1;
    }
    let neumann_gap = sup_norm(&(&sum - &k));

    Ok(TailConstants {
        k: clamp_nonnegative(k, "K")?,
        neumann: sum.iter().copied().collect(),
        neumann_terms: terms,
        neumann_gap,
        rho_g,
        residual,
    })
}

/// `K^{(eta)} = ((I - G)^{-1}(q+ + q-) + eta (I - G+ + G-)^{-1}(q+ - q-)) / 2`.
pub fn signed_constants_from(
    g_plus: &DMatrix<f64>,
    g_minus: &DMatrix<f64>,
    q_plus: &[f64],
    q_minus: &[f64],
    tols: &Tolerances,
) -> Result<SignedConstants, SpectralError> {
    let d = g_plus.nrows();
    if q_plus.len() != d || q_minus.len() != d || g_minus.shape() != g_plus.shape() {
        return Err(SpectralError::NotSquare(g_plus.nrows(), g_plus.ncols()));
    }
    if q_plus.iter().chain(q_minus).any(|v| !v.is_finite()) {
        return Err(SpectralError::AssumptionViolated(
            "A1 (tail weights are infinite)".into(),
        ));
    }
    let g = g_plus + g_minus;
    let rho_g = perron_root(&g, tols.spectral, DEFAULT_MAX_ITER)?.value;
    if rho_g >= 1.0 {
        return Err(SpectralError::NotContracting { rho: rho_g });
    }
    let qp = DVector::from_column_slice(q_plus);
    let qm = DVector::from_column_slice(q_minus);
    let even_rhs = &qp + &qm;
    let odd_rhs = &qp - &qm;
    let id = DMatrix::identity(d, d);
    let even_a = &id - &g;
    let odd_a = &id - g_plus + g_minus;
    let even = solve(&even_a, &even_rhs, "I - G")?;
    let odd = solve(&odd_a, &odd_rhs, "I - G+ + G-")?;
    let scale = sup_norm(&even_rhs).max(1.0);
    for (a, x, b, name) in [
        (&even_a, &even, &even_rhs, "I - G"),
        (&odd_a, &odd, &odd_rhs, "I - G+ + G-"),
    ] {
        let residual = sup_norm(&(a * x - b));
        if residual > tols.residual * scale {
            return Err(SpectralError::NumericalInconsistency(format!(
                "residual {residual} for {name}"
            )));
        }
    }
    let k_plus = (&even + &odd) * 0.5;
    let k_minus = (&even - &odd) * 0.5;
    Ok(SignedConstants {
        k_plus: clamp_nonnegative(k_plus, "K_plus")?,
        k_minus: clamp_nonnegative(k_minus, "K_minus")?,
        rho_g,
    })
}

fn require_assumptions(model: &InducedModel, alpha: f64) -> Result<(), SpectralError> {
    let report = check_assumptions(model, alpha)?;
    if !report.a1.holds {
        return Err(SpectralError::AssumptionViolated(format!(
            "A1 at alpha = {alpha} (sup q = {}, sum q+ = {})",
            report.a1.sup_q, report.a1.sum_q_plus
        )));
    }
    if !report.a2.holds {
        return Err(SpectralError::AssumptionViolated("A2".into()));
    }
    Ok(())
}

/// Right tail constants `K = (I - G)^{-1} q^{(1)}` for a model with `M > 0`.
pub fn solve_tail_constants(
    model: &InducedModel,
    alpha: f64,
    tols: &Tolerances,
) -> Result<TailConstants, SpectralError> {
    require_assumptions(model, alpha)?;
    if let Some(i) = (0..model.len())
        .find(|&i| model.law(i).m_moment(0.0, crate::model::Orientation::Minus) > 0.0)
    {
        return Err(SpectralError::SignedMultiplier(
            model.chain().states()[i].clone(),
        ));
    }
    let ops = build_operators(model, alpha)?;
    let (q_plus, _) = model.tail_weights(alpha);
    let out = tail_constants_from(&ops.g, &q_plus, tols)?;
    check_a3(model, alpha)?;
    Ok(out)
}

/// Signed tail constants `(K^{(1)}, K^{(-1)})`.
pub fn solve_signed_constants(
    model: &InducedModel,
    alpha: f64,
    tols: &Tolerances,
) -> Result<SignedConstants, SpectralError> {
    require_assumptions(model, alpha)?;
    let ops = build_operators(model, alpha)?;
    let (q_plus, q_minus) = model.tail_weights(alpha);
    let out = signed_constants_from(&ops.g_plus, &ops.g_minus, &q_plus, &q_minus, tols)?;
    check_a3(model, alpha)?;
    Ok(out)
}

// rho(G) < 1 was already established; (A3) is the stronger uniform bound
fn check_a3(model: &InducedModel, alpha: f64) -> Result<(), SpectralError> {
    let report = check_assumptions(model, alpha)?;
    if report.a3.holds {
        Ok(())
    } else {
        Err(SpectralError::AssumptionViolated(format!(
            "A3 at alpha = {alpha} (sup m = {})",
            report.a3.sup_m
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChainSpec, CoefficientLaw, CoreLaw, MLaw, QLaw};
    use proptest::prelude::*;

    fn pareto(alpha0: f64, q_plus: f64, q_minus: f64) -> QLaw {
        // smallest scale that keeps the tail mass at most 1
        QLaw::TwoSidedPareto {
            alpha0,
            t0: (q_plus + q_minus).powf(1.0 / alpha0).max(1.0),
            q_plus,
            q_minus,
            core: CoreLaw::default(),
        }
    }

    fn worked_model() -> InducedModel {
        let chain = ChainSpec::from_rows(
            vec!["a".into(), "b".into()],
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        InducedModel::new(
            chain,
            vec![
                CoefficientLaw::independent(pareto(1.0, 1.0, 0.0), MLaw::Constant { value: 0.5 }),
                CoefficientLaw::independent(pareto(1.0, 2.0, 0.0), MLaw::Constant { value: 0.25 }),
            ],
        )
        .unwrap()
    }

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn grey_scalar() {
        let law = CoefficientLaw::independent(pareto(1.0, 1.0, 0.0), MLaw::Constant { value: 0.5 });
        let m = InducedModel::iid(law).unwrap();
        let k = solve_tail_constants(&m, 1.0, &tols()).unwrap();
        assert!((k.k[0] - 2.0).abs() < 1e-12);
        assert!(k.neumann_gap < 1e-11);
    }

    #[test]
    fn worked_two_state() {
        let k = solve_tail_constants(&worked_model(), 1.0, &tols()).unwrap();
        assert!((k.k[0] - 2.2).abs() < 1e-12);
        assert!((k.k[1] - 2.6).abs() < 1e-12);
        assert!((k.rho_g - 0.375).abs() < 1e-12);
        let g = DMatrix::from_row_slice(2, 2, &[0.25, 0.25, 0.125, 0.125]);
        let raw = tail_constants_from(&g, &[1.0, 2.0], &tols()).unwrap();
        assert_eq!(raw.k, k.k);
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let g = DMatrix::from_row_slice(2, 2, &[0.25, 0.25, 0.125, 0.125]);
        let raw = tail_constants_from(&g, &[0.0, 0.0], &tols()).unwrap();
        assert_eq!(raw.k, vec![0.0, 0.0]);
    }

    #[test]
    fn signed_scalar() {
        let law =
            CoefficientLaw::independent(pareto(1.0, 1.0, 0.0), MLaw::Constant { value: -0.5 });
        let m = InducedModel::iid(law).unwrap();
        let s = solve_signed_constants(&m, 1.0, &tols()).unwrap();
        assert!((s.k_plus[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((s.k_minus[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            solve_tail_constants(&m, 1.0, &tols()),
            Err(SpectralError::SignedMultiplier(_))
        ));
    }

    #[test]
    fn signed_collapses_for_positive_multipliers() {
        let m = worked_model();
        let s = solve_signed_constants(&m, 1.0, &tols()).unwrap();
        let k = solve_tail_constants(&m, 1.0, &tols()).unwrap();
        assert_eq!(s.k_minus, vec![0.0, 0.0]);
        for (a, b) in s.k_plus.iter().zip(&k.k) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_forcing_splits_evenly() {
        let g_plus = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.05, 0.1]);
        let g_minus = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.1, 0.05]);
        let q = [1.0, 0.5];
        let s = signed_constants_from(&g_plus, &g_minus, &q, &q, &tols()).unwrap();
        let k = tail_constants_from(&(&g_plus + &g_minus), &[2.0, 1.0], &tols()).unwrap();
        for i in 0..2 {
            assert!((s.k_plus[i] - s.k_minus[i]).abs() < 1e-12);
            assert!((s.k_plus[i] - 0.5 * k.k[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn non_contracting_rejected() {
        let g = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(matches!(
            tail_constants_from(&g, &[1.0], &tols()),
            Err(SpectralError::NotContracting { .. })
        ));
    }

    #[test]
    fn a3_failure_reported() {
        // rho(G) = 0.85 < 1 but sup m = 1.2
        let chain = ChainSpec::from_rows(
            vec!["a".into(), "b".into()],
            &[vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let m = InducedModel::new(
            chain,
            vec![
                CoefficientLaw::independent(pareto(1.0, 1.0, 0.0), MLaw::Constant { value: 1.2 }),
                CoefficientLaw::independent(pareto(1.0, 1.0, 0.0), MLaw::Constant { value: 0.6 }),
            ],
        )
        .unwrap();
        assert!(matches!(
            solve_tail_constants(&m, 1.0, &tols()),
            Err(SpectralError::AssumptionViolated(_))
        ));
    }

    #[test]
    fn heavier_q_than_alpha_rejected() {
        let law = CoefficientLaw::independent(pareto(0.8, 1.0, 0.0), MLaw::Constant { value: 0.5 });
        let m = InducedModel::iid(law).unwrap();
        assert!(matches!(
            solve_tail_constants(&m, 1.0, &tols()),
            Err(SpectralError::AssumptionViolated(_))
        ));
    }

    fn substochastic(
        d: usize,
    ) -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>, Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(0.0f64..1.0, d * d),
            prop::collection::vec(0.0f64..1.0, d * d),
            prop::collection::vec(0.0f64..5.0, d),
            prop::collection::vec(0.0f64..5.0, d),
            0.05f64..0.9,
        )
            .prop_map(move |(a, b, qp, qm, target)| {
                let mut gp = DMatrix::from_row_slice(d, d, &a);
                let mut gm = DMatrix::from_row_slice(d, d, &b);
                // rescale so that the max row sum of G+ + G- is `target`
                let g = &gp + &gm;
                let s = (0..d)
                    .map(|i| g.row(i).sum())
                    .fold(0.0, f64::max)
                    .max(1e-12);
                gp *= target / s;
                gm *= target / s;
                (gp, gm, qp, qm)
            })
    }

    proptest! {
        #[test]
        fn fixed_point_and_series_agree((gp, gm, qp, _qm) in (1usize..6).prop_flat_map(substochastic)) {
            let g = &gp + &gm;
            let k = tail_constants_from(&g, &qp, &tols()).unwrap();
            let kv = DVector::from_vec(k.k.clone());
            let fixed = DVector::from_column_slice(&qp) + &g * &kv;
            prop_assert!((fixed - &kv).amax() < 1e-9);
            // rho(G) <= max row sum <= 0.9
            prop_assert!(k.neumann_gap < 1e-10);
        }

        #[test]
        fn even_part_matches_unsigned((gp, gm, qp, qm) in (1usize..6).prop_flat_map(substochastic)) {
            let s = signed_constants_from(&gp, &gm, &qp, &qm, &tols()).unwrap();
            let sum: Vec<f64> = qp.iter().zip(&qm).map(|(a, b)| a + b).collect();
            let k = tail_constants_from(&(&gp + &gm), &sum, &tols()).unwrap();
            for i in 0..qp.len() {
                prop_assert!((s.k_plus[i] + s.k_minus[i] - k.k[i]).abs() < 1e-9);
            }
        }

        #[test]
        fn scale_equivariance((gp, gm, qp, _qm) in (1usize..6).prop_flat_map(substochastic), lambda in 0.01f64..100.0) {
            let g = &gp + &gm;
            let k1 = tail_constants_from(&g, &qp, &tols()).unwrap();
            let scaled: Vec<f64> = qp.iter().map(|q| q * lambda).collect();
            let k2 = tail_constants_from(&g, &scaled, &tols()).unwrap();
            for (a, b) in k1.k.iter().zip(&k2.k) {
                prop_assert!((a * lambda - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
