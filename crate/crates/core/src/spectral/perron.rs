use nalgebra::{DMatrix, DVector};

use super::SpectralError;

pub const DEFAULT_MAX_ITER: usize = 200_000;

/// Perron root together with its Collatz–Wielandt certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerronRoot {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

/// Spectral radius of a nonnegative matrix to within `tol`.
pub fn spectral_radius(a: &DMatrix<f64>, tol: f64) -> Result<f64, SpectralError> {
    perron_root(a, tol, DEFAULT_MAX_ITER).map(|p| p.value)
}

/// Power iteration on `B = A / s + I` (with `s` the max row sum) from the
/// all-ones vector, normalised in sup norm.
///
/// The shift makes `B` primitive whenever `A` is irreducible, so periodic
/// matrices converge, and keeps every iterate strictly positive. For a
/// positive `v`, `min_i (Av)_i / v_i <= rho(A) <= max_i (Av)_i / v_i`; the
/// iteration stops once this bracket is narrower than `tol`.
pub fn perron_root(
    a: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<PerronRoot, SpectralError> {
    let d = a.nrows();
    if d == 0 || a.ncols() != d {
        return Err(SpectralError::NotSquare(a.nrows(), a.ncols()));
    }
    if !(tol > 0.0) {
        return Err(SpectralError::BadTolerance(tol));
    }
    if a.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(SpectralError::NegativeEntry);
    }
    let scale = (0..d).map(|i| a.row(i).sum()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(PerronRoot {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            iterations: 0,
        });
    }
    let b = a / scale;
    let mut v = DVector::from_element(d, 1.0);
    let (mut lower, mut upper) = (0.0, scale);
    for it in 1..=max_iter {
        let mut w = &b * &v;
        w += &v;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..d {
            let ratio = w[i] / v[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        lower = ((lo - 1.0) * scale).max(0.0);
        upper = (hi - 1.0) * scale;
        if upper - lower < tol {
            return Ok(PerronRoot {
                value: 0.5 * (lower + upper),
                lower,
                upper,
                iterations: it,
            });
        }
        let top = w.max();
        v = w / top;
    }
    Err(SpectralError::NoConvergence {
        lower,
        upper,
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn identity_has_unit_radius() {
        let r = spectral_radius(&DMatrix::identity(3, 3), 1e-12).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_example() {
        let r = spectral_radius(&m2(0.25, 0.25, 0.125, 0.125), 1e-12).unwrap();
        assert!((r - 0.375).abs() < 1e-12);
    }

    #[test]
    fn periodic_matrix_converges() {
        let r = spectral_radius(&m2(0.0, 2.0, 0.5, 0.0), 1e-12).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(spectral_radius(&DMatrix::zeros(3, 3), 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn reducible_with_split_bracket_reports_no_convergence() {
        let err = perron_root(&m2(1.0, 1.0, 0.0, 0.5), 1e-12, 500).unwrap_err();
        match err {
            SpectralError::NoConvergence { lower, upper, .. } => {
                assert!(lower <= 1.0 && upper >= 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(spectral_radius(&m2(1.0, -1.0, 0.0, 1.0), 1e-12).is_err());
    }

    /// Largest eigenvalue of a nonnegative 2x2 matrix from the characteristic polynomial.
    fn closed_form(a: f64, b: f64, c: f64, d: f64) -> f64 {
        let tr = a + d;
        let disc = ((a - d) * (a - d) + 4.0 * b * c).sqrt();
        0.5 * (tr + disc)
    }

    proptest! {
        #[test]
        fn two_by_two_matches_closed_form(
            a in 0.0f64..3.0, b in 0.01f64..3.0, c in 0.01f64..3.0, d in 0.0f64..3.0
        ) {
            let r = spectral_radius(&m2(a, b, c, d), 1e-12).unwrap();
            prop_assert!((r - closed_form(a, b, c, d)).abs() < 1e-12);
        }
    }
}
