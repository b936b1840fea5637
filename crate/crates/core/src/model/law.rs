//! Per-state coefficient laws.
//!
//! Every law in the catalog has closed-form tail constants and absolute
//! moments, which is what lets the theory engine run without quadrature.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Sign of a tail or of the multiplier, `eta` in `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Which part of `E|M|^beta` to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Plus,
    Minus,
    Both,
}

impl From<Sign> for Orientation {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Plus => Orientation::Plus,
            Sign::Minus => Orientation::Minus,
        }
    }
}

/// Bounded law used for the body of a two-sided Pareto variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoreLaw {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Default for CoreLaw {
    fn default() -> Self {
        CoreLaw::Constant { value: 0.0 }
    }
}

impl CoreLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CoreLaw::Constant { value } => value,
            CoreLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            CoreLaw::Constant { value } => (value, value),
            CoreLaw::Uniform { lo, hi } => (lo, hi),
        }
    }
}

/// Law of the additive coefficient `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum QLaw {
    /// `P(eta Q > t) = q_eta t^{-alpha0}` exactly for `t >= t0`; with the
    /// remaining mass `Q` follows `core`, supported in `[-t0, t0]`.
    TwoSidedPareto {
        alpha0: f64,
        t0: f64,
        q_plus: f64,
        q_minus: f64,
        #[serde(default)]
        core: CoreLaw,
    },
    Constant {
        value: f64,
    },
    BoundedUniform {
        lo: f64,
        hi: f64,
    },
}

/// Law of the multiplicative coefficient `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MLaw {
    Constant {
        value: f64,
    },
    /// `a` with probability `p`, `-b` otherwise.
    TwoPoint {
        a: f64,
        p: f64,
        b: f64,
    },
    /// `log M` uniform on `[ln lo, ln hi]`.
    LogUniform {
        lo: f64,
        hi: f64,
    },
    /// Log-uniform magnitude; negative with probability `s`.
    SignedLogUniform {
        lo: f64,
        hi: f64,
        s: f64,
    },
}

/// Joint structure of a `(Q, M)` draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coupling {
    Independent,
    /// `Q = c (1 - M)`; the `q_law` of the pair is not used.
    DegenerateLine {
        c: f64,
    },
}

/// Joint law of one state's coefficient pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientLaw {
    pub q_law: QLaw,
    pub m_law: MLaw,
    pub coupling: Coupling,
}

/// Power-tail parameters of `Q`; bounded laws carry `alpha0 = +inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTail {
    pub q_plus: f64,
    pub q_minus: f64,
    pub alpha0: f64,
}

impl QTail {
    pub const BOUNDED: QTail = QTail {
        q_plus: 0.0,
        q_minus: 0.0,
        alpha0: f64::INFINITY,
    };

    pub fn is_bounded(&self) -> bool {
        self.alpha0.is_infinite()
    }
}

/// Inverse-CDF map of the Pareto branch: `t0 * u^{-1/alpha0}` for `u` in `(0, 1]`.
pub fn pareto_quantile(alpha0: f64, t0: f64, u: f64) -> f64 {
    t0 * u.powf(-1.0 / alpha0)
}

impl QLaw {
    /// Exact tail constants of the law.
    pub fn tail(&self) -> QTail {
        match *self {
            QLaw::TwoSidedPareto {
                alpha0,
                q_plus,
                q_minus,
                ..
            } if q_plus + q_minus > 0.0 => QTail {
                q_plus,
                q_minus,
                alpha0,
            },
            _ => QTail::BOUNDED,
        }
    }

    /// Value of a point-mass law.
    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            QLaw::Constant { value } => Some(value),
            QLaw::BoundedUniform { lo, hi } if lo == hi => Some(lo),
            QLaw::TwoSidedPareto {
                q_plus,
                q_minus,
                core,
                ..
            } if q_plus + q_minus == 0.0 => match core.bounds() {
                (lo, hi) if lo == hi => Some(lo),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            QLaw::TwoSidedPareto {
                alpha0,
                t0,
                q_plus,
                q_minus,
                core,
            } => {
                let weight = q_plus + q_minus;
                let tail_mass = weight * t0.powf(-alpha0);
                if rng.random::<f64>() < tail_mass {
                    let positive = rng.random::<f64>() * weight < q_plus;
                    let u = 1.0 - rng.random::<f64>();
                    let magnitude = pareto_quantile(alpha0, t0, u);
                    if positive {
                        magnitude
                    } else {
                        -magnitude
                    }
                } else {
                    core.sample(rng)
                }
            }
            QLaw::Constant { value } => value,
            QLaw::BoundedUniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    pub(crate) fn validate(&self) -> Result<(), (&'static str, String)> {
        match *self {
            QLaw::TwoSidedPareto {
                alpha0,
                t0,
                q_plus,
                q_minus,
                core,
            } => {
                positive_finite("alpha0", alpha0)?;
                positive_finite("t0", t0)?;
                nonneg_finite("q_plus", q_plus)?;
                nonneg_finite("q_minus", q_minus)?;
                let mass = (q_plus + q_minus) * t0.powf(-alpha0);
                if mass > 1.0 + 1e-12 {
                    return Err((
                        "q_plus",
                        format!("tail mass (q_plus + q_minus) t0^-alpha0 = {mass} exceeds 1"),
                    ));
                }
                let (lo, hi) = core.bounds();
                if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < -t0 || hi > t0 {
                    return Err((
                        "core",
                        format!("core law must lie in [-t0, t0] = [{}, {t0}]", -t0),
                    ));
                }
                Ok(())
            }
            QLaw::Constant { value } => finite("value", value),
            QLaw::BoundedUniform { lo, hi } => {
                finite("lo", lo)?;
                finite("hi", hi)?;
                if lo > hi {
                    return Err(("hi", format!("hi = {hi} is below lo = {lo}")));
                }
                Ok(())
            }
        }
    }
}

impl MLaw {
    /// `E(|M|^beta 1{sign M matches})`, in closed form.
    pub fn moment(&self, beta: f64, orientation: Orientation) -> f64 {
        let (plus_w, minus_w, magnitude_moment) = match *self {
            MLaw::Constant { value } => {
                let m = value.abs().powf(beta);
                if value > 0.0 {
                    (1.0, 0.0, m)
                } else {
                    (0.0, 1.0, m)
                }
            }
            MLaw::TwoPoint { a, p, b } => {
                let plus = p * a.powf(beta);
                let minus = (1.0 - p) * b.powf(beta);
                return match orientation {
                    Orientation::Plus => plus,
                    Orientation::Minus => minus,
                    Orientation::Both => plus + minus,
                };
            }
            MLaw::LogUniform { lo, hi } => (1.0, 0.0, log_uniform_moment(lo, hi, beta)),
            MLaw::SignedLogUniform { lo, hi, s } => (1.0 - s, s, log_uniform_moment(lo, hi, beta)),
        };
        match orientation {
            Orientation::Plus => plus_w * magnitude_moment,
            Orientation::Minus => minus_w * magnitude_moment,
            Orientation::Both => plus_w * magnitude_moment + minus_w * magnitude_moment,
        }
    }

    /// `E log|M|`.
    pub fn mean_log_abs(&self) -> f64 {
        match *self {
            MLaw::Constant { value } => value.abs().ln(),
            MLaw::TwoPoint { a, p, b } => weighted_log(p, a) + weighted_log(1.0 - p, b),
            MLaw::LogUniform { lo, hi } | MLaw::SignedLogUniform { lo, hi, .. } => {
                0.5 * (lo.ln() + hi.ln())
            }
        }
    }

    /// Attainable values of `log|M|` when the magnitude has finite support,
    /// `None` for a continuous magnitude.
    pub fn log_magnitude_support(&self) -> Option<Vec<f64>> {
        match *self {
            MLaw::Constant { value } => Some(vec![value.abs().ln()]),
            MLaw::TwoPoint { a, p, b } => {
                let mut v = Vec::new();
                if p > 0.0 {
                    v.push(a.ln());
                }
                if p < 1.0 {
                    v.push(b.ln());
                }
                Some(v)
            }
            MLaw::LogUniform { .. } | MLaw::SignedLogUniform { .. } => None,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            MLaw::Constant { value } => Some(value),
            MLaw::TwoPoint { a, p: 1.0, .. } => Some(a),
            MLaw::TwoPoint { b, p: 0.0, .. } => Some(-b),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MLaw::Constant { value } => value,
            MLaw::TwoPoint { a, p, b } => {
                if rng.random::<f64>() < p {
                    a
                } else {
                    -b
                }
            }
            MLaw::LogUniform { lo, hi } => sample_log_uniform(lo, hi, rng),
            MLaw::SignedLogUniform { lo, hi, s } => {
                let magnitude = sample_log_uniform(lo, hi, rng);
                if rng.random::<f64>() < s {
                    -magnitude
                } else {
                    magnitude
                }
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<(), (&'static str, String)> {
        match *self {
            MLaw::Constant { value } => {
                finite("value", value)?;
                if value == 0.0 {
                    return Err(("value", "constant multiplier must be nonzero".into()));
                }
                Ok(())
            }
            MLaw::TwoPoint { a, p, b } => {
                positive_finite("a", a)?;
                positive_finite("b", b)?;
                probability("p", p)
            }
            MLaw::LogUniform { lo, hi } => log_uniform_bounds(lo, hi),
            MLaw::SignedLogUniform { lo, hi, s } => {
                log_uniform_bounds(lo, hi)?;
                probability("s", s)
            }
        }
    }
}

impl CoefficientLaw {
    pub fn independent(q_law: QLaw, m_law: MLaw) -> Self {
        Self {
            q_law,
            m_law,
            coupling: Coupling::Independent,
        }
    }

    /// `Q = c (1 - M)`. The stored `q_law` is a placeholder point mass at `c`.
    pub fn degenerate_line(c: f64, m_law: MLaw) -> Self {
        Self {
            q_law: QLaw::Constant { value: c },
            m_law,
            coupling: Coupling::DegenerateLine { c },
        }
    }

    /// Tail constants of the effective `Q`.
    pub fn q_tail(&self) -> QTail {
        match self.coupling {
            Coupling::Independent => self.q_law.tail(),
            // c (1 - M) is bounded for every catalog M
            Coupling::DegenerateLine { .. } => QTail::BOUNDED,
        }
    }

    pub fn m_moment(&self, beta: f64, orientation: Orientation) -> f64 {
        self.m_law.moment(beta, orientation)
    }

    /// Whether `|Q|` is almost surely bounded.
    pub fn q_is_bounded(&self) -> bool {
        match self.coupling {
            Coupling::DegenerateLine { .. } => true,
            Coupling::Independent => !matches!(
                self.q_law,
                QLaw::TwoSidedPareto { q_plus, q_minus, .. } if q_plus + q_minus > 0.0
            ),
        }
    }

    /// Draws `(q, m)`.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let m = self.m_law.sample(rng);
        let q = match self.coupling {
            Coupling::Independent => self.q_law.sample(rng),
            Coupling::DegenerateLine { c } => c * (1.0 - m),
        };
        (q, m)
    }

    pub(crate) fn validate(&self) -> Result<(), (String, String)> {
        if let Coupling::Independent = self.coupling {
            self.q_law
                .validate()
                .map_err(|(f, m)| (format!("q_law.{f}"), m))?;
        }
        self.m_law
            .validate()
            .map_err(|(f, m)| (format!("m_law.{f}"), m))?;
        if let Coupling::DegenerateLine { c } = self.coupling {
            if !c.is_finite() {
                return Err(("coupling.c".into(), format!("c = {c} is not finite")));
            }
        }
        Ok(())
    }
}

/// `E M^beta` for `log M ~ U[ln lo, ln hi]`: `(hi^beta - lo^beta) / (beta ln(hi/lo))`.
pub fn log_uniform_moment(lo: f64, hi: f64, beta: f64) -> f64 {
    let width = hi.ln() - lo.ln();
    let x = beta * width;
    if x == 0.0 {
        return 1.0;
    }
    lo.powf(beta) * x.exp_m1() / x
}

fn sample_log_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    (a + (b - a) * rng.random::<f64>()).exp()
}

fn weighted_log(w: f64, x: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * x.ln()
    }
}

fn finite(field: &'static str, x: f64) -> Result<(), (&'static str, String)> {
    if x.is_finite() {
        Ok(())
    } else {
        Err((field, format!("{field} = {x} is not finite")))
    }
}

fn positive_finite(field: &'static str, x: f64) -> Result<(), (&'static str, String)> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err((field, format!("{field} = {x} must be positive and finite")))
    }
}

fn nonneg_finite(field: &'static str, x: f64) -> Result<(), (&'static str, String)> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err((
            field,
            format!("{field} = {x} must be nonnegative and finite"),
        ))
    }
}

fn probability(field: &'static str, x: f64) -> Result<(), (&'static str, String)> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err((field, format!("{field} = {x} is not a probability")))
    }
}

fn log_uniform_bounds(lo: f64, hi: f64) -> Result<(), (&'static str, String)> {
    positive_finite("lo", lo)?;
    positive_finite("hi", hi)?;
    if hi <= lo {
        return Err(("hi", format!("hi = {hi} must exceed lo = {lo}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn catalog() -> Vec<MLaw> {
        vec![
            MLaw::Constant { value: 0.5 },
            MLaw::Constant { value: -1.7 },
            MLaw::TwoPoint {
                a: 2.0,
                p: 0.25,
                b: 0.5,
            },
            MLaw::TwoPoint {
                a: 0.3,
                p: 1.0,
                b: 4.0,
            },
            MLaw::LogUniform {
                lo: E.powi(-2),
                hi: E,
            },
            MLaw::SignedLogUniform {
                lo: 0.2,
                hi: 3.0,
                s: 0.35,
            },
        ]
    }

    #[test]
    fn pareto_tail_params() {
        let q = QLaw::TwoSidedPareto {
            alpha0: 1.5,
            t0: 1.0,
            q_plus: 1.0,
            q_minus: 0.5,
            core: CoreLaw::default(),
        };
        let t = q.tail();
        assert_eq!((t.q_plus, t.q_minus, t.alpha0), (1.0, 0.5, 1.5));
    }

    #[test]
    fn bounded_laws_have_null_tail() {
        assert_eq!(QLaw::Constant { value: 3.0 }.tail(), QTail::BOUNDED);
        assert_eq!(
            QLaw::BoundedUniform { lo: -1.0, hi: 1.0 }.tail(),
            QTail::BOUNDED
        );
        assert!(QTail::BOUNDED.is_bounded());
    }

    #[test]
    fn two_point_moment() {
        let m = MLaw::TwoPoint {
            a: 2.0,
            p: 0.25,
            b: 0.5,
        };
        assert!((m.moment(1.0, Orientation::Both) - 0.875).abs() < 1e-15);
        assert!((m.moment(1.0, Orientation::Plus) - 0.5).abs() < 1e-15);
        assert!((m.moment(1.0, Orientation::Minus) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn log_uniform_zeroth_and_first_moment() {
        let m = MLaw::LogUniform {
            lo: E.powi(-2),
            hi: E,
        };
        assert_eq!(m.moment(0.0, Orientation::Both), 1.0);
        let m = MLaw::LogUniform { lo: 1.0, hi: E };
        assert!((m.moment(1.0, Orientation::Both) - (E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn orientation_parts_sum_to_total() {
        for law in catalog() {
            for beta in [0.5, 1.0, 2.0] {
                let plus = law.moment(beta, Orientation::Plus);
                let minus = law.moment(beta, Orientation::Minus);
                let both = law.moment(beta, Orientation::Both);
                assert!((plus + minus - both).abs() <= 1e-12, "{law:?} beta={beta}");
            }
        }
    }

    /// Adaptive Simpson on the log-scale density; independent of the closed form.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            let c = 0.5 * (a + b);
            (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, whole: f64, depth: u32) -> f64 {
            let c = 0.5 * (a + b);
            let left = simpson(f, a, c);
            let right = simpson(f, c, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, c, eps / 2.0, left, depth - 1) + rec(f, c, b, eps / 2.0, right, depth - 1)
            }
        }
        rec(f, a, b, eps, simpson(f, a, b), depth)
    }

    #[test]
    fn log_uniform_moment_matches_quadrature() {
        for (lo, hi) in [(E.powi(-2), E), (0.1, 0.9), (1.0, E), (0.5, 7.0)] {
            for beta in [0.25, 0.5, 1.0, 1.5407786053232954, 2.0, 3.5] {
                let (a, b) = (f64::ln(lo), f64::ln(hi));
                let density = 1.0 / (b - a);
                let f = move |x: f64| (beta * x).exp() * density;
                let oracle = adaptive_simpson(&f, a, b, 1e-13, 40);
                let closed = log_uniform_moment(lo, hi, beta);
                assert!(
                    (oracle - closed).abs() < 1e-9,
                    "lo={lo} hi={hi} beta={beta}: {oracle} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn pareto_inverse_cdf() {
        assert!((pareto_quantile(1.0, 1.0, 0.04) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_line_sample() {
        let law = CoefficientLaw::degenerate_line(2.0, MLaw::Constant { value: 0.25 });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(law.sample_pair(&mut rng), (1.5, 0.25));
    }

    #[test]
    fn constant_pair_sample() {
        let law = CoefficientLaw::independent(
            QLaw::Constant { value: 1.0 },
            MLaw::Constant { value: 0.5 },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            assert_eq!(law.sample_pair(&mut rng), (1.0, 0.5));
        }
    }

    #[test]
    fn pareto_empirical_tail_frequencies() {
        let (alpha0, t0, q_plus, q_minus) = (1.5, 2.0, 1.2, 0.8);
        let q = QLaw::TwoSidedPareto {
            alpha0,
            t0,
            q_plus,
            q_minus,
            core: CoreLaw::Uniform { lo: -t0, hi: t0 },
        };
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(20240611);
        let draws: Vec<f64> = (0..n).map(|_| q.sample(&mut rng)).collect();
        for (sign, weight) in [(1.0, q_plus), (-1.0, q_minus)] {
            for t in [t0, 2.0 * t0, 10.0 * t0] {
                let p = weight * f64::powf(t, -alpha0);
                let hits = draws.iter().filter(|&&x| sign * x > t).count() as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                let z = (hits / n as f64 - p) / se;
                assert!(z.abs() < 4.0, "sign {sign} t {t}: z = {z}");
            }
        }
    }

    #[test]
    fn validation_catches_bad_parameters() {
        assert!(MLaw::Constant { value: 0.0 }.validate().is_err());
        assert!(MLaw::TwoPoint {
            a: 2.0,
            p: 1.5,
            b: 0.5
        }
        .validate()
        .is_err());
        assert!(MLaw::LogUniform { lo: 2.0, hi: 1.0 }.validate().is_err());
        let too_heavy = QLaw::TwoSidedPareto {
            alpha0: 1.0,
            t0: 1.0,
            q_plus: 1.0,
            q_minus: 0.5,
            core: CoreLaw::default(),
        };
        assert_eq!(too_heavy.validate().unwrap_err().0, "q_plus");
        for law in catalog() {
            law.validate().unwrap();
        }
    }
}
