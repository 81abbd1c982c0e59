//! The conjectured closed form
//!
//! ```text
//! P(alpha) = sum_{i >= 0} f(alpha + i)
//!
//! f(a) = q(a) 2^(-4a-6) Gamma(3a + 5/2) Gamma(5a + 2)
//!        / (3 Gamma(a + 1) Gamma(2a + 3) Gamma(5a + 13/2))
//! ```
//!
//! with the quintic `q` below. `P(1/2)`, `P(1)` and `P(2)` are the conjectured
//! separability probabilities of two rebits, two qubits and two quaterbits.

use crate::{Error, Result};

/// Coefficients of `q`, highest degree first.
pub const Q_COEFFS: [f64; 6] = [185000.0, 779750.0, 1289125.0, 1042015.0, 410694.0, 63000.0];

/// Limit of `f(a + 1) / f(a)` as `a -> infinity`. The ratio increases
/// towards it from below.
pub const RATIO_LIMIT: f64 = 27.0 / 64.0;

pub const MAX_TERMS: usize = 10_000;

pub fn q_poly(alpha: f64) -> f64 {
    Q_COEFFS.iter().fold(0.0, |acc, &c| acc * alpha + c)
}

/// `ln Gamma(x)` for `x > 0`: the argument is shifted to at least 20 with the
/// recurrence, then the Stirling series is summed through the `B_14` term,
/// whose truncation error there is below 1e-20.
fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut x = x;
    let mut shift = 1.0;
    while x < 20.0 {
        shift *= x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360360.0 + inv2 / 156.0))))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - shift.ln()
}

fn ln_f(alpha: f64) -> f64 {
    q_poly(alpha).ln() + (-4.0 * alpha - 6.0) * std::f64::consts::LN_2 + ln_gamma(3.0 * alpha + 2.5)
        + ln_gamma(5.0 * alpha + 2.0)
        - 3f64.ln()
        - ln_gamma(alpha + 1.0)
        - ln_gamma(2.0 * alpha + 3.0)
        - ln_gamma(5.0 * alpha + 6.5)
}

/// The series term `f(alpha)`, evaluated in log space.
pub fn f_term(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain { alpha });
    }
    Ok(ln_f(alpha).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesResult {
    pub alpha: f64,
    pub value: f64,
    pub terms_used: usize,
    /// Upper bound on the omitted tail `sum_{i >= terms_used} f(alpha + i)`.
    pub tail_bound: f64,
    pub rel_tol: f64,
}

/// Sums `f(alpha + i)` until the tail bound drops below `rel_tol` times the
/// partial sum.
///
/// After adding term `t_i`, the remaining terms are bounded by the geometric
/// series `t_i * r / (1 - r)` with `r = max(t_{i+1} / t_i, 27/64)`: the term
/// ratios increase monotonically to 27/64, so neither the last observed ratio
/// nor any later one exceeds `r`.
pub fn p_of_alpha(alpha: f64, rel_tol: f64) -> Result<SeriesResult> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain { alpha });
    }
    if !(rel_tol > 0.0 && rel_tol <= 1e-6) {
        return Err(Error::InvalidArgument(format!(
            "relative tolerance must lie in (0, 1e-6], got {rel_tol}"
        )));
    }
    let mut sum = 0.0;
    let mut term = ln_f(alpha).exp();
    for i in 0..MAX_TERMS {
        sum += term;
        let next = ln_f(alpha + (i + 1) as f64).exp();
        let ratio = next / term;
        if !(ratio < 1.0) {
            return Err(Error::SeriesDivergence { index: i, ratio });
        }
        let r = ratio.max(RATIO_LIMIT);
        let tail_bound = term * r / (1.0 - r);
        if tail_bound <= rel_tol * sum {
            return Ok(SeriesResult {
                alpha,
                value: sum,
                terms_used: i + 1,
                tail_bound,
                rel_tol,
            });
        }
        term = next;
    }
    Err(Error::SeriesCap { terms: MAX_TERMS })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gamma at a positive integer or half-integer, from the factorial
    /// formulas; no logarithms involved.
    fn gamma_exact(x: f64) -> f64 {
        let twice = (2.0 * x).round();
        assert_eq!(twice, 2.0 * x, "{x} is not a half-integer");
        if twice % 2.0 == 0.0 {
            (1..x as u64).map(|k| k as f64).product()
        } else {
            // Gamma(n + 1/2) = (2n)! / (4^n n!) sqrt(pi) = sqrt(pi) prod_{k=1}^{n} (k - 1/2)
            let n = (x - 0.5) as u64;
            std::f64::consts::PI.sqrt() * (1..=n).map(|k| k as f64 - 0.5).product::<f64>()
        }
    }

    fn f_direct(a: f64) -> f64 {
        q_poly(a) * 2f64.powf(-4.0 * a - 6.0) * gamma_exact(3.0 * a + 2.5) * gamma_exact(5.0 * a + 2.0)
            / (3.0 * gamma_exact(a + 1.0) * gamma_exact(2.0 * a + 3.0) * gamma_exact(5.0 * a + 6.5))
    }

    #[test]
    fn ln_gamma_at_exact_points() {
        for k in 2..60 {
            let x = k as f64 * 0.5;
            let exact = gamma_exact(x).ln();
            assert!((ln_gamma(x) - exact).abs() < 1e-14 * exact.abs().max(1.0), "x = {x}");
        }
        assert!(ln_gamma(1.0).abs() < 1e-15);
        assert!(ln_gamma(2.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_values() {
        assert_eq!(q_poly(0.0), 63000.0);
        assert_eq!(q_poly(1.0), 3769584.0);
        let by_terms: f64 = Q_COEFFS
            .iter()
            .enumerate()
            .map(|(i, c)| c * (-1f64).powi(5 - i as i32))
            .sum();
        assert_eq!(q_poly(-1.0), by_terms);
        assert_eq!(q_poly(-1.0), -54.0);
    }

    #[test]
    fn term_matches_direct_product() {
        for k in 0..=6 {
            let a = k as f64 * 0.5;
            let lhs = f_term(a).unwrap();
            let rhs = f_direct(a);
            assert!(((lhs - rhs) / rhs).abs() < 1e-13, "alpha {a}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn term_domain_and_positivity() {
        assert!(matches!(f_term(-0.5), Err(Error::Domain { .. })));
        assert!(f_term(f64::NAN).is_err());
        for k in 0..=100 {
            assert!(f_term(k as f64 * 0.1).unwrap() > 0.0);
        }
    }

    #[test]
    fn term_ratio_approaches_limit() {
        let mut prev = 0.0;
        for i in 0..60 {
            let r = f_term(i as f64 + 1.0).unwrap() / f_term(i as f64).unwrap();
            assert!(r > prev && r < RATIO_LIMIT, "ratio {r} at {i}");
            prev = r;
        }
        let r50 = f_term(51.0).unwrap() / f_term(50.0).unwrap();
        assert!((r50 / RATIO_LIMIT - 1.0).abs() < 0.01);
    }

    #[test]
    fn rational_values() {
        for (alpha, exact) in [(0.5, 29.0 / 64.0), (1.0, 8.0 / 33.0), (2.0, 26.0 / 323.0), (0.0, 1.0)] {
            let s = p_of_alpha(alpha, 1e-12).unwrap();
            assert!((s.value - exact).abs() < 1e-10, "P({alpha}) = {}", s.value);
            assert!(s.tail_bound <= s.rel_tol * s.value);
            // the bound really bounds the omitted tail
            assert!(exact - s.value <= s.tail_bound + 1e-14, "{}", exact - s.value);
        }
    }

    #[test]
    fn partial_sums_increase() {
        let s = p_of_alpha(1.0, 1e-12).unwrap();
        let mut partial = 0.0;
        for i in 0..s.terms_used {
            let next = partial + f_term(1.0 + i as f64).unwrap();
            assert!(next > partial);
            partial = next;
        }
        assert!(partial <= s.value + s.tail_bound);
        assert_eq!(partial, s.value);
    }

    #[test]
    fn argument_checks() {
        assert!(matches!(p_of_alpha(-1.0, 1e-12), Err(Error::Domain { .. })));
        assert!(p_of_alpha(1.0, 0.0).is_err());
        assert!(p_of_alpha(1.0, 1e-3).is_err());
        assert!(p_of_alpha(1.0, 1e-15).is_ok());
    }

    #[test]
    fn monotone_in_alpha() {
        let p = |a| p_of_alpha(a, 1e-12).unwrap().value;
        assert!(p(0.5) > p(1.0) && p(1.0) > p(2.0));
    }
}
