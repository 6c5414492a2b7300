//! Digamma via upward recurrence into the asymptotic regime.

use super::gamma::EULER_GAMMA;
use crate::{Error, Result};

/// B_{2k} / (2k) for k = 1..=8: coefficients of the asymptotic expansion
/// psi(x) ~ ln x - 1/(2x) - sum B_{2k} / (2k x^{2k}).
const ASYMP: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

/// psi(x) = Gamma'(x) / Gamma(x) for x > 0.
///
/// Shifts x up with psi(x+1) = psi(x) + 1/x until x >= 10, then applies the
/// Bernoulli expansion; absolute error below 1e-12 on [1e-3, 1e3].
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    let mut shift = 0.0;
    let mut t = x;
    while t < 10.0 {
        shift -= 1.0 / t;
        t += 1.0;
    }
    let inv2 = 1.0 / (t * t);
    let mut corr = 0.0;
    let mut p = inv2;
    for c in ASYMP {
        corr -= c * p;
        p *= inv2;
    }
    Ok(shift + t.ln() - 0.5 / t + corr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn digamma_at_one_is_minus_gamma() {
        assert_abs_diff_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, epsilon = 1e-14);
    }

    #[test]
    fn digamma_half_and_two() {
        // psi(1/2) = -gamma - 2 ln 2 (duplication formula)
        assert_abs_diff_eq!(
            digamma(0.5).unwrap(),
            -EULER_GAMMA - 2.0 * std::f64::consts::LN_2,
            epsilon = 1e-13
        );
        // psi(2) = 1 - gamma
        assert_abs_diff_eq!(digamma(2.0).unwrap(), 1.0 - EULER_GAMMA, epsilon = 1e-13);
    }

    #[test]
    fn digamma_matches_oracle() {
        let cases = [
            (1e-3, -1000.575_571_931_810_3),
            (0.01, -100.560_885_457_868_67),
            (0.35, -2.971_070_869_825_945_4),
            (0.999, -0.578_861_802_108_645_4),
            (1.5, 0.036_489_973_978_576_52),
            (3.2, 0.998_838_891_286_599_58),
            (9.99, 2.250_700_372_831_201_1),
            (10.01, 2.252_803_700_318_135_8),
            (123.0, 4.808_113_806_573_254_8),
            (1000.0, 6.907_255_195_648_812_1),
        ];
        for (x, want) in cases {
            let got = digamma(x).unwrap();
            assert!(
                (got - want).abs() < 1e-12 * want.abs().max(1.0),
                "x={x}: got {got} want {want}"
            );
        }
    }

    #[test]
    fn digamma_recurrence_property() {
        for i in 0..300 {
            let x = 0.004 + i as f64 * 0.83;
            let lhs = digamma(x + 1.0).unwrap();
            let rhs = digamma(x).unwrap() + 1.0 / x;
            assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()), "x={x}");
        }
    }

    #[test]
    fn digamma_duplication_property() {
        // psi(2x) = (psi(x) + psi(x + 1/2)) / 2 + ln 2
        for i in 1..200 {
            let x = i as f64 * 0.21;
            let lhs = digamma(2.0 * x).unwrap();
            let rhs = 0.5 * (digamma(x).unwrap() + digamma(x + 0.5).unwrap())
                + std::f64::consts::LN_2;
            assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()), "x={x}");
        }
    }

    #[test]
    fn digamma_rejects_nonpositive() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.0).is_err());
    }
}
