//! Closed-form spectral inequalities for the half logarithmic Laplacian.
//!
//! Everything here is an elementary function of the dimension constants; the
//! heavy numerics live in `domains` and `solver`. Formulas are kept exactly
//! as published, including the four lower bounds `b1..b4` for the first
//! eigenvalue of the unit ball that the comparison table is built from.

use crate::specfun::{constants_for, digamma, gamma_ln, EULER_GAMMA};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// The four lower bounds for lambda_1(B_d) plus their maximum.
/// `b2` is undefined in dimension 1.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Lambda1Bounds {
    pub d: u32,
    pub b1: f64,
    pub b2: Option<f64>,
    pub b3: f64,
    pub b4: f64,
    pub best: f64,
}

/// Parameters of the exact lower trace bound.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TraceBoundParams {
    pub d: u32,
    pub volume: f64,
    pub tau: f64,
    pub c_tau: f64,
}

impl TraceBoundParams {
    pub fn new(d: u32, volume: f64, tau: f64, c_tau: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be >= 1".into()));
        }
        if !(volume > 0.0) {
            return Err(Error::Domain(format!("volume must be positive, got {volume}")));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Domain(format!("tau must lie in (0,1), got {tau}")));
        }
        if !(c_tau >= 0.0) {
            return Err(Error::Domain(format!("c_tau must be >= 0, got {c_tau}")));
        }
        Ok(TraceBoundParams { d, volume, tau, c_tau })
    }
}

/// Berezin-type upper bound for the Riesz mean:
/// sum_k (lambda - lambda_k)_+ <= (2 pi)^(-d) |Omega| e^(d lambda) |B_d| / d.
pub fn riesz_upper(d: u32, volume: f64, lambda: f64) -> Result<f64> {
    let c = constants_for(d)?;
    require_volume(volume)?;
    let df = d as f64;
    Ok(volume * c.ball_volume / ((2.0 * PI).powi(d as i32) * df) * (df * lambda).exp())
}

/// Upper bound for the counting function:
/// N(lambda) <= e^(lambda d + 1) (2 pi)^(-d) |Omega| |B_d|.
pub fn count_upper(d: u32, volume: f64, lambda: f64) -> Result<f64> {
    let c = constants_for(d)?;
    require_volume(volume)?;
    let df = d as f64;
    Ok((lambda * df + 1.0).exp() * volume * c.ball_volume / (2.0 * PI).powi(d as i32))
}

/// Lower bound for the first eigenvalue of any open set of finite measure:
/// lambda_1 >= (1/d) log( (2 pi)^d / (e |Omega| |B_d|) ).
pub fn lambda1_lower_general(d: u32, volume: f64) -> Result<f64> {
    let c = constants_for(d)?;
    require_volume(volume)?;
    let df = d as f64;
    Ok(((2.0 * PI).powi(d as i32) / (std::f64::consts::E * volume * c.ball_volume)).ln() / df)
}

/// The four published lower bounds for lambda_1 of the unit ball.
pub fn lambda1_ball_bounds(d: u32) -> Result<Lambda1Bounds> {
    let c = constants_for(d)?;
    let df = d as f64;
    let b1 = 2.0 / df * gamma_ln(df / 2.0)? + LN_2 + 2.0 / df * (df / 2.0).ln() - 1.0 / df;
    let b2 = if d >= 2 {
        let correction = 2f64.powi(d as i32 + 1) * c.ball_volume * c.ball_volume
            * (df + 2.0).powf(df / 2.0)
            / (df * (2.0 * PI).powi(2 * d as i32));
        Some((2.0 * (df + 2.0).sqrt()).ln() - correction)
    } else {
        None
    };
    let b3 = digamma(df / 4.0)? + LN_2;
    let b4 = c.zeta;
    let mut best = b1.max(b3).max(b4);
    if let Some(v) = b2 {
        best = best.max(v);
    }
    Ok(Lambda1Bounds { d, b1, b2, b3, b4, best })
}

/// Transfer a unit-ball lower bound to a set of the given measure:
/// lambda_1(Omega) >= bound(B_d) + (1/d) log(|B_d| / |Omega|).
/// Valid for bounded Lipschitz Omega (Faber-Krahn plus scaling); the caller
/// is responsible for the geometry hypothesis.
pub fn faber_krahn_transfer(d: u32, volume: f64, lambda1_ball_lower: f64) -> Result<f64> {
    let c = constants_for(d)?;
    require_volume(volume)?;
    Ok(lambda1_ball_lower + (c.ball_volume / volume).ln() / d as f64)
}

/// Exact lower bound for the Riesz mean at lambda >= 2 C_{Omega,tau}:
///
/// (|Omega| |B_d| / ((2 pi)^d d)) [ e^(d L) - a_tau C e^((d-tau) L)
///   - b_tau C^2 e^((d-2 tau) L) - (d L + 1) ]
///
/// with a_tau = (d(d-tau)-1)/(d-tau) and b_tau = 4 d tau. The value may be
/// negative (a vacuous but valid lower bound); it is reported unclamped.
pub fn riesz_lower_exact(params: &TraceBoundParams, lambda: f64) -> Result<f64> {
    if params.d < 2 {
        return Err(Error::Domain(
            "riesz_lower_exact requires d >= 2".into(),
        ));
    }
    let c_tau = params.c_tau;
    if lambda < 2.0 * c_tau {
        return Err(Error::Domain(format!(
            "riesz_lower_exact requires lambda >= 2 C_tau = {:.6}, got {lambda}",
            2.0 * c_tau
        )));
    }
    let c = constants_for(params.d)?;
    let df = params.d as f64;
    let tau = params.tau;
    let a_tau = (df * (df - tau) - 1.0) / (df - tau);
    let b_tau = 4.0 * df * tau;
    let bracket = (df * lambda).exp()
        - a_tau * c_tau * ((df - tau) * lambda).exp()
        - b_tau * c_tau * c_tau * ((df - 2.0 * tau) * lambda).exp()
        - (df * lambda + 1.0);
    Ok(params.volume * c.ball_volume / ((2.0 * PI).powi(params.d as i32) * df) * bracket)
}

/// Weyl-limit constants: e^(-d L) * Riesz mean -> riesz_const and
/// e^(-d L) * N(L) -> count_const as L -> infinity.
pub fn weyl_constants(d: u32, volume: f64) -> Result<(f64, f64)> {
    let c = constants_for(d)?;
    require_volume(volume)?;
    let riesz = volume * c.ball_volume / ((2.0 * PI).powi(d as i32) * d as f64);
    Ok((riesz, d as f64 * riesz))
}

/// Whether log(1 + r/s) <= max(1/s, 1/s^tau) (1+r)^tau log(1+r).
/// True for all r >= 0, s > 0, tau in (0,1).
pub fn elem_log_bound_check(r: f64, s: f64, tau: f64) -> Result<bool> {
    if !(r >= 0.0) || !(s > 0.0) || !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!(
            "elem_log_bound_check requires r >= 0, s > 0, tau in (0,1); got r={r}, s={s}, tau={tau}"
        )));
    }
    let lhs = (r / s).ln_1p();
    let rhs = (1.0 / s).max(s.powf(-tau)) * (1.0 + r).powf(tau) * r.ln_1p();
    // one-ulp guard: near r = 0 the analytic gap is O(r^2) and can drop
    // below double rounding of the two sides
    Ok(lhs <= rhs + 1e-14 * rhs.abs().max(1e-300))
}

/// Leading large-d expressions of the four ball bounds, in table order:
/// (log d - 1, log sqrt(d+2) + log 2, log d - log 2, log sqrt(d) + log 2 - gamma/2).
pub fn asymptotic_bounds(d: u32) -> Result<(f64, f64, f64, f64)> {
    if d == 0 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    let df = d as f64;
    Ok((
        df.ln() - 1.0,
        (df + 2.0).sqrt().ln() + LN_2,
        df.ln() - LN_2,
        df.sqrt().ln() + LN_2 - 0.5 * EULER_GAMMA,
    ))
}

fn require_volume(volume: f64) -> Result<()> {
    if volume > 0.0 && volume.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("volume must be positive and finite, got {volume}")))
    }
}

/// Round half away from zero at two decimals (the table convention).
pub fn round2(x: f64) -> f64 {
    (x.abs() * 100.0 + 0.5).floor() / 100.0 * x.signum()
}

/// The published d = 1..10 comparison table of (b1, b2, b3, b4) at two
/// decimals; `None` marks the undefined b2 entry in dimension 1.
pub const BALL_BOUND_TABLE: [(u32, f64, Option<f64>, f64, f64); 10] = [
    (1, -0.55, None, -3.53, -0.58),
    (2, 0.19, Some(1.28), -1.27, 0.12),
    (3, 0.55, Some(1.48), -0.39, 0.42),
    (4, 0.79, Some(1.59), 0.12, 0.62),
    (5, 0.97, Some(1.67), 0.47, 0.76),
    (6, 1.12, Some(1.73), 0.73, 0.87),
    (7, 1.25, Some(1.79), 0.94, 0.96),
    (8, 1.36, Some(1.84), 1.12, 1.03),
    (9, 1.46, Some(1.89), 1.27, 1.10),
    (10, 1.55, Some(1.94), 1.40, 1.16),
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn riesz_upper_examples() {
        // (2, pi, 1) -> e^2 / 8
        assert_relative_eq!(
            riesz_upper(2, PI, 1.0).unwrap(),
            std::f64::consts::E.powi(2) / 8.0,
            max_relative = 1e-13
        );
        // (1, 1, 0) -> 1/pi
        assert_relative_eq!(riesz_upper(1, 1.0, 0.0).unwrap(), 1.0 / PI, max_relative = 1e-13);
        // exponent law: ratio e^{2 log 2} = 4
        let a = riesz_upper(2, PI, 0.7).unwrap();
        let b = riesz_upper(2, PI, 0.7 + LN_2).unwrap();
        assert_relative_eq!(b / a, 4.0, max_relative = 1e-13);
    }

    #[test]
    fn count_upper_examples() {
        assert_relative_eq!(
            count_upper(2, PI, 0.0).unwrap(),
            std::f64::consts::E / 4.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            count_upper(1, 2.0, 0.0).unwrap(),
            2.0 * std::f64::consts::E / PI,
            max_relative = 1e-13
        );
        // algebraic identity: N-bound = e d * Riesz-bound
        for d in 1..=6 {
            let l = 0.37;
            assert_relative_eq!(
                count_upper(d, 1.7, l).unwrap(),
                std::f64::consts::E * d as f64 * riesz_upper(d, 1.7, l).unwrap(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn lambda1_lower_general_examples() {
        assert_relative_eq!(
            lambda1_lower_general(2, PI).unwrap(),
            0.5 * (4.0 / std::f64::consts::E).ln(),
            max_relative = 1e-13
        );
        // threshold volume gives exactly zero
        for d in 1..=5u32 {
            let c = constants_for(d).unwrap();
            let v = (2.0 * PI).powi(d as i32) / (std::f64::consts::E * c.ball_volume);
            assert!(lambda1_lower_general(d, v).unwrap().abs() < 1e-13);
        }
        // paper value b1(1) = -0.55 at |Omega| = 2 = |B_1|
        assert_relative_eq!(
            lambda1_lower_general(1, 2.0).unwrap(),
            (PI / (2.0 * std::f64::consts::E)).ln(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn ball_bounds_reproduce_published_table() {
        for (d, b1, b2, b3, b4) in BALL_BOUND_TABLE {
            let b = lambda1_ball_bounds(d).unwrap();
            assert_eq!(round2(b.b1), b1, "b1({d})");
            assert_eq!(b.b2.map(round2), b2, "b2({d})");
            assert_eq!(round2(b.b3), b3, "b3({d})");
            assert_eq!(round2(b.b4), b4, "b4({d})");
        }
    }

    #[test]
    fn b1_is_general_bound_at_unit_ball() {
        for d in 1..=12u32 {
            let c = constants_for(d).unwrap();
            let general = lambda1_lower_general(d, c.ball_volume).unwrap();
            let b = lambda1_ball_bounds(d).unwrap();
            assert!(
                (general - b.b1).abs() < 1e-13,
                "d={d}: {general} vs {}",
                b.b1
            );
        }
    }

    #[test]
    fn best_skips_undefined_b2() {
        let b = lambda1_ball_bounds(1).unwrap();
        assert!(b.b2.is_none());
        assert_relative_eq!(b.best, b.b1, max_relative = 1e-14); // b1(1) is the max
        let b = lambda1_ball_bounds(2).unwrap();
        assert_relative_eq!(b.best, b.b2.unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn faber_krahn_transfer_examples() {
        let b = 0.4321;
        assert_relative_eq!(
            faber_krahn_transfer(2, 1.0, b).unwrap(),
            b + 0.5 * PI.ln(),
            max_relative = 1e-13
        );
        // the ball itself: zero shift
        for d in 1..=6u32 {
            let c = constants_for(d).unwrap();
            assert_relative_eq!(
                faber_krahn_transfer(d, c.ball_volume, b).unwrap(),
                b,
                max_relative = 1e-13
            );
        }
        // r = 2 scaling: volume 4 pi shifts by -log 2
        assert_relative_eq!(
            faber_krahn_transfer(2, 4.0 * PI, b).unwrap(),
            b - LN_2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn riesz_lower_exact_coefficients_and_sandwich() {
        let p = TraceBoundParams::new(2, PI, 0.5, 1.0).unwrap();
        // a_tau = 4/3, b_tau = 4 at d=2, tau=1/2
        let df = 2.0;
        let a_tau = (df * (df - 0.5) - 1.0) / (df - 0.5);
        assert_relative_eq!(a_tau, 4.0 / 3.0, max_relative = 1e-15);
        // sandwich against the upper bound on a lambda grid
        for i in 0..200 {
            let lambda = 2.0 + i as f64 * 0.05;
            let lo = riesz_lower_exact(&p, lambda).unwrap();
            let hi = riesz_upper(2, PI, lambda).unwrap();
            assert!(lo <= hi, "lambda={lambda}: {lo} > {hi}");
        }
    }

    #[test]
    fn riesz_lower_exact_formal_c_zero_limit() {
        let p = TraceBoundParams::new(2, PI, 0.5, 0.0).unwrap();
        let lambda = 1.3;
        let c = constants_for(2).unwrap();
        let pref = PI * c.ball_volume / ((2.0 * PI).powi(2) * 2.0);
        let want = riesz_upper(2, PI, lambda).unwrap() - pref * (2.0 * lambda + 1.0);
        assert_relative_eq!(riesz_lower_exact(&p, lambda).unwrap(), want, max_relative = 1e-13);
    }

    #[test]
    fn riesz_lower_exact_rejects_bad_inputs() {
        let p = TraceBoundParams::new(2, PI, 0.5, 1.0).unwrap();
        assert!(riesz_lower_exact(&p, 1.9).is_err()); // lambda < 2C
        let p1 = TraceBoundParams::new(1, 2.0, 0.5, 1.0).unwrap();
        assert!(riesz_lower_exact(&p1, 10.0).is_err()); // d < 2
    }

    #[test]
    fn weyl_constants_examples() {
        let (r, n) = weyl_constants(2, 1.0).unwrap();
        assert_relative_eq!(r, 1.0 / (8.0 * PI), max_relative = 1e-13);
        assert_relative_eq!(n, 1.0 / (4.0 * PI), max_relative = 1e-13);
        let (r1, n1) = weyl_constants(1, 2.0).unwrap();
        assert_relative_eq!(r1, 2.0 / PI, max_relative = 1e-13);
        assert_relative_eq!(n1, 2.0 / PI, max_relative = 1e-13);
        // count_const = e^{-1} count_upper(d, V, 0)
        for d in 1..=5 {
            let (_, n) = weyl_constants(d, 0.9).unwrap();
            assert_relative_eq!(
                n,
                count_upper(d, 0.9, 0.0).unwrap() / std::f64::consts::E,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn elem_log_bound_examples_and_sweep() {
        assert!(elem_log_bound_check(0.0, 0.7, 0.4).unwrap());
        assert!(elem_log_bound_check(3.0, 1.0, 0.5).unwrap());
        assert!(elem_log_bound_check(5.0, 0.3, 0.5).unwrap());
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let r = rng.gen_range(0.0..100.0);
            let s = rng.gen_range(1e-3..100.0);
            let tau = rng.gen_range(1e-6..1.0 - 1e-6);
            assert!(
                elem_log_bound_check(r, s, tau).unwrap(),
                "violated at r={r}, s={s}, tau={tau}"
            );
        }
    }

    #[test]
    fn asymptotics_match_bounds_at_large_d() {
        let d = 100;
        let (_a1, _a2, a3, _a4) = asymptotic_bounds(d).unwrap();
        assert_relative_eq!(a3, (100.0f64).ln() - LN_2, max_relative = 1e-14);
        // gap is psi(d/4) - ln(d/4) ~ -2/d, i.e. -0.0201 at d = 100
        let b = lambda1_ball_bounds(d).unwrap();
        assert!((b.b3 - a3).abs() < 0.025, "b3 asymptotics: {} vs {a3}", b.b3);
        // ordering for d >= 60: expr3 > expr1 > expr2 > expr4
        for d in 60..=200u32 {
            let (e1, e2, e3, e4) = asymptotic_bounds(d).unwrap();
            assert!(e3 > e1 && e1 > e2 && e2 > e4, "d={d}");
        }
    }

    #[test]
    fn monotonicity_in_lambda_and_volume() {
        let mut prev_r = f64::NEG_INFINITY;
        let mut prev_n = f64::NEG_INFINITY;
        for i in 0..100 {
            let l = -3.0 + 0.1 * i as f64;
            let r = riesz_upper(2, 1.0, l).unwrap();
            let n = count_upper(2, 1.0, l).unwrap();
            assert!(r > prev_r && n > prev_n);
            prev_r = r;
            prev_n = n;
        }
        assert!(riesz_upper(3, 2.0, 0.5).unwrap() > riesz_upper(3, 1.0, 0.5).unwrap());
        assert!(count_upper(3, 2.0, 0.5).unwrap() > count_upper(3, 1.0, 0.5).unwrap());
    }

    #[test]
    fn round2_half_away_from_zero() {
        assert_eq!(round2(0.1159), 0.12);
        assert_eq!(round2(-0.5772), -0.58);
        assert_eq!(round2(1.9356), 1.94);
        assert_eq!(round2(-3.534), -3.53);
    }
}
