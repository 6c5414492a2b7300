//! Bessel functions of the first kind for real order nu >= 0.
//!
//! Three evaluation routes, picked per argument:
//!
//! * ascending power series where its largest term stays small enough that
//!   cancellation cannot eat the 1e-10 budget;
//! * the Hankel large-argument expansion when its terms provably bottom out
//!   below tolerance (fast path for the small orders the quadrature engines
//!   hammer on);
//! * Schlaefli's integral representation otherwise. The oscillatory integral
//!   over [0, pi] is entire, so composite Gauss panels converge spectrally;
//!   the exponential correction term vanishes for integer order.

use super::gamma::gamma_ln_unchecked;
use crate::quad::{self, rule};
use crate::{Error, Result};
use std::f64::consts::PI;

/// J_nu(x) for nu >= 0, x >= 0; absolute error <= 1e-10 for nu <= 30, x <= 200.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "bessel_j requires nu >= 0 and x >= 0, got nu={nu}, x={x}"
        )));
    }
    Ok(bessel_j_inner(nu, x))
}

fn bessel_j_inner(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if series_is_safe(nu, x) {
        return series(nu, x);
    }
    if let Some(v) = hankel(nu, x) {
        return v;
    }
    integral_rep(nu, x)
}

/// Largest series term, predicted from Stirling; the series is used only when
/// cancellation ~ eps * t_max stays well under the error budget.
fn series_is_safe(nu: f64, x: f64) -> bool {
    if x <= 12.0 {
        return true;
    }
    let m_peak = (0.5 * ((nu * nu + x * x).sqrt() - nu) - 1.0).max(0.0);
    let ln_half_x = (0.5 * x).ln();
    let ln_peak = (2.0 * m_peak + nu) * ln_half_x
        - gamma_ln_unchecked(m_peak + 1.0)
        - gamma_ln_unchecked(m_peak + nu + 1.0);
    ln_peak <= 11.5 // max term <= ~1e5
}

/// Ascending series via the normalized ratio: J = R * (x/2)^nu / Gamma(nu+1),
/// R = sum (-1)^m (x^2/4)^m / (m! (nu+1)...(nu+m)). Valid for nu > -1.
pub(crate) fn series_ratio(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..400 {
        let mf = m as f64;
        term *= -q / (mf * (nu + mf));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) && q < mf * (nu + mf) {
            break;
        }
    }
    sum
}

fn series(nu: f64, x: f64) -> f64 {
    let ratio = series_ratio(nu, x);
    let ln_pref = nu * (0.5 * x).ln() - gamma_ln_unchecked(nu + 1.0);
    ratio * ln_pref.exp()
}

/// Hankel expansion; returns None unless the term sequence decays below
/// tolerance before it starts diverging.
fn hankel(nu: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut converged = false;
    for k in 1..40 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let a_next = a * (mu - odd * odd) / (kf * 8.0 * x);
        if a_next.abs() >= a.abs() && k > 2 {
            break; // asymptotic series bottomed out above tolerance
        }
        a = a_next;
        let signed = match k % 4 {
            0 => a,
            1 => a,
            2 => -a,
            _ => -a,
        };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if a.abs() < 5e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    Some((2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin()))
}

/// Schlaefli: J_nu(x) = (1/pi) int_0^pi cos(x sin t - nu t) dt
///                     - sin(nu pi)/pi int_0^inf exp(-x sinh s - nu s) ds.
/// Reached only for x > 12, where the exponential tail is short.
fn integral_rep(nu: f64, x: f64) -> f64 {
    let g = rule(24);
    let panels = ((x + nu) / 7.0).ceil() as usize + 2;
    let h = PI / panels as f64;
    let mut osc = 0.0;
    for i in 0..panels {
        let a = i as f64 * h;
        osc += g.integrate(a, a + h, |t| (x * t.sin() - nu * t).cos());
    }
    osc /= PI;

    let sin_nu_pi = (nu * PI).sin();
    if (nu - nu.round()).abs() < 1e-12 {
        return osc;
    }
    let t_max = (46.0 / x).asinh().max(46.0 / (nu + 1.0)).min(46.0);
    let tail = quad::adaptive(&|s: f64| (-x * s.sinh() - nu * s).exp(), 0.0, t_max, 1e-15, 20);
    osc - sin_nu_pi / PI * tail.value
}

/// Whether |J_nu(x)| <= x^nu / (2^nu Gamma(nu+1)), checked through the
/// normalized ratio (the inequality is equivalent to |R| <= 1).
///
/// Only defined on nu >= sqrt(3) - 2, 0 <= x <= 2 sqrt(2 (nu+2)); outside
/// that region the statement asserts nothing and a precondition error is
/// returned.
pub fn bessel_bound_check(nu: f64, x: f64) -> Result<bool> {
    let nu_min = 3.0_f64.sqrt() - 2.0;
    let x_max = 2.0 * (2.0 * (nu + 2.0)).sqrt();
    if nu < nu_min - 1e-12 || x < 0.0 || x > x_max + 1e-12 {
        return Err(Error::Domain(format!(
            "bessel_bound_check outside lemma region: nu={nu} (min {nu_min:.6}), x={x} (max {x_max:.6})"
        )));
    }
    Ok(series_ratio(nu, x).abs() <= 1.0)
}
