//! Special functions and the d-dependent spectral constants.

mod bessel;
mod digamma;
mod gamma;

pub use bessel::{bessel_bound_check, bessel_j};
pub use digamma::digamma;
pub use gamma::{gamma_ln, EULER_GAMMA};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dimension constants entering the real-space decomposition of the
/// logarithmic form:
///
/// * `kappa  = pi^(-d/2) Gamma(d/2) / 4` — weight of the truncated
///   double-integral seminorm;
/// * `zeta   = log 2 + (psi(d/2) - gamma) / 2` — the zero-order coefficient;
/// * `ball_volume = |B_d|`, `sphere_area = |S^{d-1}| = d |B_d|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstants {
    pub d: u32,
    pub gamma_euler: f64,
    pub kappa: f64,
    pub zeta: f64,
    pub ball_volume: f64,
    pub sphere_area: f64,
}

/// Populate the constants for dimension d >= 1.
pub fn constants_for(d: u32) -> Result<SpectralConstants> {
    if d == 0 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    let df = d as f64;
    let half = 0.5 * df;
    let kappa = (-half * std::f64::consts::PI.ln() + gamma_ln(half)?).exp() / 4.0;
    let zeta = std::f64::consts::LN_2 + 0.5 * (digamma(half)? - EULER_GAMMA);
    let ball_volume = (half * std::f64::consts::PI.ln() - gamma_ln(half + 1.0)?).exp();
    Ok(SpectralConstants {
        d,
        gamma_euler: EULER_GAMMA,
        kappa,
        zeta,
        ball_volume,
        sphere_area: df * ball_volume,
    })
}
