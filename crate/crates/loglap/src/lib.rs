//! Dirichlet spectrum of the half logarithmic Laplacian on finite-measure domains.
//!
//! The operator under study has Fourier symbol `log|xi|` and quadratic form
//!
//! ```text
//! (phi, phi)_log = (2*pi)^(-d) * integral log|xi| |phihat(xi)|^2 dxi
//! ```
//!
//! acting on functions that vanish outside an open set of finite measure.
//! The crate provides:
//!
//! * [`specfun`] — gamma, digamma and Bessel-J evaluations plus the
//!   dimension constants `kappa_d`, `zeta_d`, `|B_d|`, `|S^{d-1}|`;
//! * [`bounds`] — closed-form spectral inequalities: the Berezin-type upper
//!   trace bound, the eigenvalue counting bound, four lower bounds for the
//!   first eigenvalue of the unit ball, the Faber-Krahn transfer, Weyl
//!   constants and the exact lower trace bound with domain constant `C_{Omega,tau}`;
//! * [`domains`] — ball / box / cell-mask geometries, indicator Fourier
//!   transforms, and certified quadrature for `C_{Omega,tau}` and the
//!   indicator Rayleigh quotient;
//! * [`solver`] — a conforming piecewise-constant Galerkin discretization
//!   with a translation-invariant fast matvec and a Lanczos eigensolver;
//! * [`analysis`] — Riesz means, counting functions, Weyl-limit fits and
//!   bound-sandwich reports.

pub mod analysis;
pub mod bounds;
pub mod domains;
mod exec;
pub use exec::configure_threads;
mod linalg;
mod quad;
pub mod solver;
pub mod specfun;

use std::fmt;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// Input outside a function's mathematical domain (d = 0, x <= 0, ...).
    Domain(String),
    /// Inconsistent arguments: mismatched dimensions, bad windows, malformed files.
    Usage(String),
    /// A quadrature or solver failed to reach the requested accuracy.
    /// `achieved` carries the best error estimate obtained.
    Accuracy {
        what: String,
        achieved: f64,
        requested: f64,
    },
    /// An iterative solver ran out of its iteration budget.
    Convergence {
        what: String,
        converged: usize,
        requested: usize,
    },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Accuracy {
                what,
                achieved,
                requested,
            } => write!(
                f,
                "accuracy error: {what}: achieved {achieved:.3e}, requested {requested:.3e}"
            ),
            Error::Convergence {
                what,
                converged,
                requested,
            } => write!(
                f,
                "convergence error: {what}: {converged} of {requested} converged"
            ),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl Error {
    /// Process exit code used by the CLI: 2 for validation failures,
    /// 3 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Usage(_) | Error::Io(_) => 2,
            Error::Accuracy { .. } | Error::Convergence { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
