//! Gauss-Legendre rules and a small adaptive panel integrator.

use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on the Legendre polynomial, seeded by the Chebyshev
    /// approximation to the k-th root. Converges to machine precision in a
    /// handful of steps for the orders used here.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for k in 0..m {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // p0, p1 walk the three-term recurrence up to degree n
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

static RULES: [OnceLock<GaussRule>; 5] = [
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
];

/// Shared rules of order 4, 8, 12, 16, 24.
pub fn rule(order: usize) -> &'static GaussRule {
    let (slot, n) = match order {
        0..=4 => (0, 4),
        5..=8 => (1, 8),
        9..=12 => (2, 12),
        13..=16 => (3, 16),
        _ => (4, 24),
    };
    RULES[slot].get_or_init(|| GaussRule::new(n))
}

/// Result of an adaptive integration: value and an absolute error estimate.
#[derive(Clone, Copy, Debug, Default)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
}

impl Estimate {
    pub fn add(&mut self, other: Estimate) {
        self.value += other.value;
        self.abs_err += other.abs_err;
    }
}

/// Adaptive bisection on [a, b]: a panel is accepted when the gap between the
/// 16- and 24-point Gauss values is below its share of the tolerance.
/// Panels are accumulated left to right so the sum is order-independent.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, max_depth: u32) -> Estimate {
    let mut out = Estimate::default();
    adaptive_rec(f, a, b, abs_tol, max_depth, &mut out);
    out
}

fn adaptive_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    out: &mut Estimate,
) {
    let coarse = rule(16).integrate(a, b, |x| f(x));
    let fine = rule(24).integrate(a, b, |x| f(x));
    let err = (fine - coarse).abs();
    if err <= tol || depth == 0 {
        out.add(Estimate {
            value: fine,
            abs_err: err.max(1e-300),
        });
        return;
    }
    let mid = 0.5 * (a + b);
    adaptive_rec(f, a, mid, 0.5 * tol, depth - 1, out);
    adaptive_rec(f, mid, b, 0.5 * tol, depth - 1, out);
}

/// Integrate over [a, b] split into geometrically graded panels toward `a`,
/// for integrands with an integrable singularity at the left endpoint.
/// The first panel [a, a + (b-a)*ratio^(panels-1)] is never subdivided, so
/// the integrand must be finite there (use a panel count that makes its
/// contribution negligible instead).
pub fn graded_left<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    panels: usize,
    ratio: f64,
    abs_tol: f64,
) -> Estimate {
    let mut out = Estimate::default();
    let len = b - a;
    let mut hi = 1.0;
    let mut cuts = Vec::with_capacity(panels + 1);
    cuts.push(1.0);
    for _ in 1..panels {
        hi *= ratio;
        cuts.push(hi);
    }
    cuts.push(0.0);
    // integrate panels left to right for a deterministic sum
    for w in cuts.windows(2).rev() {
        let (lo, hi) = (a + len * w[1], a + len * w[0]);
        out.add(adaptive(f, lo, hi, abs_tol / panels as f64, 12));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let g = GaussRule::new(8);
        // degree 15 is exact for an 8-point rule
        let v = g.integrate(0.0, 1.0, |x| x.powi(15));
        assert_relative_eq!(v, 1.0 / 16.0, max_relative = 1e-14);
        let v = g.integrate(-2.0, 3.0, |x| x * x);
        assert_relative_eq!(v, (27.0 + 8.0) / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_oscillation() {
        let f = |x: f64| (10.0 * x).sin();
        let e = adaptive(&f, 0.0, std::f64::consts::PI, 1e-12, 30);
        let exact = (1.0 - (10.0 * std::f64::consts::PI).cos()) / 10.0;
        assert_relative_eq!(e.value, exact, epsilon = 1e-11);
    }

    #[test]
    fn graded_handles_log_singularity() {
        // integral of ln(x) on (0,1] = -1
        let f = |x: f64| x.ln();
        let e = graded_left(&f, 0.0, 1.0, 60, 0.5, 1e-12);
        assert_relative_eq!(e.value, -1.0, epsilon = 1e-9);
    }
}
