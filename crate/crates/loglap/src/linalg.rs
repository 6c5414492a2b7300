//! Deterministic dense kernels for the Lanczos driver.
//!
//! Dot products chunk the index range into fixed blocks and fold the block
//! partials in order, so results do not depend on the worker count.

use crate::exec;

const BLOCK: usize = 4096;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let blocks = n.div_ceil(BLOCK);
    let partials = exec::par_map_indexed(blocks, |k| {
        let lo = k * BLOCK;
        let hi = (lo + BLOCK).min(n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += a[i] * b[i];
        }
        acc
    });
    partials.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    exec::par_chunks_mut(y, BLOCK, |k, chunk| {
        let lo = k * BLOCK;
        for (i, yi) in chunk.iter_mut().enumerate() {
            *yi += alpha * x[lo + i];
        }
    });
}

pub fn scale(alpha: f64, y: &mut [f64]) {
    for v in y.iter_mut() {
        *v *= alpha;
    }
}

/// coeffs[j] = <basis[j], w> for all basis vectors.
pub fn project(basis: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    exec::par_map_indexed(basis.len(), |j| dot(&basis[j], w))
}

/// w -= sum_j coeffs[j] * basis[j], parallel over chunks of w.
pub fn deflate(basis: &[Vec<f64>], coeffs: &[f64], w: &mut [f64]) {
    exec::par_chunks_mut(w, BLOCK, |k, chunk| {
        let lo = k * BLOCK;
        let hi = lo + chunk.len();
        for (j, c) in coeffs.iter().enumerate() {
            let col = &basis[j][lo..hi];
            for (i, wi) in chunk.iter_mut().enumerate() {
                *wi -= c * col[i];
            }
        }
    });
}

/// out[i] = sum_j basis[j][i] * weights[j]  (Ritz vector assembly).
pub fn combine(basis: &[Vec<f64>], weights: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    exec::par_chunks_mut(out, BLOCK, |k, chunk| {
        let lo = k * BLOCK;
        let hi = lo + chunk.len();
        for (j, c) in weights.iter().enumerate() {
            let col = &basis[j][lo..hi];
            for (i, oi) in chunk.iter_mut().enumerate() {
                *oi += c * col[i];
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..10_000).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..10_000).map(|i| (i as f64).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9);
    }

    #[test]
    fn deflate_then_project_is_zero() {
        let basis = vec![
            {
                let mut v = vec![0.0; 64];
                v[0] = 1.0;
                v
            },
            {
                let mut v = vec![0.0; 64];
                v[1] = 1.0;
                v
            },
        ];
        let mut w: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let c = project(&basis, &w);
        deflate(&basis, &c, &mut w);
        assert!(w[0].abs() < 1e-15 && w[1].abs() < 1e-15);
    }
}
