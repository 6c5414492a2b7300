//! The discrete form operator and its fast application.
//!
//! For piecewise constants on cells the form matrix is
//! `A_ab = -2 kappa_d G(b - a)` off the diagonal and
//! `A_aa = 2 kappa_d I_self + zeta_d h^d`, with mass matrix `h^d I`, so the
//! generalized problem reduces to the plain eigenproblem of `B = A / h^d`.
//! In dimensionless kernel units
//!
//! ```text
//! B = (2 kappa_d C_d + zeta_d - log h) I  -  2 kappa_d Toeplitz(Ghat),
//! ```
//!
//! because `2 kappa_d |S^{d-1}| = 1` exactly: the only h-dependence is the
//! `-log h` diagonal shift, which is what makes the discrete dilation law
//! exact. The Toeplitz part is applied as a zero-padded circular convolution
//! over the bounding grid via FFT, masked to active cells.

use super::grid::GridDiscretization;
use super::kernel::{self, KernelTable};
use crate::specfun::{constants_for, SpectralConstants};
use crate::{exec, Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Symmetric operator interface consumed by the eigensolver.
pub trait SymOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

pub struct LogOperator {
    pub grid: GridDiscretization,
    pub table: KernelTable,
    pub constants: SpectralConstants,
    /// Diagonal of B (constant across cells).
    pub diag: f64,
    pub quad_tol: f64,
    padded: Vec<usize>,
    kernel_hat: Vec<Complex64>,
    fft: Vec<Arc<dyn Fft<f64>>>,
    /// active cell coordinates flattened onto the padded grid
    scatter: Vec<usize>,
}

impl LogOperator {
    pub fn new(grid: GridDiscretization, table: KernelTable, quad_tol: f64) -> Result<Self> {
        if grid.d != table.d {
            return Err(Error::Usage("grid and kernel table dimensions differ".into()));
        }
        if (grid.h - table.h).abs() > 1e-15 * grid.h {
            return Err(Error::Usage("grid and kernel table cell sizes differ".into()));
        }
        if grid.dims.iter().any(|&n| n > table.max_offset + 1) {
            return Err(Error::Usage(
                "kernel table does not cover the grid's offset range".into(),
            ));
        }
        let constants = constants_for(grid.d)?;
        let c_d = kernel::self_constant(grid.d)?;
        // B_aa = (2 kappa I_self + zeta h^d) / h^d = 2 kappa C_d + zeta - log h
        let diag = 2.0 * constants.kappa * c_d + constants.zeta - grid.h.ln();

        let padded: Vec<usize> = grid
            .dims
            .iter()
            .map(|&n| (2 * n).next_power_of_two())
            .collect();
        let mut planner = FftPlanner::new();
        let fft: Vec<Arc<dyn Fft<f64>>> = padded
            .iter()
            .map(|&n| planner.plan_fft_forward(n))
            .collect();
        let ifft: Vec<Arc<dyn Fft<f64>>> = padded
            .iter()
            .map(|&n| planner.plan_fft_inverse(n))
            .collect();

        // kernel embedding: -2 kappa Ghat at signed wrapped offsets
        let total: usize = padded.iter().product();
        let mut kgrid = vec![Complex64::new(0.0, 0.0); total];
        let scale = -2.0 * constants.kappa;
        match grid.d {
            1 => {
                let p = padded[0];
                let n = grid.dims[0];
                for (kx, slot) in kgrid.iter_mut().enumerate() {
                    let ox = signed_offset(kx, p);
                    if ox != 0 && ox.unsigned_abs() as usize <= n - 1 {
                        *slot = Complex64::new(scale * table.ghat(&[ox]), 0.0);
                    }
                }
            }
            _ => {
                let (px, py) = (padded[0], padded[1]);
                let (nx, ny) = (grid.dims[0], grid.dims[1]);
                for ky in 0..py {
                    let oy = signed_offset(ky, py);
                    if oy.unsigned_abs() as usize > ny - 1 {
                        continue;
                    }
                    for kx in 0..px {
                        let ox = signed_offset(kx, px);
                        if (ox != 0 || oy != 0) && ox.unsigned_abs() as usize <= nx - 1 {
                            kgrid[ky * px + kx] =
                                Complex64::new(scale * table.ghat(&[ox, oy]), 0.0);
                        }
                    }
                }
            }
        }
        let mut scratch = make_scratch(&padded);
        fft2(&fft, &padded, &mut kgrid, &mut scratch);
        let kernel_hat = kgrid;

        let scatter = match grid.d {
            1 => grid.active.clone(),
            _ => {
                let nx = grid.dims[0];
                let px = padded[0];
                grid.active
                    .iter()
                    .map(|&flat| (flat / nx) * px + (flat % nx))
                    .collect()
            }
        };

        // fold inverse plans in after the kernel transform
        let mut all = fft;
        all.extend(ifft);
        Ok(LogOperator {
            grid,
            table,
            constants,
            diag,
            quad_tol,
            padded,
            kernel_hat,
            fft: all,
            scatter,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n_active()
    }

    fn fwd(&self) -> &[Arc<dyn Fft<f64>>] {
        &self.fft[..self.padded.len()]
    }
    fn inv(&self) -> &[Arc<dyn Fft<f64>>] {
        &self.fft[self.padded.len()..]
    }

    /// B v via padded FFT convolution plus the diagonal.
    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply(v, &mut out);
        out
    }

    /// Rayleigh quotient <v, Bv> / <v, v>.
    pub fn rayleigh(&self, v: &[f64]) -> f64 {
        let bv = self.apply_vec(v);
        crate::linalg::dot(v, &bv) / crate::linalg::dot(v, v)
    }

    /// Gershgorin lower bound min_a (B 1)_a (all off-diagonal entries are
    /// negative, so the row bound collapses to the row sum).
    pub fn gershgorin_lower(&self) -> f64 {
        let ones = vec![1.0; self.n()];
        let row_sums = self.apply_vec(&ones);
        row_sums.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Dense assembly of B for oracle comparisons; guarded to small grids.
    pub fn dense(&self) -> Result<Vec<f64>> {
        let n = self.n();
        if n > 8192 {
            return Err(Error::Usage(format!(
                "dense assembly is for reference use, n = {n} exceeds 8192"
            )));
        }
        let coords: Vec<(i64, i64)> = self
            .grid
            .active
            .iter()
            .map(|&flat| match self.grid.d {
                1 => (flat as i64, 0),
                _ => {
                    let nx = self.grid.dims[0];
                    ((flat % nx) as i64, (flat / nx) as i64)
                }
            })
            .collect();
        let scale = -2.0 * self.constants.kappa;
        let rows = exec::par_map_indexed(n, |i| {
            let mut row = vec![0.0; n];
            let (xi, yi) = coords[i];
            for (j, slot) in row.iter_mut().enumerate() {
                if i == j {
                    *slot = self.diag;
                } else {
                    let (xj, yj) = coords[j];
                    let o = [xj - xi, yj - yi];
                    *slot = scale
                        * match self.grid.d {
                            1 => self.table.ghat(&o[..1]),
                            _ => self.table.ghat(&o),
                        };
                }
            }
            row
        });
        let mut m = Vec::with_capacity(n * n);
        for row in rows {
            m.extend_from_slice(&row);
        }
        Ok(m)
    }
}

impl SymOp for LogOperator {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n());
        let total: usize = self.padded.iter().product();
        let mut grid = vec![Complex64::new(0.0, 0.0); total];
        for (i, &pos) in self.scatter.iter().enumerate() {
            grid[pos] = Complex64::new(v[i], 0.0);
        }
        let mut scratch = make_scratch(&self.padded);
        fft2(self.fwd(), &self.padded, &mut grid, &mut scratch);
        for (g, k) in grid.iter_mut().zip(&self.kernel_hat) {
            *g *= k;
        }
        fft2(self.inv(), &self.padded, &mut grid, &mut scratch);
        let norm = 1.0 / total as f64;
        for (i, &pos) in self.scatter.iter().enumerate() {
            out[i] = grid[pos].re * norm + self.diag * v[i];
        }
    }
}

fn signed_offset(k: usize, p: usize) -> i64 {
    if k <= p / 2 {
        k as i64
    } else {
        k as i64 - p as i64
    }
}

fn make_scratch(padded: &[usize]) -> Vec<Complex64> {
    let m = padded.iter().cloned().max().unwrap_or(0);
    vec![Complex64::new(0.0, 0.0); 2 * m]
}

/// In-place FFT over each axis of a row-major padded grid (1-D or 2-D).
fn fft2(plans: &[Arc<dyn Fft<f64>>], padded: &[usize], data: &mut [Complex64], scratch: &mut [Complex64]) {
    match padded.len() {
        1 => plans[0].process_with_scratch(data, &mut scratch[..plans[0].get_inplace_scratch_len()]),
        2 => {
            let (px, py) = (padded[0], padded[1]);
            let row_plan = &plans[0];
            let col_plan = &plans[1];
            let slen = row_plan.get_inplace_scratch_len();
            exec::par_chunks_mut(data, px, |_i, row| {
                let mut s = vec![Complex64::new(0.0, 0.0); slen];
                row_plan.process_with_scratch(row, &mut s);
            });
            // columns via transpose, row FFTs, transpose back
            let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
            transpose(data, &mut t, px, py);
            let slen = col_plan.get_inplace_scratch_len();
            exec::par_chunks_mut(&mut t, py, |_i, row| {
                let mut s = vec![Complex64::new(0.0, 0.0); slen];
                col_plan.process_with_scratch(row, &mut s);
            });
            transpose(&t, data, py, px);
        }
        _ => unreachable!(),
    }
}

/// Blocked transpose of a px-wide, py-tall row-major grid into dst.
fn transpose(src: &[Complex64], dst: &mut [Complex64], px: usize, py: usize) {
    const B: usize = 32;
    for y0 in (0..py).step_by(B) {
        let y1 = (y0 + B).min(py);
        for x0 in (0..px).step_by(B) {
            let x1 = (x0 + B).min(px);
            for y in y0..y1 {
                for x in x0..x1 {
                    dst[x * py + y] = src[y * px + x];
                }
            }
        }
    }
}

/// Rayleigh quotient of the cell-averaged plane wave e^{-i x xi} on the
/// grid, with an empirical discretization budget reported alongside.
#[derive(Clone, Copy, Debug)]
pub struct PlaneWaveQuotient {
    pub rayleigh: f64,
    /// Discretization allowance: replica energy of the piecewise-constant
    /// sampling weighted by the log-symbol gap, plus the inner-approximation
    /// measure deficit. An empirical budget, not a theorem.
    pub budget: f64,
}

pub fn plane_wave_rayleigh(
    op: &LogOperator,
    domain_measure: f64,
    xi: &[f64],
) -> Result<PlaneWaveQuotient> {
    let d = op.grid.d as usize;
    if xi.len() != d {
        return Err(Error::Usage(format!(
            "frequency vector has dimension {} but the grid has {d}",
            xi.len()
        )));
    }
    let h = op.grid.h;
    let n = op.n();
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let mut sinc2 = 1.0;
    for &x in xi {
        let t = 0.5 * x * h;
        let s = if t.abs() < 1e-9 { 1.0 } else { t.sin() / t };
        sinc2 *= s * s;
    }
    for (i, &flat) in op.grid.active.iter().enumerate() {
        let c = op.grid.cell_center(flat);
        let phase: f64 = -c.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        re[i] = phase.cos();
        im[i] = phase.sin();
    }
    let bre = op.apply_vec(&re);
    let bim = op.apply_vec(&im);
    let num = crate::linalg::dot(&re, &bre) + crate::linalg::dot(&im, &bim);
    let den = crate::linalg::dot(&re, &re) + crate::linalg::dot(&im, &im);
    let rayleigh = num / den;

    let xi_norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ceiling = std::f64::consts::PI * (d as f64).sqrt() / h;
    let replica = (1.0 - sinc2) * (ceiling.ln() - xi_norm.max(1.0).ln()).max(0.0);
    let measure_h = n as f64 * h.powi(d as i32);
    let deficit = (1.0 - measure_h / domain_measure).max(0.0);
    let budget = replica + deficit * (1.0 + xi_norm.max(1.0).ln()) + 10.0 * op.quad_tol;
    Ok(PlaneWaveQuotient { rayleigh, budget })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Domain;
    use crate::solver::grid::build_grid;
    use crate::solver::kernel::build_kernel_table;

    fn small_op(domain: &Domain, res: u32) -> LogOperator {
        let grid = build_grid(domain, res).unwrap();
        let max_off = grid.dims.iter().cloned().max().unwrap() - 1;
        let table = build_kernel_table(grid.d, grid.h, max_off, 1e-8).unwrap();
        LogOperator::new(grid, table, 1e-8).unwrap()
    }

    #[test]
    fn fast_apply_matches_dense_1d() {
        let dom = Domain::rect(&[1.0]).unwrap();
        let op = small_op(&dom, 32);
        let n = op.n();
        let dense = op.dense().unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..4 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = op.apply_vec(&v);
            let mut slow = vec![0.0; n];
            for i in 0..n {
                slow[i] = (0..n).map(|j| dense[i * n + j] * v[j]).sum();
            }
            let scale = slow.iter().map(|x| x.abs()).fold(0.0, f64::max);
            for i in 0..n {
                assert!(
                    (fast[i] - slow[i]).abs() <= 1e-12 * scale,
                    "i={i}: {} vs {}",
                    fast[i],
                    slow[i]
                );
            }
        }
    }

    #[test]
    fn fast_apply_matches_dense_2d() {
        let dom = Domain::ball(2, 1.0).unwrap();
        let op = small_op(&dom, 32);
        let n = op.n();
        let dense = op.dense().unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = op.apply_vec(&v);
        let mut slow = vec![0.0; n];
        for i in 0..n {
            slow[i] = (0..n).map(|j| dense[i * n + j] * v[j]).sum();
        }
        let scale = slow.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for i in 0..n {
            assert!(
                (fast[i] - slow[i]).abs() <= 1e-12 * scale,
                "i={i}: {} vs {}",
                fast[i],
                slow[i]
            );
        }
    }

    #[test]
    fn operator_is_symmetric() {
        let dom = Domain::ball(2, 1.0).unwrap();
        let op = small_op(&dom, 24);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = op.n();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bv = op.apply_vec(&v);
        let bw = op.apply_vec(&w);
        let a = crate::linalg::dot(&bv, &w);
        let b = crate::linalg::dot(&v, &bw);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn all_ones_rayleigh_matches_indicator_quotient() {
        // the all-ones vector on an exactly tiling box grid IS the domain
        // indicator; the matrix quadratic form must reproduce the Fourier-side
        // Rayleigh quotient computed by a completely independent route
        let dom = Domain::rect(&[1.0, 1.0]).unwrap();
        let op = small_op(&dom, 24);
        let ones = vec![1.0; op.n()];
        let rq_matrix = op.rayleigh(&ones);
        let rq_fourier = crate::domains::rayleigh_indicator(&dom, 1e-5).unwrap();
        assert!(
            (rq_matrix - rq_fourier).abs() <= 0.02 * rq_fourier.abs(),
            "matrix {rq_matrix} vs fourier {rq_fourier}"
        );
    }

    #[test]
    fn scaling_shifts_diagonal_only() {
        let dom = Domain::ball(2, 0.5).unwrap();
        let op1 = small_op(&dom, 24);
        let op2 = small_op(&dom.scale(2.0).unwrap(), 24);
        assert_eq!(op1.grid.active, op2.grid.active);
        // B' = B - log R * I exactly
        let shift = op1.diag - op2.diag;
        assert!((shift - 2.0f64.ln()).abs() < 1e-14, "shift {shift}");
        let v: Vec<f64> = (0..op1.n()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let b1 = op1.apply_vec(&v);
        let b2 = op2.apply_vec(&v);
        for i in 0..op1.n() {
            let want = b1[i] - 2.0f64.ln() * v[i];
            assert!((b2[i] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn gershgorin_is_finite_and_below_diag(){
        let dom = Domain::ball(2, 1.0).unwrap();
        let op = small_op(&dom, 24);
        let g = op.gershgorin_lower();
        assert!(g.is_finite() && g < op.diag);
    }

    #[test]
    fn plane_wave_at_zero_equals_all_ones() {
        let dom = Domain::ball(2, 1.0).unwrap();
        let op = small_op(&dom, 24);
        let pw = plane_wave_rayleigh(&op, dom.measure(), &[0.0, 0.0]).unwrap();
        let ones = vec![1.0; op.n()];
        let rq = op.rayleigh(&ones);
        assert!((pw.rayleigh - rq).abs() < 1e-12, "{} vs {rq}", pw.rayleigh);
    }
}
