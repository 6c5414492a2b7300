//! Conforming piecewise-constant Galerkin discretization of the logarithmic
//! form with a fast translation-invariant matvec and a Lanczos eigensolver.
//!
//! Trial functions are indicators of cells whose closure lies inside the
//! domain, so the trial space sits inside the form domain and every computed
//! eigenvalue is an upper bound of the corresponding true one. That
//! one-sidedness is what the bound-sandwich tests lean on.

pub mod cache;
pub mod grid;
pub mod kernel;
pub mod lanczos;
pub mod operator;

pub use grid::{build_grid, grid_from_h, GridDiscretization};
pub use kernel::{build_kernel_table, KernelTable};
pub use lanczos::{lanczos_lowest, tridiag_eigen, LanczosOutcome};
pub use operator::{plane_wave_rayleigh, LogOperator, PlaneWaveQuotient, SymOp};

use crate::bounds::lambda1_lower_general;
use crate::domains::Domain;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Ordered discrete eigenvalues with residuals and discretization metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub domain: Domain,
    pub d: u32,
    pub h: f64,
    pub measure: f64,
    pub k: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub quad_tol: f64,
    pub tool_version: String,
}

impl Spectrum {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum serializes")
    }

    pub fn from_json(text: &str) -> Result<Spectrum> {
        serde_json::from_str(text).map_err(|e| Error::Usage(format!("bad spectrum JSON: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Spectrum> {
        let text = std::fs::read_to_string(path)?;
        Spectrum::from_json(&text)
    }
}

/// Solver knobs beyond the basic (resolution, k, tol) triple.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub resolution: u32,
    pub k: usize,
    /// Lanczos residual target in operator units.
    pub tol: f64,
    /// Kernel quadrature tolerance.
    pub quad_tol: f64,
    /// Kernel table cache directory; defaults to LOGLAP_CACHE_DIR when set.
    pub cache_dir: Option<PathBuf>,
    /// Lanczos start-vector seed (fixed so runs are reproducible).
    pub seed: u64,
}

impl SolveOptions {
    pub fn new(resolution: u32, k: usize) -> Self {
        SolveOptions {
            resolution,
            k,
            tol: 1e-9,
            quad_tol: 1e-8,
            cache_dir: std::env::var_os("LOGLAP_CACHE_DIR").map(PathBuf::from),
            seed: 0x10610,
        }
    }
}

/// Build the operator for a domain at a resolution, reusing cached kernel
/// tables when available.
pub fn build_operator(domain: &Domain, opts: &SolveOptions) -> Result<LogOperator> {
    let grid = build_grid(domain, opts.resolution)?;
    operator_for_grid(grid, opts)
}

pub fn operator_for_grid(
    grid: GridDiscretization,
    opts: &SolveOptions,
) -> Result<LogOperator> {
    let max_offset = grid.dims.iter().cloned().max().unwrap() - 1;
    let table = match &opts.cache_dir {
        Some(dir) => match cache::load(dir, grid.d, grid.h, max_offset, opts.quad_tol) {
            Some(t) => t,
            None => {
                let t = build_kernel_table(grid.d, grid.h, max_offset, opts.quad_tol)?;
                cache::store(&t, dir)?;
                t
            }
        },
        None => build_kernel_table(grid.d, grid.h, max_offset, opts.quad_tol)?,
    };
    LogOperator::new(grid, table, opts.quad_tol)
}

/// The k smallest eigenvalues of the discrete operator.
pub fn eigensolve(domain: &Domain, resolution: u32, k: usize, tol: f64) -> Result<Spectrum> {
    let mut opts = SolveOptions::new(resolution, k);
    opts.tol = tol;
    eigensolve_opts(domain, &opts)
}

pub fn eigensolve_opts(domain: &Domain, opts: &SolveOptions) -> Result<Spectrum> {
    let op = build_operator(domain, opts)?;
    eigensolve_operator(&op, domain, opts)
}

pub fn eigensolve_operator(
    op: &LogOperator,
    domain: &Domain,
    opts: &SolveOptions,
) -> Result<Spectrum> {
    let n = op.n();
    if opts.k > n {
        return Err(Error::Usage(format!(
            "requested k = {} eigenvalues but the grid has only {n} active cells",
            opts.k
        )));
    }

    let use_sectors = op.grid.reflection_symmetric() && n >= 8192 && opts.k >= 16;
    let outcome = if use_sectors {
        sector_eigensolve(op, opts)?
    } else {
        lanczos_lowest(op, opts.k, opts.tol, opts.seed, None)?
    };

    // consistency with the general first-eigenvalue lower bound
    let floor = lambda1_lower_general(op.grid.d, domain.measure())?;
    if let (Some(&l1), Some(&r1)) = (outcome.values.first(), outcome.residuals.first()) {
        if l1 < floor - opts.quad_tol - r1 - 1e-9 {
            return Err(Error::Accuracy {
                what: format!(
                    "computed lambda_1 = {l1} violates the counting-bound floor {floor}"
                ),
                achieved: floor - l1,
                requested: opts.quad_tol,
            });
        }
    }

    Ok(Spectrum {
        domain: domain.clone(),
        d: op.grid.d,
        h: op.grid.h,
        measure: domain.measure(),
        k: opts.k,
        eigenvalues: outcome.values,
        residuals: outcome.residuals,
        quad_tol: opts.quad_tol,
        tool_version: crate::TOOL_VERSION.to_string(),
    })
}

// ---------------------------------------------------------------------------
// parity sectors
// ---------------------------------------------------------------------------

/// The operator restricted to a per-axis reflection parity sector. The
/// embedding is isometric and commutes with the operator (the kernel depends
/// only on |offset| per axis), so the full spectrum is the disjoint union of
/// the sector spectra.
struct SectorOp<'a> {
    base: &'a LogOperator,
    /// +1 even / -1 odd per axis
    parity: Vec<i8>,
    /// flat bounding-grid indices of orbit representatives (all coordinates
    /// in the lower half per axis), ascending
    reps: Vec<usize>,
    /// map flat grid index -> active index in the base operator
    active_pos: Vec<usize>,
}

impl SectorOp<'_> {
    fn orbit(&self, flat: usize) -> [(usize, f64); 4] {
        let dims = &self.base.grid.dims;
        match self.base.grid.d {
            1 => {
                let n = dims[0];
                let s = self.parity[0] as f64;
                // padded to fixed length; weight 0 entries are skipped
                [(flat, 1.0), (n - 1 - flat, s), (0, 0.0), (0, 0.0)]
            }
            _ => {
                let (nx, ny) = (dims[0], dims[1]);
                let ix = flat % nx;
                let iy = flat / nx;
                let mx = nx - 1 - ix;
                let my = ny - 1 - iy;
                let sx = self.parity[0] as f64;
                let sy = self.parity[1] as f64;
                [
                    (iy * nx + ix, 1.0),
                    (iy * nx + mx, sx),
                    (my * nx + ix, sy),
                    (my * nx + mx, sx * sy),
                ]
            }
        }
    }
}

impl SymOp for SectorOp<'_> {
    fn dim(&self) -> usize {
        self.reps.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n_full = self.base.n();
        let amp = (1.0 / (1 << self.base.grid.d) as f64).sqrt();
        let mut full = vec![0.0; n_full];
        for (r, &rep) in self.reps.iter().enumerate() {
            for (flat, sign) in self.orbit(rep) {
                if sign != 0.0 {
                    full[self.active_pos[flat]] += amp * sign * v[r];
                }
            }
        }
        let bf = self.base.apply_vec(&full);
        for (r, &rep) in self.reps.iter().enumerate() {
            let mut acc = 0.0;
            for (flat, sign) in self.orbit(rep) {
                if sign != 0.0 {
                    acc += sign * bf[self.active_pos[flat]];
                }
            }
            out[r] = amp * acc;
        }
    }
}

fn sector_eigensolve(op: &LogOperator, opts: &SolveOptions) -> Result<LanczosOutcome> {
    let d = op.grid.d as usize;
    let dims = &op.grid.dims;
    let nx = dims[0];
    let mask = op.grid.mask();
    let mut active_pos = vec![usize::MAX; mask.len()];
    for (i, &flat) in op.grid.active.iter().enumerate() {
        active_pos[flat] = i;
    }
    let reps: Vec<usize> = op
        .grid
        .active
        .iter()
        .cloned()
        .filter(|&flat| match d {
            1 => flat < dims[0] / 2,
            _ => (flat % nx) < nx / 2 && (flat / nx) < dims[1] / 2,
        })
        .collect();

    let parities: Vec<Vec<i8>> = match d {
        1 => vec![vec![1], vec![-1]],
        _ => vec![vec![1, 1], vec![1, -1], vec![-1, 1], vec![-1, -1]],
    };

    // initial per-sector share, then extend any sector whose deepest
    // extracted value still falls below the merged k-th value
    let n_sectors = parities.len();
    let mut per_k =
        vec![(opts.k / n_sectors + opts.k / (4 * n_sectors) + 12).min(reps.len()); n_sectors];
    let mut outcomes: Vec<Option<LanczosOutcome>> = vec![None; n_sectors];

    for _round in 0..6 {
        for (s, parity) in parities.iter().enumerate() {
            let need = per_k[s];
            let have = outcomes[s].as_ref().map(|o| o.values.len()).unwrap_or(0);
            if have >= need {
                continue;
            }
            let sec = SectorOp {
                base: op,
                parity: parity.clone(),
                reps: reps.clone(),
                active_pos: active_pos.clone(),
            };
            let out = lanczos_lowest(
                &sec,
                need,
                opts.tol,
                opts.seed ^ ((s as u64 + 1) * 0x9E37),
                None,
            )?;
            outcomes[s] = Some(out);
        }
        let mut tagged: Vec<(f64, f64, usize)> = Vec::new();
        for (s, o) in outcomes.iter().enumerate() {
            let o = o.as_ref().unwrap();
            for (v, r) in o.values.iter().zip(&o.residuals) {
                tagged.push((*v, *r, s));
            }
        }
        tagged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if tagged.len() < opts.k {
            for k in per_k.iter_mut() {
                *k = (*k * 2).min(reps.len());
            }
            continue;
        }
        let kth = tagged[opts.k - 1].0;
        let mut complete = true;
        for (s, o) in outcomes.iter().enumerate() {
            let o = o.as_ref().unwrap();
            let exhausted = o.values.len() >= reps.len();
            if !exhausted && *o.values.last().unwrap() < kth {
                per_k[s] = ((per_k[s] as f64 * 1.6) as usize + 8).min(reps.len());
                complete = false;
            }
        }
        if complete {
            let take = &tagged[..opts.k];
            return Ok(LanczosOutcome {
                values: take.iter().map(|t| t.0).collect(),
                residuals: take.iter().map(|t| t.1).collect(),
            });
        }
    }
    Err(Error::Convergence {
        what: "sector eigensolver failed to cover the requested count".into(),
        converged: 0,
        requested: opts.k,
    })
}
