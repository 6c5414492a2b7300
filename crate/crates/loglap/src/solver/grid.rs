//! Inner-approximation cell grids.

use crate::domains::Domain;
use crate::{Error, Result};

/// A uniform cell grid over the domain's bounding box with the active set of
/// cells whose closure lies inside the (closed) domain. Keeping the trial
/// space inside the form domain makes every Rayleigh-Ritz value an upper
/// bound of the corresponding true eigenvalue.
#[derive(Clone, Debug)]
pub struct GridDiscretization {
    pub d: u32,
    pub h: f64,
    pub origin: Vec<f64>,
    pub dims: Vec<usize>,
    /// Flattened bounding-grid indices (row-major, x fastest) of active cells,
    /// ascending.
    pub active: Vec<usize>,
}

impl GridDiscretization {
    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        match self.d {
            1 => vec![self.origin[0] + (flat as f64 + 0.5) * self.h],
            2 => {
                let nx = self.dims[0];
                let ix = flat % nx;
                let iy = flat / nx;
                vec![
                    self.origin[0] + (ix as f64 + 0.5) * self.h,
                    self.origin[1] + (iy as f64 + 0.5) * self.h,
                ]
            }
            _ => unreachable!("grids exist only for d in {{1,2}}"),
        }
    }

    /// Whether the active mask is invariant under reflection of every axis
    /// (with even dims), which enables the parity-sector eigensolver.
    pub fn reflection_symmetric(&self) -> bool {
        if self.dims.iter().any(|&n| n % 2 != 0) {
            return false;
        }
        let mask = self.mask();
        match self.d {
            1 => {
                let n = self.dims[0];
                (0..n).all(|i| mask[i] == mask[n - 1 - i])
            }
            2 => {
                let (nx, ny) = (self.dims[0], self.dims[1]);
                for iy in 0..ny {
                    for ix in 0..nx {
                        let v = mask[iy * nx + ix];
                        if v != mask[iy * nx + (nx - 1 - ix)]
                            || v != mask[(ny - 1 - iy) * nx + ix]
                        {
                            return false;
                        }
                    }
                }
                true
            }
            _ => false,
        }
    }

    /// Dense activity mask over the bounding grid.
    pub fn mask(&self) -> Vec<bool> {
        let total: usize = self.dims.iter().product();
        let mut m = vec![false; total];
        for &a in &self.active {
            m[a] = true;
        }
        m
    }
}

/// Build the grid with `resolution` cells across the largest extent.
pub fn build_grid(domain: &Domain, resolution: u32) -> Result<GridDiscretization> {
    if resolution == 0 {
        return Err(Error::Domain("resolution must be >= 1".into()));
    }
    let half = domain.half_extents();
    let extent = 2.0 * half.iter().cloned().fold(0.0f64, f64::max);
    if let Domain::CellMask { h, mask, .. } = domain {
        // the mask defines its own grid; `resolution` may refine it by an
        // integer factor
        let base = mask.len().max(mask[0].len()) as u32;
        let factor = if resolution <= base {
            1
        } else if resolution % base == 0 {
            resolution / base
        } else {
            return Err(Error::Usage(format!(
                "mask resolution {resolution} must be a multiple of the mask extent {base}"
            )));
        };
        return grid_from_h(domain, h / factor as f64);
    }
    grid_from_h(domain, extent / resolution as f64)
}

/// Build the grid directly from a cell size (used for matched-h comparisons).
pub fn grid_from_h(domain: &Domain, h: f64) -> Result<GridDiscretization> {
    let d = domain.dim();
    if d > 2 {
        return Err(Error::Usage("the solver supports d in {1, 2} only".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("cell size must be positive, got {h}")));
    }
    if h * (d as f64).sqrt() >= 1.0 {
        return Err(Error::Domain(format!(
            "cell diameter h sqrt(d) = {:.6} must be below the kernel cutoff 1; \
             pre-scale the domain (eigenvalues shift exactly by -log R under dilation by R) \
             or raise the resolution",
            h * (d as f64).sqrt()
        )));
    }

    let (origin, dims) = match domain {
        Domain::Ball { radius, .. } => {
            let n = (2.0 * radius / h).round().max(1.0) as usize;
            (vec![-radius; d as usize], vec![n; d as usize])
        }
        Domain::Box { lengths, .. } => {
            let mut dims = Vec::new();
            let mut origin = Vec::new();
            for l in lengths {
                let exact = l / h;
                let n = if (exact - exact.round()).abs() < 1e-9 * exact.max(1.0) {
                    exact.round() as usize
                } else {
                    exact.floor() as usize
                };
                if n == 0 {
                    return Err(Error::Domain(
                        "resolution too coarse: a box side has no interior cell".into(),
                    ));
                }
                dims.push(n);
                origin.push(-0.5 * l);
            }
            (origin, dims)
        }
        Domain::CellMask { h: mh, origin, mask } => {
            let factor = (mh / h).round() as usize;
            let nx = mask[0].len() * factor;
            let ny = mask.len() * factor;
            (vec![origin[0], origin[1]], vec![nx, ny])
        }
    };

    let active = match domain {
        Domain::Ball { radius, .. } => {
            let r2 = radius * radius;
            let mut act = Vec::new();
            match d {
                1 => {
                    for i in 0..dims[0] {
                        let lo = origin[0] + i as f64 * h;
                        let hi = lo + h;
                        if lo * lo <= r2 && hi * hi <= r2 {
                            act.push(i);
                        }
                    }
                }
                _ => {
                    let nx = dims[0];
                    for iy in 0..dims[1] {
                        let y0 = origin[1] + iy as f64 * h;
                        let y1 = y0 + h;
                        let ymax2 = y0.abs().max(y1.abs()).powi(2);
                        for ix in 0..nx {
                            let x0 = origin[0] + ix as f64 * h;
                            let x1 = x0 + h;
                            let xmax2 = x0.abs().max(x1.abs()).powi(2);
                            if xmax2 + ymax2 <= r2 {
                                act.push(iy * nx + ix);
                            }
                        }
                    }
                }
            }
            act
        }
        Domain::Box { .. } => (0..dims.iter().product::<usize>()).collect(),
        Domain::CellMask { h: mh, mask, .. } => {
            let factor = (mh / h).round() as usize;
            let nx = dims[0];
            let mut act = Vec::new();
            for iy in 0..dims[1] {
                for ix in 0..nx {
                    if mask[iy / factor][ix / factor] {
                        act.push(iy * nx + ix);
                    }
                }
            }
            act
        }
    };

    if active.is_empty() {
        return Err(Error::Domain(
            "resolution too coarse: no cell closure fits inside the domain".into(),
        ));
    }
    Ok(GridDiscretization {
        d,
        h,
        origin,
        dims,
        active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn interval_grid_exact_tiling() {
        let dom = Domain::rect(&[1.0]).unwrap();
        let g = build_grid(&dom, 16).unwrap();
        assert_eq!(g.n_active(), 16);
        assert_eq!(g.h, 1.0 / 16.0);
    }

    #[test]
    fn ball_grid_area_matches_measure() {
        let dom = Domain::ball(2, 1.0).unwrap();
        let g = build_grid(&dom, 64).unwrap();
        let area = g.n_active() as f64 * g.h * g.h;
        assert!(
            (area - PI).abs() < 0.05 * PI,
            "area {area} vs pi, {} cells",
            g.n_active()
        );
        assert!(g.reflection_symmetric());
    }

    #[test]
    fn small_ball_valid_grid() {
        let dom = Domain::ball(2, 0.4).unwrap();
        let g = build_grid(&dom, 8).unwrap();
        assert!(g.h * 2.0f64.sqrt() < 1.0);
        assert!(!g.active.is_empty());
    }

    #[test]
    fn oversized_domain_is_rejected_with_guidance() {
        let dom = Domain::ball(2, 40.0).unwrap();
        let err = build_grid(&dom, 8).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("pre-scale"), "{msg}");
    }

    #[test]
    fn rect_grid_non_square() {
        let dom = Domain::rect(&[1.0, 3.0]).unwrap();
        let g = build_grid(&dom, 96).unwrap();
        assert_eq!(g.h, 3.0 / 96.0);
        assert_eq!(g.dims, vec![32, 96]);
        assert_eq!(g.n_active(), 32 * 96);
        assert!(g.reflection_symmetric());
    }

    #[test]
    fn mask_grid_refinement() {
        let dom = Domain::cell_mask(
            0.25,
            [-0.25, -0.25],
            vec![vec![true, false], vec![true, true]],
        )
        .unwrap();
        let g = build_grid(&dom, 2).unwrap();
        assert_eq!(g.n_active(), 3);
        let g2 = build_grid(&dom, 4).unwrap();
        assert_eq!(g2.n_active(), 12);
        assert_eq!(g2.h, 0.125);
        assert!(build_grid(&dom, 3).is_err());
    }

    #[test]
    fn scaled_ball_has_identical_mask() {
        let dom = Domain::ball(2, 0.5).unwrap();
        let g1 = build_grid(&dom, 64).unwrap();
        let g2 = build_grid(&dom.scale(2.0).unwrap(), 64).unwrap();
        assert_eq!(g1.active, g2.active);
        assert_eq!(g2.h, 2.0 * g1.h);
    }
}
