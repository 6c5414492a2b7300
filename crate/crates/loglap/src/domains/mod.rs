//! Domain geometry, indicator Fourier transforms, and the frequency-space
//! quadrature for the domain constant `C_{Omega,tau}` and the indicator
//! Rayleigh quotient.

mod freq;

pub use freq::{c_tau, c_tau_monte_carlo, rayleigh_indicator, CTauEstimate};

use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A finite-measure domain with a computable indicator transform.
///
/// Boxes are centered at the origin: translations only change the phase of
/// the transform, so every consumer here (which sees `|1hat|^2`) is
/// translation independent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball {
        dim: u32,
        radius: f64,
    },
    Box {
        dim: u32,
        lengths: Vec<f64>,
    },
    /// Union of axis-aligned square cells of side `h` on a grid; `mask[y][x]`
    /// with y counted upward from the origin at the lower-left corner.
    CellMask {
        h: f64,
        origin: [f64; 2],
        mask: Vec<Vec<bool>>,
    },
}

impl Domain {
    pub fn ball(dim: u32, radius: f64) -> Result<Domain> {
        if dim == 0 {
            return Err(Error::Domain("ball dimension must be >= 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Domain::Ball { dim, radius })
    }

    pub fn rect(lengths: &[f64]) -> Result<Domain> {
        if lengths.is_empty() {
            return Err(Error::Domain("box needs at least one side length".into()));
        }
        if lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::Domain(format!("box lengths must be positive, got {lengths:?}")));
        }
        Ok(Domain::Box {
            dim: lengths.len() as u32,
            lengths: lengths.to_vec(),
        })
    }

    pub fn cell_mask(h: f64, origin: [f64; 2], mask: Vec<Vec<bool>>) -> Result<Domain> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("mask cell size must be positive, got {h}")));
        }
        if mask.is_empty() || mask[0].is_empty() {
            return Err(Error::Domain("mask grid must be non-empty".into()));
        }
        let w = mask[0].len();
        if mask.iter().any(|row| row.len() != w) {
            return Err(Error::Usage("mask rows must all have the same length".into()));
        }
        if !mask.iter().flatten().any(|&c| c) {
            return Err(Error::Domain("mask must contain at least one active cell".into()));
        }
        Ok(Domain::CellMask { h, origin, mask })
    }

    pub fn dim(&self) -> u32 {
        match self {
            Domain::Ball { dim, .. } => *dim,
            Domain::Box { dim, .. } => *dim,
            Domain::CellMask { .. } => 2,
        }
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        match self {
            Domain::Ball { dim, radius } => {
                let c = crate::specfun::constants_for(*dim).expect("dim >= 1 by construction");
                radius.powi(*dim as i32) * c.ball_volume
            }
            Domain::Box { lengths, .. } => lengths.iter().product(),
            Domain::CellMask { h, mask, .. } => {
                let n = mask.iter().flatten().filter(|&&c| c).count();
                h * h * n as f64
            }
        }
    }

    /// The dilation R * Omega. Cell masks keep their grid and scale `h`.
    pub fn scale(&self, r: f64) -> Result<Domain> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("scale factor must be positive, got {r}")));
        }
        Ok(match self {
            Domain::Ball { dim, radius } => Domain::Ball {
                dim: *dim,
                radius: radius * r,
            },
            Domain::Box { dim, lengths } => Domain::Box {
                dim: *dim,
                lengths: lengths.iter().map(|l| l * r).collect(),
            },
            Domain::CellMask { h, origin, mask } => Domain::CellMask {
                h: h * r,
                origin: [origin[0] * r, origin[1] * r],
                mask: mask.clone(),
            },
        })
    }

    /// Half-widths of the centered bounding box.
    pub(crate) fn half_extents(&self) -> Vec<f64> {
        match self {
            Domain::Ball { dim, radius } => vec![*radius; *dim as usize],
            Domain::Box { lengths, .. } => lengths.iter().map(|l| 0.5 * l).collect(),
            Domain::CellMask { h, mask, .. } => {
                vec![0.5 * h * mask[0].len() as f64, 0.5 * h * mask.len() as f64]
            }
        }
    }

    /// The indicator Fourier transform `integral_Omega e^{-i x.rho} dx`.
    ///
    /// Closed forms for balls and boxes; exact per-cell closed-form sum for
    /// masks. Removable singularities at `rho_j = 0` are evaluated by limit.
    pub fn indicator_ft(&self, rho: &[f64]) -> Result<Complex64> {
        if rho.len() != self.dim() as usize {
            return Err(Error::Usage(format!(
                "frequency vector has dimension {} but domain has {}",
                rho.len(),
                self.dim()
            )));
        }
        Ok(match self {
            Domain::Ball { dim, radius } => {
                let s: f64 = rho.iter().map(|x| x * x).sum::<f64>().sqrt();
                Complex64::new(ball_ft(*dim, *radius, s)?, 0.0)
            }
            Domain::Box { lengths, .. } => {
                let mut v = 1.0;
                for (l, r) in lengths.iter().zip(rho) {
                    v *= sinc_box(*l, *r);
                }
                Complex64::new(v, 0.0)
            }
            Domain::CellMask { h, origin, mask } => {
                let env = sinc_box(*h, rho[0]) * sinc_box(*h, rho[1]);
                let mut sum = Complex64::new(0.0, 0.0);
                for (iy, row) in mask.iter().enumerate() {
                    for (ix, &on) in row.iter().enumerate() {
                        if on {
                            let x = origin[0] + (ix as f64 + 0.5) * h;
                            let y = origin[1] + (iy as f64 + 0.5) * h;
                            let phase = -(x * rho[0] + y * rho[1]);
                            sum += Complex64::new(phase.cos(), phase.sin());
                        }
                    }
                }
                sum * env
            }
        })
    }
}

/// Radial ball transform (2 pi)^{d/2} r^{d/2} s^{-d/2} J_{d/2}(r s),
/// evaluated by series near s = 0 where the closed form is 0/0.
pub(crate) fn ball_ft(dim: u32, radius: f64, s: f64) -> Result<f64> {
    let d = dim as f64;
    let nu = 0.5 * d;
    let x = radius * s;
    if x < 1e-8 {
        let c = crate::specfun::constants_for(dim)?;
        // |B_d| r^d (1 - x^2/(2d+4) + ...)
        return Ok(c.ball_volume * radius.powi(dim as i32) * (1.0 - x * x / (2.0 * d + 4.0)));
    }
    let j = crate::specfun::bessel_j(nu, x)?;
    Ok((2.0 * PI).powf(0.5 * d) * radius.powf(0.5 * d) * s.powf(-0.5 * d) * j)
}

/// 2 sin(l rho / 2) / rho with its limit l at rho = 0.
pub(crate) fn sinc_box(l: f64, rho: f64) -> f64 {
    if (l * rho).abs() < 1e-7 {
        l * (1.0 - (l * rho) * (l * rho) / 24.0)
    } else {
        2.0 * (0.5 * l * rho).sin() / rho
    }
}

/// Parse the plain-text mask format: first line `h <value>`, then rows of
/// `0`/`1`. Rows are listed top to bottom; the first character of the LAST
/// row is the cell at the lower-left origin (y-major, origin lower-left).
pub fn parse_mask(text: &str) -> Result<Domain> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Usage("empty mask file".into()))?;
    let mut parts = header.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some("h"), Some(v)) => {
            let h: f64 = v
                .parse()
                .map_err(|_| Error::Usage(format!("bad cell size in mask header: {v:?}")))?;
            let mut rows: Vec<Vec<bool>> = Vec::new();
            for line in lines {
                let row: Result<Vec<bool>> = line
                    .trim()
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::Usage(format!("bad mask character {other:?}"))),
                    })
                    .collect();
                rows.push(row?);
            }
            rows.reverse(); // file is top-to-bottom, mask[0] is the bottom row
            let w = rows.first().map(|r| r.len()).unwrap_or(0) as f64;
            let hgt = rows.len() as f64;
            // center the grid so phase conventions match the other variants
            let origin = [-0.5 * w * h, -0.5 * hgt * h];
            Domain::cell_mask(h, origin, rows)
        }
        _ => Err(Error::Usage("mask file must start with `h <value>`".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn measures() {
        assert_relative_eq!(
            Domain::ball(2, 1.0).unwrap().measure(),
            PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            Domain::ball(2, 2.0).unwrap().measure(),
            4.0 * PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            Domain::rect(&[1.0, 3.0]).unwrap().measure(),
            3.0,
            max_relative = 1e-14
        );
        let mask =
            Domain::cell_mask(0.5, [0.0, 0.0], vec![vec![true, false], vec![true, true]]).unwrap();
        assert_relative_eq!(mask.measure(), 0.75, max_relative = 1e-14);
    }

    #[test]
    fn scaling_group_property() {
        let b = Domain::ball(2, 1.0).unwrap();
        let s = b.scale(2.0).unwrap();
        assert_relative_eq!(s.measure(), 4.0 * PI, max_relative = 1e-14);
        let back = s.scale(0.5).unwrap();
        assert_eq!(back, b);
        let bx = Domain::rect(&[1.0, 3.0]).unwrap().scale(0.5).unwrap();
        assert_eq!(bx, Domain::rect(&[0.5, 1.5]).unwrap());
        let m = Domain::cell_mask(0.25, [0.0, 0.0], vec![vec![true]]).unwrap();
        assert_relative_eq!(
            m.scale(3.0).unwrap().measure(),
            9.0 * m.measure(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn indicator_ft_at_zero_is_measure() {
        for dom in [
            Domain::ball(2, 1.3).unwrap(),
            Domain::ball(1, 0.7).unwrap(),
            Domain::rect(&[1.0, 2.5]).unwrap(),
            Domain::cell_mask(0.5, [-0.5, -0.25], vec![vec![true, true]]).unwrap(),
        ] {
            let z = vec![0.0; dom.dim() as usize];
            let v = dom.indicator_ft(&z).unwrap();
            assert_relative_eq!(v.re, dom.measure(), max_relative = 1e-9);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn ball_ft_matches_bessel_closed_form() {
        // d=2, r=1: 2 pi J_1(s) / s
        for s in [0.3, 1.0, 4.0, 17.0] {
            let v = Domain::ball(2, 1.0)
                .unwrap()
                .indicator_ft(&[s, 0.0])
                .unwrap();
            let want = 2.0 * PI * crate::specfun::bessel_j(1.0, s).unwrap() / s;
            assert_relative_eq!(v.re, want, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn ball_ft_matches_direct_quadrature() {
        // cross-check the closed form against 2-D quadrature of the defining
        // integral over the disc (imaginary part vanishes by symmetry)
        let rho = [1.7, 0.0];
        let g = crate::quad::rule(24);
        let mut val = 0.0;
        let n = 64;
        for i in 0..n {
            let x0 = -1.0 + 2.0 * i as f64 / n as f64;
            let x1 = x0 + 2.0 / n as f64;
            val += g.integrate(x0, x1, |x| {
                let ymax = (1.0 - x * x).max(0.0).sqrt();
                if ymax == 0.0 {
                    0.0
                } else {
                    g.integrate(-ymax, ymax, |y| (x * rho[0] + y * rho[1]).cos())
                }
            });
        }
        let ft = Domain::ball(2, 1.0).unwrap().indicator_ft(&rho).unwrap();
        assert_relative_eq!(ft.re, val, max_relative = 1e-6);
    }

    #[test]
    fn box_ft_full_period_cancellation() {
        // Box d=1, L=2, rho=pi -> 2 sin(pi)/pi = 0
        let v = Domain::rect(&[2.0]).unwrap().indicator_ft(&[PI]).unwrap();
        assert!(v.re.abs() < 1e-15);
    }

    #[test]
    fn mask_ft_hermitian_symmetry() {
        let mask = Domain::cell_mask(
            0.25,
            [-0.25, -0.375],
            vec![vec![true, false], vec![true, true], vec![false, true]],
        )
        .unwrap();
        for rho in [[0.9, -1.7], [3.0, 0.4], [-2.2, 2.2]] {
            let plus = mask.indicator_ft(&rho).unwrap();
            let minus = mask.indicator_ft(&[-rho[0], -rho[1]]).unwrap();
            assert!((plus - minus.conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn mask_of_square_matches_box_ft() {
        // a 4x4 mask with h = 1/4 centered at the origin is exactly the unit
        // square; the transforms must agree pointwise
        let mask = Domain::cell_mask(0.25, [-0.5, -0.5], vec![vec![true; 4]; 4]).unwrap();
        let bx = Domain::rect(&[1.0, 1.0]).unwrap();
        for rho in [[0.0, 0.0], [1.3, -0.4], [6.0, 2.0], [0.0, 3.3]] {
            let a = mask.indicator_ft(&rho).unwrap();
            let b = bx.indicator_ft(&rho).unwrap();
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()), "rho={rho:?}");
        }
    }

    #[test]
    fn parse_mask_round_trip() {
        let text = "h 0.125\n0110\n1111\n";
        let dom = parse_mask(text).unwrap();
        match &dom {
            Domain::CellMask { h, mask, .. } => {
                assert_eq!(*h, 0.125);
                // last file row becomes mask[0] (origin at lower-left)
                assert_eq!(mask[0], vec![true, true, true, true]);
                assert_eq!(mask[1], vec![false, true, true, false]);
            }
            _ => panic!("expected mask"),
        }
        assert_relative_eq!(dom.measure(), 6.0 * 0.125 * 0.125, max_relative = 1e-14);
        assert!(parse_mask("nope\n01\n").is_err());
        assert!(parse_mask("h 0.5\n01x\n").is_err());
    }
}
