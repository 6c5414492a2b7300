//! Cell-pair interaction integrals of the kernel |x-y|^(-d).
//!
//! Pair integrals over two cells reduce to one d-dimensional integral of the
//! hat-product correlation against the kernel,
//!
//! ```text
//! G(o; h) = int m_o(z) |z|^(-d) dz,   m_o(z) = prod_j h (1 - |z_j/h - o_j|)_+,
//! ```
//!
//! and scaling z -> h z makes G(o; h) = h^d Ghat(o) with a dimensionless
//! table Ghat shared by every cell size. The diagonal term likewise scales as
//! I_self(h) = h^d (C_d - |S^{d-1}| log h). Building tables dimensionless is
//! what makes the discrete dilation law exact to rounding.

use crate::quad::rule;
use crate::specfun::constants_for;
use crate::{exec, Error, Result};

/// Catalan's constant.
const CATALAN: f64 = 0.915_965_594_177_219;

/// C_d in I_self(h) = h^d (C_d - |S^{d-1}| ln h).
///
/// d=1 integrates in closed form; d=2 reduces in polar coordinates to
/// elementary integrals plus int_0^{pi/4} ln cos = G/2 - (pi/4) ln 2.
pub fn self_constant(d: u32) -> Result<f64> {
    use std::f64::consts::{LN_2, PI};
    match d {
        1 => Ok(2.0),
        2 => Ok(2.0 * PI + 2.0 * LN_2 - 2.0 * PI * LN_2 + 4.0 * CATALAN),
        _ => Err(Error::Usage("kernel tables exist for d in {1, 2}".into())),
    }
}

/// Precomputed offset-indexed pair integrals.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub d: u32,
    pub h: f64,
    pub max_offset: usize,
    pub quad_tol: f64,
    /// Dimensionless Ghat on the non-negative quadrant, row-major for d=2;
    /// entry 0 (the self offset) is unused and stored as 0.
    pub(crate) values: Vec<f64>,
    /// Materialized diagonal integral at this h.
    pub i_self: f64,
}

impl KernelTable {
    /// Dimensionless pair value at a signed offset.
    #[inline]
    pub fn ghat(&self, o: &[i64]) -> f64 {
        match self.d {
            1 => {
                let a = o[0].unsigned_abs() as usize;
                self.values[a]
            }
            _ => {
                let a = o[0].unsigned_abs() as usize;
                let b = o[1].unsigned_abs() as usize;
                self.values[b * (self.max_offset + 1) + a]
            }
        }
    }

    /// Physical pair integral G(o; h) = h^d Ghat(o).
    pub fn g(&self, o: &[i64]) -> f64 {
        self.h.powi(self.d as i32) * self.ghat(o)
    }
}

/// Dimensionless pair integral for d=1:
/// (1+o) ln((o+1)/o) - (o-1) ln(o/(o-1)) for o >= 1.
pub(crate) fn ghat_1d(o: u64) -> f64 {
    debug_assert!(o >= 1);
    let of = o as f64;
    let second = if o == 1 {
        0.0
    } else {
        (of - 1.0) * (of / (of - 1.0)).ln()
    };
    (of + 1.0) * ((of + 1.0) / of).ln() - second
}

/// Dimensionless pair integral for d=2 by quadrant-split tensor Gauss;
/// offsets touching the singularity are integrated on dyadic rings.
/// Returns (value, error estimate).
pub(crate) fn ghat_2d(o1: u64, o2: u64) -> (f64, f64) {
    debug_assert!(o1 >= 1 || o2 >= 1);
    let (o1, o2) = (o1 as f64, o2 as f64);
    let f = move |z1: f64, z2: f64| -> f64 {
        let m = (1.0 - (z1 - o1).abs()).max(0.0) * (1.0 - (z2 - o2).abs()).max(0.0);
        m / (z1 * z1 + z2 * z2)
    };
    let touching = o1 <= 1.0 && o2 <= 1.0;
    let far = o1.max(o2) >= 16.0;
    let (lo_ord, hi_ord) = if far { (4, 8) } else { (12, 16) };
    let mut value = 0.0;
    let mut err = 0.0;
    for (x0, x1) in [(o1 - 1.0, o1), (o1, o1 + 1.0)] {
        for (y0, y1) in [(o2 - 1.0, o2), (o2, o2 + 1.0)] {
            // mirror sub-squares on the negative side (only o2 = 0 has them;
            // the hat factor is even in z_2 there)
            let (y0, y1) = if y1 <= 0.0 { (-y1, -y0) } else { (y0, y1) };
            if touching && x0.abs() < 0.5 && y0.abs() < 0.5 {
                // the origin is the (x0, y0) corner of this sub-square
                // (offsets (1,0), (0,1), (1,1) only); integrand ~ 1/|z|
                value += dyadic_corner(&f, x0, y0, 1.0);
                err += 1e-12;
                continue;
            }
            let fine = rule(hi_ord).integrate(x0, x1, |x| {
                rule(hi_ord).integrate(y0, y1, |y| f(x, y))
            });
            let coarse = rule(lo_ord).integrate(x0, x1, |x| {
                rule(lo_ord).integrate(y0, y1, |y| f(x, y))
            });
            value += fine;
            err += (fine - coarse).abs();
        }
    }
    (value, err)
}

/// Integrate f over [c1, c1+size] x [c2, c2+size] where (c1, c2) is at the
/// singular corner, via dyadic L-shaped rings toward it.
fn dyadic_corner(f: &dyn Fn(f64, f64) -> f64, c1: f64, c2: f64, size: f64) -> f64 {
    let g = rule(16);
    let mut total = 0.0;
    let mut hi = size;
    for _ in 0..46 {
        let lo = 0.5 * hi;
        let a = g.integrate(c1 + lo, c1 + hi, |x| {
            g.integrate(c2, c2 + hi, |y| f(x, y))
        });
        let b = g.integrate(c1, c1 + lo, |x| {
            g.integrate(c2 + lo, c2 + hi, |y| f(x, y))
        });
        total += a + b;
        hi = lo;
    }
    // innermost square: integrand <= ~1/|z|, contribution O(hi)
    total
}

/// Build the dimensionless table and materialize I_self at h, then verify
/// the partition-of-unity identity sum_{o != 0} W(o; h) = I_self(h), where W
/// is the |z| <= 1 truncated pair integral.
pub fn build_kernel_table(d: u32, h: f64, max_offset: usize, quad_tol: f64) -> Result<KernelTable> {
    if d == 0 || d > 2 {
        return Err(Error::Usage("kernel tables exist for d in {1, 2}".into()));
    }
    if !(h > 0.0) || h * (d as f64).sqrt() >= 1.0 {
        return Err(Error::Domain(format!(
            "cell diameter h sqrt(d) must lie below the kernel cutoff 1, got h = {h}"
        )));
    }
    if !(quad_tol > 0.0) {
        return Err(Error::Domain("quad_tol must be positive".into()));
    }

    let values = match d {
        1 => {
            let mut v = vec![0.0; max_offset + 1];
            for (o, slot) in v.iter_mut().enumerate().skip(1) {
                *slot = ghat_1d(o as u64);
            }
            v
        }
        _ => {
            let n = max_offset + 1;
            // compute the o1 >= o2 triangle in parallel rows, then mirror
            let rows = exec::par_map_indexed(n, |b| {
                let mut row = vec![0.0f64; n];
                let mut worst = 0.0f64;
                for (a, slot) in row.iter_mut().enumerate().skip(b) {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let (val, err) = ghat_2d(a as u64, b as u64);
                    if val > 0.0 {
                        worst = worst.max(err / val);
                    }
                    *slot = val;
                }
                (row, worst)
            });
            let mut v = vec![0.0; n * n];
            let mut worst = 0.0f64;
            for (b, (row, w)) in rows.iter().enumerate() {
                worst = worst.max(*w);
                for a in b..n {
                    v[b * n + a] = row[a];
                    v[a * n + b] = row[a];
                }
            }
            if worst > quad_tol {
                return Err(Error::Accuracy {
                    what: "kernel pair quadrature".into(),
                    achieved: worst,
                    requested: quad_tol,
                });
            }
            v
        }
    };

    let c = constants_for(d)?;
    let i_self = h.powi(d as i32) * (self_constant(d)? - c.sphere_area * h.ln());
    let table = KernelTable {
        d,
        h,
        max_offset,
        quad_tol,
        values,
        i_self,
    };
    consistency_check(&table)?;
    Ok(table)
}

/// sum_{o != 0} W(o; h) must reproduce I_self(h): the hats form a partition
/// of unity, so the identity is exact. Checked to a tolerance that allows
/// the accumulated per-offset quadrature error.
fn consistency_check(table: &KernelTable) -> Result<()> {
    let h = table.h;
    let d = table.d;
    let cut = 1.0 / h; // kernel cutoff in cell units
    let reach = cut.ceil() as i64 + 2;
    let sum = match d {
        1 => {
            let mut s = 0.0;
            for o in 1..=reach {
                let of = o as f64;
                let min_dist = (of - 1.0).max(0.0);
                let max_dist = of + 1.0;
                let w = if max_dist <= cut {
                    if (o as usize) <= table.max_offset {
                        table.ghat(&[o])
                    } else {
                        ghat_1d(o as u64)
                    }
                } else if min_dist >= cut {
                    0.0
                } else {
                    clipped_pair_1d(of, cut)
                };
                s += 2.0 * w; // both signs
            }
            s
        }
        _ => {
            let rows = exec::par_map_indexed(reach as usize + 1, |b| {
                let mut s = 0.0;
                for a in 0..=(reach as usize) {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let (af, bf) = (a as f64, b as f64);
                    let min_dist =
                        ((af - 1.0).max(0.0).powi(2) + (bf - 1.0).max(0.0).powi(2)).sqrt();
                    let max_dist = ((af + 1.0).powi(2) + (bf + 1.0).powi(2)).sqrt();
                    let w = if max_dist <= cut {
                        if a <= table.max_offset && b <= table.max_offset {
                            table.ghat(&[a as i64, b as i64])
                        } else {
                            ghat_2d(a as u64, b as u64).0
                        }
                    } else if min_dist >= cut {
                        0.0
                    } else {
                        clipped_pair_2d(af, bf, cut)
                    };
                    let mult = match (a == 0, b == 0) {
                        (true, true) => 0.0,
                        (true, false) | (false, true) => 2.0,
                        (false, false) => 4.0,
                    };
                    s += mult * w;
                }
                s
            });
            rows.iter().sum()
        }
    };
    let want = table.i_self / h.powi(d as i32);
    let tol = (50.0 * table.quad_tol * want.abs()).max(1e-9 * want.abs());
    if (sum - want).abs() > tol {
        return Err(Error::Accuracy {
            what: format!(
                "kernel self-term consistency: sum W = {sum:.12e} vs I_self scale {want:.12e}"
            ),
            achieved: (sum - want).abs() / want.abs(),
            requested: 50.0 * table.quad_tol,
        });
    }
    Ok(())
}

/// Truncated 1-D pair integral int (1-|z-o|)_+ 1_{|z| <= cut} / |z| dz in
/// cell units, for shell offsets crossed by the cutoff.
fn clipped_pair_1d(o: f64, cut: f64) -> f64 {
    let g = rule(24);
    let lo = (o - 1.0).max(0.0);
    let hi = (o + 1.0).min(cut);
    if hi <= lo {
        return 0.0;
    }
    // split at the hat kink
    let mid = o.clamp(lo, hi);
    let f = |z: f64| (1.0 - (z - o).abs()).max(0.0) / z;
    g.integrate(lo, mid, f) + g.integrate(mid, hi, f)
}

/// Truncated 2-D pair integral in cell units: per sub-square polar
/// integration with the radial interval clipped at the cutoff circle.
fn clipped_pair_2d(o1: f64, o2: f64, cut: f64) -> f64 {
    let g = rule(12);
    let mut total = 0.0;
    for (x0, x1) in [(o1 - 1.0, o1), (o1, o1 + 1.0)] {
        for (y0, y1) in [(o2 - 1.0, o2), (o2, o2 + 1.0)] {
            // mirror negative-side sub-squares (zero offset components only);
            // the hat factor is even there
            let (y0, y1) = if y1 <= 0.0 { (-y1, -y0) } else { (y0, y1) };
            let (x0, x1) = if x1 <= 0.0 { (-x1, -x0) } else { (x0, x1) };
            let t0 = (y0 / x1).atan();
            let t1 = (y1 / x0.max(1e-300)).atan();
            // the radial entry/exit edges switch at corner angles and where
            // the cutoff circle crosses an edge; split theta there
            let mut cuts_t = vec![t0, t1];
            for &c in &[
                (y0 / x0.max(1e-300)).atan(),
                (y1 / x1).atan(),
            ] {
                if c > t0 && c < t1 {
                    cuts_t.push(c);
                }
            }
            for &edge in &[x0, x1] {
                if cut > edge && cut.hypot(0.0) > 0.0 {
                    let c = (edge / cut).acos();
                    if c > t0 && c < t1 {
                        cuts_t.push(c);
                    }
                }
            }
            for &edge in &[y0, y1] {
                if edge > 0.0 && cut > edge {
                    let c = (edge / cut).asin();
                    if c > t0 && c < t1 {
                        cuts_t.push(c);
                    }
                }
            }
            cuts_t.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for pair in cuts_t.windows(2) {
                total += g.integrate(pair[0], pair[1], |theta| {
                    let (s, c) = theta.sin_cos();
                    let mut rin = x0 / c;
                    let mut rout = x1 / c;
                    if s > 1e-15 {
                        rin = rin.max(y0 / s);
                        rout = rout.min(y1 / s);
                    }
                    rout = rout.min(cut);
                    if rout <= rin {
                        return 0.0;
                    }
                    g.integrate(rin, rout, |r| {
                        let z1 = r * c;
                        let z2 = r * s;
                        let m = (1.0 - (z1 - o1).abs()).max(0.0)
                            * (1.0 - (z2 - o2).abs()).max(0.0);
                        m / r
                    })
                });
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn adjacent_1d_closed_form() {
        // G((1,); h) = 2 h log 2
        assert_relative_eq!(ghat_1d(1), 2.0 * std::f64::consts::LN_2, max_relative = 1e-15);
        let t = build_kernel_table(1, 1.0 / 16.0, 32, 1e-8).unwrap();
        assert_relative_eq!(
            t.g(&[1]),
            2.0 * (1.0 / 16.0) * std::f64::consts::LN_2,
            max_relative = 1e-14
        );
        assert_relative_eq!(t.g(&[-1]), t.g(&[1]), max_relative = 1e-15);
    }

    #[test]
    fn i_self_1d_closed_form() {
        // I_self = 2h (1 - log h) for h < 1/2
        for h in [1.0 / 8.0, 1.0 / 64.0] {
            let t = build_kernel_table(1, h, 16, 1e-8).unwrap();
            assert_relative_eq!(t.i_self, 2.0 * h * (1.0 - h.ln()), max_relative = 1e-13);
        }
    }

    #[test]
    fn self_constant_2d_matches_oracle() {
        // 2 pi + 2 ln 2 - 2 pi ln 2 + 4 G = 6.97816986440115 (30-digit oracle)
        assert_relative_eq!(self_constant(2).unwrap(), 6.978_169_864_401_149, max_relative = 1e-14);
    }

    #[test]
    fn ghat_2d_matches_oracle_values() {
        // frozen from nested 30-digit quadrature of the hat-correlation form
        let cases = [
            ((1, 0), 1.850_261_245_805_207_6),
            ((1, 1), 0.654_649_688_996_789_2),
            ((2, 0), 0.273_053_937_361_566_95),
            ((2, 1), 0.215_291_874_149_495_78),
            ((3, 2), 0.079_010_141_432_941_74),
            ((5, 3), 0.029_706_006_053_689_263),
        ];
        for ((a, b), want) in cases {
            let (got, err) = ghat_2d(a, b);
            assert!(
                (got - want).abs() < 1e-9 * want,
                "Ghat({a},{b}) = {got}, want {want}, est err {err:.2e}"
            );
        }
    }

    #[test]
    fn ghat_2d_far_offsets_approach_multipole() {
        // Ghat(o) = |o|^-2 + (1/3)|o|^-4 + O(|o|^-6)
        for (a, b) in [(20u64, 0u64), (17, 13), (40, 9)] {
            let (got, _) = ghat_2d(a, b);
            let r2 = (a * a + b * b) as f64;
            let model = 1.0 / r2 + 1.0 / (3.0 * r2 * r2);
            assert_relative_eq!(got, model, max_relative = 1e-4);
        }
    }

    #[test]
    fn table_symmetry_and_decay() {
        let t = build_kernel_table(2, 1.0 / 24.0, 32, 1e-7).unwrap();
        assert_relative_eq!(t.ghat(&[3, -5]), t.ghat(&[-3, 5]), max_relative = 1e-15);
        assert_relative_eq!(t.ghat(&[5, 3]), t.ghat(&[3, 5]), max_relative = 1e-15);
        // monotone decay along an axis ray beyond offset 2
        let mut prev = t.ghat(&[2, 0]);
        for a in 3..30 {
            let v = t.ghat(&[a, 0]);
            assert!(v < prev && v > 0.0, "a={a}");
            prev = v;
        }
    }

    #[test]
    fn consistency_check_runs_for_2d() {
        // h large enough that the truncation shell sits inside the table
        build_kernel_table(2, 1.0 / 12.0, 16, 1e-7).unwrap();
    }
}

#[cfg(test)]
mod debug_tests {
    use super::*;

    #[test]
    fn clipped_equals_unclipped_when_cut_far() {
        for (a, b) in [(5.0, 3.0), (12.0, 0.0), (12.0, 5.0), (11.0, 11.0)] {
            let clip = clipped_pair_2d(a, b, 1e6);
            let (full, _) = ghat_2d(a as u64, b as u64);
            eprintln!("o=({a},{b}): clipped={clip:.12} full={full:.12} rel={:.2e}", (clip-full).abs()/full);
        }
    }
}
