//! Spectral post-processing: Riesz means, counting functions, Weyl-limit
//! fits, and bound-sandwich reports tying solver output to the closed-form
//! inequalities.

use crate::bounds::{
    self, count_upper, riesz_lower_exact, riesz_upper, weyl_constants, TraceBoundParams,
};
use crate::domains::{CTauEstimate, Domain};
use crate::solver::{eigensolve_opts, SolveOptions, Spectrum};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Truncated Riesz mean sum_{j <= k} (lambda - lambda_j)_+ .
///
/// Exact whenever lambda <= lambda_k; otherwise a valid lower estimate of
/// the full discrete sum.
pub fn riesz_mean(spectrum: &Spectrum, lambda: f64) -> f64 {
    spectrum
        .eigenvalues
        .iter()
        .map(|&l| (lambda - l).max(0.0))
        .sum()
}

/// Number of computed eigenvalues strictly below lambda.
pub fn counting(spectrum: &Spectrum, lambda: f64) -> usize {
    spectrum.eigenvalues.partition_point(|&l| l < lambda)
}

/// Mean Weyl-limit estimates over a lambda window.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeylFit {
    pub count_const_est: f64,
    pub riesz_const_est: f64,
    pub count_const_target: f64,
    pub riesz_const_target: f64,
    /// max of the two relative deviations
    pub rel_dev: f64,
}

/// Means of N(L) e^{-dL} and of the Riesz mean times e^{-dL} over a sampled
/// window, compared against the Weyl constants.
///
/// The window must stay below lambda_k (so truncation is exact) and below
/// the grid frequency ceiling: e^{lambda_max} <= pi / (2 h).
pub fn weyl_fit(spectrum: &Spectrum, window: (f64, f64), samples: usize) -> Result<WeylFit> {
    let (lo, hi) = window;
    if !(hi > lo) || samples < 2 {
        return Err(Error::Usage(
            "weyl window must be increasing with >= 2 samples".into(),
        ));
    }
    let lk = *spectrum
        .eigenvalues
        .last()
        .ok_or_else(|| Error::Usage("empty spectrum".into()))?;
    if hi >= lk {
        return Err(Error::Usage(format!(
            "window end {hi} must stay below the last computed eigenvalue {lk} \
             so the truncated Riesz sum is exact"
        )));
    }
    let ceiling = std::f64::consts::PI / (2.0 * spectrum.h);
    if hi.exp() > ceiling {
        return Err(Error::Usage(format!(
            "window end e^{hi:.3} = {:.1} exceeds the resolved frequency ceiling pi/(2h) = {ceiling:.1}",
            hi.exp()
        )));
    }
    let d = spectrum.d as f64;
    let (riesz_target, count_target) = weyl_constants(spectrum.d, spectrum.measure)?;
    let mut count_acc = 0.0;
    let mut riesz_acc = 0.0;
    for i in 0..samples {
        let l = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let w = (-d * l).exp();
        count_acc += counting(spectrum, l) as f64 * w;
        riesz_acc += riesz_mean(spectrum, l) * w;
    }
    let count_est = count_acc / samples as f64;
    let riesz_est = riesz_acc / samples as f64;
    let dev_c = (count_est - count_target).abs() / count_target;
    let dev_r = (riesz_est - riesz_target).abs() / riesz_target;
    Ok(WeylFit {
        count_const_est: count_est,
        riesz_const_est: riesz_est,
        count_const_target: count_target,
        riesz_const_target: riesz_target,
        rel_dev: dev_c.max(dev_r),
    })
}

/// One row of the bound sandwich.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundRow {
    pub lambda: f64,
    /// exact lower trace bound; present only for d >= 2 and lambda >= 2C
    pub lower: Option<f64>,
    pub riesz_computed: f64,
    pub upper: f64,
    /// set when riesz_computed exceeds upper beyond the tolerance budget
    pub flagged: bool,
}

/// Per-lambda comparison of the computed Riesz mean against the closed-form
/// upper and exact lower trace bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub params: TraceBoundParams,
    pub tolerance_budget: f64,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,lower,riesz,upper,flag\n");
        for r in &self.rows {
            let lower = r.lower.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.lambda,
                lower,
                r.riesz_computed,
                r.upper,
                u8::from(r.flagged)
            ));
        }
        out
    }
}

/// Build the sandwich report on a lambda grid (capped at lambda_k by the
/// caller; values beyond would truncate the Riesz sum).
pub fn sandwich_report(
    spectrum: &Spectrum,
    c_tau: &CTauEstimate,
    lambda_grid: &[f64],
) -> Result<BoundReport> {
    let params = TraceBoundParams::new(spectrum.d, spectrum.measure, c_tau.tau, c_tau.value)?;
    let budget =
        spectrum.k as f64 * spectrum.quad_tol + spectrum.residuals.iter().sum::<f64>();
    let mut rows = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let upper = riesz_upper(spectrum.d, spectrum.measure, lambda)?;
        let lower = if spectrum.d >= 2 && lambda >= 2.0 * c_tau.value {
            Some(riesz_lower_exact(&params, lambda)?)
        } else {
            None
        };
        let riesz_computed = riesz_mean(spectrum, lambda);
        rows.push(BoundRow {
            lambda,
            lower,
            riesz_computed,
            upper,
            flagged: riesz_computed > upper + budget,
        });
    }
    Ok(BoundReport {
        rows,
        params,
        tolerance_budget: budget,
    })
}

/// Maximum deviation from the exact dilation law over the first k
/// eigenvalues: max_j |lambda_j(R Omega) - lambda_j(Omega) + log R|.
pub fn scaling_check(domain: &Domain, r: f64, resolution: u32, k: usize) -> Result<f64> {
    let scaled = domain.scale(r)?;
    let mut opts = SolveOptions::new(resolution, k);
    opts.tol = 1e-12;
    let a = eigensolve_opts(domain, &opts)?;
    let b = eigensolve_opts(&scaled, &opts)?;
    let mut worst = 0.0f64;
    for j in 0..k {
        worst = worst.max((b.eigenvalues[j] - a.eigenvalues[j] + r.ln()).abs());
    }
    Ok(worst)
}

/// lambda_1 margin of a competitor domain over the ball of equal measure.
/// The isoperimetric inequality for the first eigenvalue makes a negative
/// margin (beyond the discretization brackets) impossible.
pub fn faber_krahn_check(ball: &Spectrum, competitor: &Spectrum) -> Result<f64> {
    if ball.d != competitor.d {
        return Err(Error::Usage("dimension mismatch between spectra".into()));
    }
    let dm = (ball.measure - competitor.measure).abs() / ball.measure;
    if dm > 0.01 {
        return Err(Error::Usage(format!(
            "measures differ by {:.2}%, matched volumes required",
            100.0 * dm
        )));
    }
    Ok(competitor.eigenvalues[0] - ball.eigenvalues[0])
}

/// CSV for the Weyl fit: quantity,estimate,target,rel_dev rows.
pub fn weyl_csv(fit: &WeylFit) -> String {
    let mut out = String::from("quantity,estimate,target,rel_dev\n");
    let dc = (fit.count_const_est - fit.count_const_target).abs() / fit.count_const_target;
    let dr = (fit.riesz_const_est - fit.riesz_const_target).abs() / fit.riesz_const_target;
    out.push_str(&format!(
        "count_const,{},{},{}\n",
        fit.count_const_est, fit.count_const_target, dc
    ));
    out.push_str(&format!(
        "riesz_const,{},{},{}\n",
        fit.riesz_const_est, fit.riesz_const_target, dr
    ));
    out
}

/// CSV of the closed-form trace-bound curves.
pub fn trace_csv(d: u32, volume: f64, lambdas: &[f64]) -> Result<String> {
    let mut out = String::from("lambda,riesz_upper,count_upper\n");
    for &l in lambdas {
        out.push_str(&format!(
            "{},{},{}\n",
            l,
            riesz_upper(d, volume, l)?,
            count_upper(d, volume, l)?
        ));
    }
    Ok(out)
}

/// CSV of the published ball-bound table.
pub fn bounds_table_csv(dmin: u32, dmax: u32) -> Result<String> {
    let mut out = String::from("d,b1,b2,b3,b4,best\n");
    for d in dmin..=dmax {
        let b = bounds::lambda1_ball_bounds(d)?;
        let b2 = b.b2.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d, b.b1, b2, b.b3, b.b4, b.best
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains;
    use crate::solver::eigensolve;

    fn toy_spectrum(values: &[f64]) -> Spectrum {
        Spectrum {
            domain: Domain::rect(&[1.0]).unwrap(),
            d: 1,
            h: 1.0 / 64.0,
            measure: 1.0,
            k: values.len(),
            eigenvalues: values.to_vec(),
            residuals: vec![0.0; values.len()],
            quad_tol: 1e-8,
            tool_version: crate::TOOL_VERSION.into(),
        }
    }

    #[test]
    fn riesz_mean_and_counting_basics() {
        let s = toy_spectrum(&[1.0, 2.0, 2.5]);
        assert_eq!(riesz_mean(&s, 0.5), 0.0);
        assert_eq!(riesz_mean(&s, 3.0), 2.0 + 1.0 + 0.5);
        assert_eq!(counting(&s, 0.5), 0);
        assert_eq!(counting(&s, 2.2), 2);
        assert_eq!(counting(&s, 2.0), 1); // strict inequality
        assert_eq!(riesz_mean(&s, 2.0), 1.0);
    }

    #[test]
    fn riesz_mean_is_convex_nondecreasing_with_counting_derivative() {
        let s = toy_spectrum(&[0.3, 0.9, 1.1, 1.7, 2.2]);
        // grid avoiding the kink points so finite differences see clean slopes
        let grid: Vec<f64> = (0..200).map(|i| 0.0005 + i as f64 * 0.015).collect();
        let mut prev_slope = -1.0;
        for w in grid.windows(2) {
            let a = riesz_mean(&s, w[0]);
            let b = riesz_mean(&s, w[1]);
            assert!(b >= a - 1e-14);
            let slope = (b - a) / (w[1] - w[0]);
            assert!(slope >= prev_slope - 1e-9, "convexity violated");
            // away from kinks the slope equals the counting function exactly
            let mid = 0.5 * (w[0] + w[1]);
            if s.eigenvalues.iter().all(|&l| (l - mid).abs() > 0.02) {
                assert!(
                    (slope - counting(&s, mid) as f64).abs() < 1e-9,
                    "slope {slope} vs count {}",
                    counting(&s, mid)
                );
            }
            prev_slope = slope;
        }
    }

    #[test]
    fn weyl_fit_rejects_bad_windows() {
        let s = toy_spectrum(&[0.0, 1.0, 2.0, 3.0]);
        assert!(weyl_fit(&s, (1.0, 3.5), 10).is_err()); // beyond lambda_k
        assert!(weyl_fit(&s, (1.0, 2.5), 1).is_err()); // too few samples
        let msg = format!(
            "{}",
            weyl_fit(&toy_spectrum(&[0.0, 6.0, 7.0]), (4.0, 5.5), 10).unwrap_err()
        );
        assert!(msg.contains("ceiling"), "{msg}");
    }

    #[test]
    fn sandwich_report_on_interval() {
        let dom = Domain::ball(1, 1.0).unwrap();
        let spec = eigensolve(&dom, 64, 12, 1e-10).unwrap();
        let ct = domains::c_tau(&dom, 0.5, 1e-4).unwrap();
        let lk = *spec.eigenvalues.last().unwrap();
        let grid: Vec<f64> = (0..50)
            .map(|i| spec.eigenvalues[0] + (lk - spec.eigenvalues[0]) * i as f64 / 49.0)
            .collect();
        let report = sandwich_report(&spec, &ct, &grid).unwrap();
        assert_eq!(report.violations(), 0, "upper bound violated");
        // d = 1: no lower-bound column
        assert!(report.rows.iter().all(|r| r.lower.is_none()));
        let csv = report.to_csv();
        assert!(csv.starts_with("lambda,lower,riesz,upper,flag\n"));
        assert_eq!(csv.lines().count(), 51);
    }

    #[test]
    fn scaling_check_tiny_error() {
        let dom = Domain::ball(2, 0.5).unwrap();
        let err = scaling_check(&dom, 2.0, 32, 8).unwrap();
        assert!(err <= 1e-10, "shift error {err}");
        let z = scaling_check(&dom, 1.0, 16, 4).unwrap();
        assert!(z <= 1e-13);
    }

    #[test]
    fn faber_krahn_square_vs_disc() {
        // unit-area square vs unit-area disc at matched h
        let square = Domain::rect(&[1.0, 1.0]).unwrap();
        let radius = (1.0 / std::f64::consts::PI).sqrt();
        let disc = Domain::ball(2, radius).unwrap();
        let h = 1.0 / 64.0;
        let mut opts = SolveOptions::new(64, 4);
        opts.k = 4;
        let gs = crate::solver::grid_from_h(&square, h).unwrap();
        let gd = crate::solver::grid_from_h(&disc, h).unwrap();
        let os = crate::solver::operator_for_grid(gs, &opts).unwrap();
        let od = crate::solver::operator_for_grid(gd, &opts).unwrap();
        let ss = crate::solver::eigensolve_operator(&os, &square, &opts).unwrap();
        let sd = crate::solver::eigensolve_operator(&od, &disc, &opts).unwrap();
        let margin = faber_krahn_check(&sd, &ss).unwrap();
        assert!(margin > 0.0, "margin {margin}");
        let bad = eigensolve(&Domain::rect(&[2.0, 1.0]).unwrap(), 48, 2, 1e-9).unwrap();
        assert!(faber_krahn_check(&sd, &bad).is_err());
    }

    #[test]
    fn bounds_table_csv_shape() {
        let csv = bounds_table_csv(1, 10).unwrap();
        assert_eq!(csv.lines().count(), 11);
        let row1: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row1[0], "1");
        assert!(row1[2].is_empty(), "b2(1) must be empty");
    }
}
