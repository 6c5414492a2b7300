//! Command-line front end: reproduction recipes for the spectral bounds,
//! the Galerkin eigensolver, and the verification reports.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence.

use clap::{Args, Parser, Subcommand};
use loglap::analysis;
use loglap::bounds;
use loglap::domains::{self, Domain};
use loglap::solver::{self, SolveOptions, Spectrum};
use loglap::specfun;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "loglap", version, about = "spectral toolkit for the half logarithmic Laplacian")]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DomainArgs {
    /// Domain kind: ball | box | mask.
    #[arg(long)]
    domain: String,
    /// Dimension (balls; boxes infer it from --lengths).
    #[arg(long)]
    dim: Option<u32>,
    /// Ball radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Comma-separated box side lengths, e.g. 1.0,2.5.
    #[arg(long)]
    lengths: Option<String>,
    /// Cell-mask file (first line `h <value>`, then rows of 0/1).
    #[arg(long)]
    mask_path: Option<PathBuf>,
}

impl DomainArgs {
    fn build(&self) -> loglap::Result<Domain> {
        match self.domain.as_str() {
            "ball" => {
                let dim = self
                    .dim
                    .ok_or_else(|| loglap::Error::Usage("ball needs --dim".into()))?;
                let radius = self
                    .radius
                    .ok_or_else(|| loglap::Error::Usage("ball needs --radius".into()))?;
                Domain::ball(dim, radius)
            }
            "box" => {
                let text = self
                    .lengths
                    .as_ref()
                    .ok_or_else(|| loglap::Error::Usage("box needs --lengths".into()))?;
                let lengths: Result<Vec<f64>, _> =
                    text.split(',').map(|s| s.trim().parse::<f64>()).collect();
                let lengths = lengths
                    .map_err(|e| loglap::Error::Usage(format!("bad --lengths: {e}")))?;
                Domain::rect(&lengths)
            }
            "mask" => {
                let path = self
                    .mask_path
                    .as_ref()
                    .ok_or_else(|| loglap::Error::Usage("mask needs --mask-path".into()))?;
                let text = std::fs::read_to_string(path)?;
                domains::parse_mask(&text)
            }
            other => Err(loglap::Error::Usage(format!(
                "unknown domain kind {other:?} (expected ball | box | mask)"
            ))),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Emit the d = dmin..dmax table of unit-ball lower bounds b1..b4.
    BoundsTable {
        #[arg(long, default_value_t = 1)]
        dmin: u32,
        #[arg(long, default_value_t = 10)]
        dmax: u32,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the closed-form Riesz/count upper-bound curves over lambda.
    Trace {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        volume: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda_min: f64,
        #[arg(long, default_value_t = 5.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the lowest eigenvalues and write a spectrum JSON.
    Solve {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        resolution: u32,
        #[arg(long, default_value_t = 16)]
        eigs: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        quad_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Weyl-limit fit over a lambda window of a stored spectrum.
    Weyl {
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        window_lo: f64,
        #[arg(long)]
        window_hi: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Domain constant C_{Omega,tau} with certified error.
    Ctau {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Optional Monte Carlo cross-check sample count.
        #[arg(long)]
        mc: Option<u64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Bound-sandwich report for a stored spectrum.
    Sandwich {
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 200)]
        grid_points: usize,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the exact dilation shift on a stored spectrum's domain.
    Scaling {
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        factor: f64,
    },
    /// Sweep the small-argument Bessel bound region and count violations.
    BesselCheck {
        #[arg(long, default_value_t = 10.0)]
        nu_max: f64,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = loglap::configure_threads(n) {
            eprintln!("loglap: could not configure {n} threads: {e}");
            std::process::exit(2);
        }
    }
    match run(cli.command) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("loglap: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> loglap::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cmd: Command) -> loglap::Result<()> {
    match cmd {
        Command::BoundsTable {
            dmin,
            dmax,
            format,
            out,
        } => {
            if dmin == 0 || dmax < dmin {
                return Err(loglap::Error::Usage(
                    "need 1 <= dmin <= dmax for the bounds table".into(),
                ));
            }
            let text = match format.as_str() {
                "csv" => analysis::bounds_table_csv(dmin, dmax)?,
                "json" => {
                    let rows: Vec<_> = (dmin..=dmax)
                        .map(bounds::lambda1_ball_bounds)
                        .collect::<loglap::Result<_>>()?;
                    serde_json::to_string_pretty(&rows).expect("serializable") + "\n"
                }
                other => {
                    return Err(loglap::Error::Usage(format!(
                        "unknown format {other:?} (expected csv | json)"
                    )))
                }
            };
            emit(&text, &out)
        }
        Command::Trace {
            dim,
            volume,
            lambda_min,
            lambda_max,
            points,
            out,
        } => {
            if points < 2 || lambda_max <= lambda_min {
                return Err(loglap::Error::Usage("need an increasing lambda range with >= 2 points".into()));
            }
            let grid: Vec<f64> = (0..points)
                .map(|i| lambda_min + (lambda_max - lambda_min) * i as f64 / (points - 1) as f64)
                .collect();
            let text = analysis::trace_csv(dim, volume, &grid)?;
            emit(&text, &out)
        }
        Command::Solve {
            domain,
            resolution,
            eigs,
            tol,
            quad_tol,
            out,
        } => {
            let dom = domain.build()?;
            let mut opts = SolveOptions::new(resolution, eigs);
            opts.tol = tol;
            opts.quad_tol = quad_tol;
            let spectrum = solver::eigensolve_opts(&dom, &opts)?;
            spectrum.save(&out)?;
            eprintln!(
                "wrote {} eigenvalues (lambda_1 = {}) to {}",
                spectrum.k,
                spectrum.eigenvalues[0],
                out.display()
            );
            Ok(())
        }
        Command::Weyl {
            spectrum,
            window_lo,
            window_hi,
            samples,
            format,
            out,
        } => {
            let spec = Spectrum::load(&spectrum)?;
            let fit = analysis::weyl_fit(&spec, (window_lo, window_hi), samples)?;
            let text = match format.as_str() {
                "csv" => analysis::weyl_csv(&fit),
                "json" => serde_json::to_string_pretty(&fit).expect("serializable") + "\n",
                other => {
                    return Err(loglap::Error::Usage(format!(
                        "unknown format {other:?} (expected csv | json)"
                    )))
                }
            };
            emit(&text, &out)
        }
        Command::Ctau {
            domain,
            tau,
            rel_tol,
            mc,
            seed,
        } => {
            let dom = domain.build()?;
            let default_tol = if matches!(dom, Domain::CellMask { .. }) {
                0.5 // mask error bounds are deliberately conservative
            } else {
                1e-4
            };
            let est = domains::c_tau(&dom, tau, rel_tol.unwrap_or(default_tol))?;
            println!(
                "c_tau = {} +- {} (tau = {}, cutoff radius = {})",
                est.value, est.abs_error, est.tau, est.cutoff_radius
            );
            if let Some(samples) = mc {
                let (value, stderr) = domains::c_tau_monte_carlo(&dom, tau, samples, seed)?;
                println!("monte carlo = {value} +- {stderr} ({samples} samples, seed {seed})");
            }
            Ok(())
        }
        Command::Sandwich {
            spectrum,
            tau,
            grid_points,
            format,
            out,
        } => {
            let spec = Spectrum::load(&spectrum)?;
            if grid_points < 2 {
                return Err(loglap::Error::Usage("need >= 2 grid points".into()));
            }
            let rel_tol = if matches!(spec.domain, Domain::CellMask { .. }) {
                0.5
            } else {
                1e-4
            };
            let ct = domains::c_tau(&spec.domain, tau, rel_tol)?;
            let lo = spec.eigenvalues[0];
            let hi = *spec.eigenvalues.last().unwrap();
            let grid: Vec<f64> = (0..grid_points)
                .map(|i| lo + (hi - lo) * i as f64 / (grid_points - 1) as f64)
                .collect();
            let report = analysis::sandwich_report(&spec, &ct, &grid)?;
            let text = match format.as_str() {
                "csv" => report.to_csv(),
                "json" => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
                other => {
                    return Err(loglap::Error::Usage(format!(
                        "unknown format {other:?} (expected csv | json)"
                    )))
                }
            };
            eprintln!(
                "{} rows, {} upper-bound violations",
                report.rows.len(),
                report.violations()
            );
            emit(&text, &out)
        }
        Command::Scaling { spectrum, factor } => {
            let spec = Spectrum::load(&spectrum)?;
            let extent = 2.0
                * match &spec.domain {
                    Domain::Ball { radius, .. } => *radius,
                    Domain::Box { lengths, .. } => {
                        0.5 * lengths.iter().cloned().fold(0.0f64, f64::max)
                    }
                    Domain::CellMask { h, mask, .. } => {
                        0.5 * h * mask.len().max(mask[0].len()) as f64
                    }
                };
            let resolution = (extent / spec.h).round() as u32;
            let err = analysis::scaling_check(&spec.domain, factor, resolution, spec.k)?;
            println!("max |lambda_j(R Omega) - lambda_j(Omega) + log R| = {err} over j <= {} (R = {factor})", spec.k);
            Ok(())
        }
        Command::BesselCheck {
            nu_max,
            samples,
            seed,
        } => {
            use rand::{Rng, SeedableRng};
            let nu_min = 3.0_f64.sqrt() - 2.0;
            if nu_max < nu_min {
                return Err(loglap::Error::Usage(format!(
                    "--nu-max must be at least sqrt(3) - 2 = {nu_min:.6}"
                )));
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut violations = 0u64;
            for _ in 0..samples {
                let nu = rng.gen_range(nu_min..nu_max);
                let x = rng.gen_range(0.0..2.0 * (2.0 * (nu + 2.0)).sqrt());
                if !specfun::bessel_bound_check(nu, x)? {
                    violations += 1;
                    eprintln!("violation at nu = {nu}, x = {x}");
                }
            }
            println!("{violations} violations in {samples} samples (nu <= {nu_max})");
            if violations > 0 {
                return Err(loglap::Error::Accuracy {
                    what: "small-argument Bessel bound".into(),
                    achieved: violations as f64,
                    requested: 0.0,
                });
            }
            Ok(())
        }
    }
}
