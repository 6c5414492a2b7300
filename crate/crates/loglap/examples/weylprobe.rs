use loglap::analysis::weyl_fit;
use loglap::domains::Domain;
use loglap::solver::{eigensolve_opts, SolveOptions};

fn main() {
    let dom = Domain::rect(&[1.0, 1.0]).unwrap();
    let res: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(256);
    let k: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(700);
    let t = std::time::Instant::now();
    let mut opts = SolveOptions::new(res, k);
    opts.tol = 1e-8;
    let spec = eigensolve_opts(&dom, &opts).unwrap();
    let solve_t = t.elapsed().as_secs_f64();
    println!("res {res} k {k}: lambda_k = {:.4}, solve {solve_t:.1}s", spec.eigenvalues[k-1]);
    let fit = weyl_fit(&spec, (3.5, 4.5), 101).unwrap();
    println!(
        "count: {:.6} vs {:.6} ({:+.2}%)  riesz: {:.6} vs {:.6} ({:+.2}%)",
        fit.count_const_est, fit.count_const_target,
        100.0 * (fit.count_const_est / fit.count_const_target - 1.0),
        fit.riesz_const_est, fit.riesz_const_target,
        100.0 * (fit.riesz_const_est / fit.riesz_const_target - 1.0),
    );
}
