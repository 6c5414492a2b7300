use loglap::domains::Domain;
use loglap::solver::{eigensolve_operator, grid_from_h, operator_for_grid, SolveOptions};

fn main() {
    let square = Domain::rect(&[1.0, 1.0]).unwrap();
    let radius = (1.0 / std::f64::consts::PI).sqrt();
    let disc = Domain::ball(2, radius).unwrap();
    for res in [48u32, 64, 96, 128] {
        let h = 1.0 / res as f64;
        let mut opts = SolveOptions::new(res, 2);
        opts.k = 2;
        let gs = grid_from_h(&square, h).unwrap();
        let gd = grid_from_h(&disc, h).unwrap();
        let os = operator_for_grid(gs, &opts).unwrap();
        let od = operator_for_grid(gd, &opts).unwrap();
        let ss = eigensolve_operator(&os, &square, &opts).unwrap();
        let sd = eigensolve_operator(&od, &disc, &opts).unwrap();
        println!(
            "h=1/{res}: l1(square)={:.6} l1(disc)={:.6} margin={:+.6} (disc cells {} -> measure deficit {:.3}%)",
            ss.eigenvalues[0], sd.eigenvalues[0],
            ss.eigenvalues[0] - sd.eigenvalues[0],
            od.n(), 100.0*(1.0 - od.n() as f64 * h * h / disc.measure()),
        );
    }
}
