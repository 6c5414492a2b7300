use loglap::domains::{self, Domain};
use loglap::solver::{build_operator, plane_wave_rayleigh, SolveOptions};
use rand::{Rng, SeedableRng};

fn main() {
    let dom = Domain::ball(2, 1.0).unwrap();
    let opts = SolveOptions::new(128, 4);
    let op = build_operator(&dom, &opts).unwrap();
    let ct = domains::c_tau(&dom, 0.5, 1e-4).unwrap();
    println!("C = {} +- {}", ct.value, ct.abs_error);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = -1e9;
    for i in 0..20 {
        let norm = rng.gen_range(1.0f64..50.0);
        let ang = rng.gen_range(0.0..std::f64::consts::TAU);
        let xi = [norm * ang.cos(), norm * ang.sin()];
        let pw = plane_wave_rayleigh(&op, dom.measure(), &xi).unwrap();
        let bound = norm.ln() + norm.powf(-0.5) * ct.value;
        let slack = bound + pw.budget - pw.rayleigh;
        let raw = bound - pw.rayleigh; // without budget
        worst = worst.max(-raw);
        println!(
            "{i:2} |xi|={norm:7.3} rq={:8.5} bound={:8.5} raw_margin={raw:+.5} budget={:.5} ok={}",
            pw.rayleigh, bound, pw.budget, slack >= 0.0
        );
    }
    println!("worst raw overshoot (rq - bound) = {worst:+.5}");
}
