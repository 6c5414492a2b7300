use loglap::domains::Domain;
use loglap::solver::eigensolve;
fn main() {
    let dom = Domain::ball(2, 1.0).unwrap();
    for res in [32u32, 64, 96] {
        let t = std::time::Instant::now();
        let s = eigensolve(&dom, res, 4, 1e-10).unwrap();
        println!("res {res}: l1 = {:.6}  l2..4 = {:.4?}  ({} cells, {:.1}s)",
            s.eigenvalues[0], &s.eigenvalues[1..4], (s.measure / (s.h*s.h)).round(), t.elapsed().as_secs_f64());
    }
}
