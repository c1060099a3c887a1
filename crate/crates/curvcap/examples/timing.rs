//! Rough timings for the O(n^3) kernels on the Cantor generations used in
//! the test suite. Run with `cargo run --example timing`.

use std::time::Instant;

use curvcap::capacity::{optimize_gplus, OptimizeConfig};
use curvcap::kernels::{curvature_per_atom, curvature_total};
use curvcap::plane::cantor_set;

fn main() {
    for n in [3, 4, 5] {
        let m = cantor_set(n).unwrap();
        let eps = m.resolution();
        let t0 = Instant::now();
        let total = curvature_total(&m, eps).unwrap().total;
        let t1 = t0.elapsed();
        let t2 = Instant::now();
        let _ = curvature_per_atom(&m, eps).unwrap();
        let t3 = t2.elapsed();
        println!(
            "cantor({n}): {} atoms, K = {:.6}, total {:?}, per_atom {:?}",
            m.len(),
            total,
            t1,
            t3
        );
    }
    let m = cantor_set(4).unwrap();
    let cfg = OptimizeConfig { max_iters: 5, max_polish_evals: 4, ..Default::default() };
    let t0 = Instant::now();
    let (est, trace) = optimize_gplus(&m, &cfg).unwrap();
    println!(
        "optimize cantor(4) 5 iters: g = {:.6}, rows = {}, {:?}",
        est.g_value,
        trace.len(),
        t0.elapsed()
    );
}
