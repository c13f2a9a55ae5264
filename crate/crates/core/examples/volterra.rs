//! Discretized Volterra operator: eigenvalues of `cosθ·Re V + sinθ·Im V`
//! against `sinθ/(2θ + 2nπ)`, a grid-refinement study, and the first-order
//! prediction from compressing `Im V` onto the kernel of `Re V`.
//!
//! ```bash
//! cargo run --release --example volterra -- 1024 0.5
//! ```

use std::time::Instant;

use essential_absorption::casebook::{is_refining, refinement_study, volterra_verify};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(1024), |s| s.parse())?;
    let theta: f64 = args.next().map_or(Ok(0.5), |s| s.parse())?;

    let start = Instant::now();
    let report = volterra_verify(n, theta, 5)?;
    print!("{}", report.to_text());
    println!("{:>4} {:>14} {:>14} {:>10}", "n", "exact", "computed", "rel_err");
    for r in &report.rows {
        println!("{:>4} {:>14.8} {:>14.8} {:>10.2e}", r.n, r.exact, r.computed, r.rel_error);
    }
    println!("compression of Im V on ker Re V (targets 1/(2πn)):");
    for r in &report.compression_rows {
        println!("{:>4} {:>14.8} {:>14.8} {:>10.2e}", r.n, r.exact, r.computed, r.rel_error);
    }
    println!("verify took {:.2?}", start.elapsed());

    let start = Instant::now();
    let levels = refinement_study(theta, &[128, 256, 512, 1024], 5)?;
    for l in &levels {
        println!("N = {:>5}: max relative error {:.3e}", l.n, l.max_rel_error);
    }
    println!("monotone under refinement: {}", is_refining(&levels, 0.1));
    println!("refinement took {:.2?}", start.elapsed());
    Ok(())
}
