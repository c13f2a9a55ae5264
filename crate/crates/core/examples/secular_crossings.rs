//! Two secular models whose minimal eigenvalue curves cross infinitely
//! often as `t → 0⁺`: sign changes of `f_a − f_b` at `λ = −e^{−m²}` and the
//! located crossings `(t*, λ*)` between consecutive probes.
//!
//! ```bash
//! cargo run --release --example secular_crossings
//! ```

use essential_absorption::secular::{
    crossing_locate, crossing_scan, example62_weights, Example62Kind, DEFAULT_N_MAX,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = example62_weights(Example62Kind::A, DEFAULT_N_MAX)?;
    let b = example62_weights(Example62Kind::B, DEFAULT_N_MAX)?;

    for p in crossing_scan(&a, &b, &[5, 7, 9, 11, 13])? {
        println!(
            "m = {:>2}  λ = {:.3e}  (f_a − f_b)/f_a = {:+.4}  bounds {} {}",
            p.m,
            p.lambda,
            (p.f_a - p.f_b) / p.f_a,
            p.bound_a_ok,
            p.bound_b_ok
        );
    }
    for (lo, hi) in [(-25.0f64, -49.0f64), (-49.0, -81.0)] {
        let c = crossing_locate(&a, &b, (-lo.exp(), -hi.exp()))?;
        println!(
            "crossing in (−e^{lo}, −e^{hi}): λ* = {:.16e}  t* = {:.16e}  agreement {:.1e}",
            c.lambda_star, c.t_star, c.agreement
        );
    }
    Ok(())
}
