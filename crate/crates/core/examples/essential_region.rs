//! Essential region of a structured family and the slope of its threshold.
//!
//! `d_k` alternates between `1/k` and the constant 1 while `e_k` alternates
//! between 1 and −2, so the paired limit points are `(0, 1)` and `(1, −2)`.
//! The threshold `Σ(t) = min(t, 1 − 2t)` leaves 0 with slope `ω = 1`.
//!
//! ```bash
//! cargo run --release --example essential_region
//! ```

use essential_absorption::model::{DiagonalRule, DiagonalTail, StructuredFamily};
use essential_absorption::numeric::logspace;
use essential_absorption::numrange::{essential_region, sigma_slope_check};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 200;
    let d = DiagonalTail::from_rule(
        DiagonalRule::Interleave {
            odd: Box::new(DiagonalRule::Reciprocal { scale: 1.0 }),
            even: Box::new(DiagonalRule::Constant(1.0)),
        },
        vec![],
        n,
    )?;
    let e = DiagonalTail::from_rule(
        DiagonalRule::Interleave {
            odd: Box::new(DiagonalRule::Constant(1.0)),
            even: Box::new(DiagonalRule::Constant(-2.0)),
        },
        vec![],
        n,
    )?;
    let family = StructuredFamily::new(d, Some(e), vec![])?;

    let data = family.essential_points();
    println!("limit points: {:?}", data.points);
    let region = essential_region(&data)?;
    println!("region vertices: {:?}", region.vertices());

    let report = sigma_slope_check(&family, &logspace(1e-6, 1e-1, 12))?;
    print!("{}", report.to_text());
    for (t, q) in &report.samples {
        println!("  t = {t:.1e}  (Σ(t) − Σ(0))/t = {q:.6}");
    }
    Ok(())
}
