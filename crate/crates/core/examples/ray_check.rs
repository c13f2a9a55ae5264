//! Approximating points along a ray inside the joint essential region of
//! `(A₀, A₁)` by quadratic forms of finite truncations.
//!
//! Here `d_k` alternates between `k` (escaping to +∞) and `1/k`, with
//! `e_k = 1`. The region is the half-line `{x ≥ 0, y = 1}`, so the ray from
//! `(0, 1)` along `(1, 0)` stays inside it.
//!
//! ```bash
//! cargo run --release --example ray_check
//! ```

use essential_absorption::model::{DiagonalRule, DiagonalTail, StructuredFamily};
use essential_absorption::numrange::{ray_check, RayStatus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 512;
    let d = DiagonalTail::from_rule(
        DiagonalRule::Interleave {
            odd: Box::new(DiagonalRule::Linear { slope: 1.0 }),
            even: Box::new(DiagonalRule::Reciprocal { scale: 1.0 }),
        },
        vec![],
        n,
    )?;
    let e = DiagonalTail::from_rule(DiagonalRule::Constant(1.0), vec![], n)?;
    let family = StructuredFamily::new(d, Some(e), vec![])?;
    println!("essential data: {:?}", family.essential_points());

    let report = ray_check(&family, (0.0, 1.0), (1.0, 0.0), &[1.0, 10.0, 100.0], &[64, 128, 256, 512])?;
    match &report.status {
        RayStatus::Vacuous(why) => println!("vacuous: {why}"),
        RayStatus::Checked => {
            for r in &report.rows {
                println!(
                    "t = {:>5}  N = {:>4}  target = ({:.4}, {:.4})  achieved = ({:.4}, {:.4})  error = {:.2e}",
                    r.t, r.n, r.target.0, r.target.1, r.achieved.0, r.achieved.1, r.error
                );
            }
        }
    }
    Ok(())
}
