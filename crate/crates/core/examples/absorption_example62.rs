//! An eigenvalue at the bottom of the essential spectrum being absorbed:
//! `A(t) = diag(d) − t·aa*` with `d₁ = 0`, `d_k = e^{−k}` and the sparse
//! weights of the first worked example. The kernel of `A₀` is spanned by
//! `e₁`, so the predicted slope is `−|a₁|² = −1`.
//!
//! ```bash
//! cargo run --release --example absorption_example62 -- 400
//! ```

use essential_absorption::casebook::example62_family;
use essential_absorption::model::Family;
use essential_absorption::perturbation::{verify_absorption, AbsorptionOptions};
use essential_absorption::secular::Example62Kind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map_or(Ok(400), |s| s.parse())?;
    let family = Family::from(example62_family(Example62Kind::A, n)?);
    let report = verify_absorption(&family, 0.0, &AbsorptionOptions::default())?;
    print!("{}", report.to_text());
    println!("verdict: {}", report.verdict.as_str());
    Ok(())
}
