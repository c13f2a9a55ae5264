//! Witnessing the cap property of the numerical range: for a unit `x` and
//! targets `ε·u + (1 − ε)·⟨Tx, x⟩` with `u ∈ W(T)`, build a unit `y` with
//! `⟨Ty, y⟩` equal to the target and `|⟨x, y⟩|² ≥ 1 − ε`.
//!
//! ```bash
//! cargo run --release --example cap_check -- 6 0.3
//! ```

use essential_absorption::numrange::cap_check;
use essential_absorption::sampling::{random_matrix, random_unit_vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dim: usize = args.next().map_or(Ok(6), |s| s.parse())?;
    let epsilon: f64 = args.next().map_or(Ok(0.3), |s| s.parse())?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = random_matrix(&mut rng, dim);
    let x = random_unit_vector(&mut rng, dim);
    let report = cap_check(&t, &x, epsilon, 500, &mut rng)?;
    print!("{}", report.to_text());
    Ok(())
}
