//! Support-function sampling of the numerical range `W(T)` for a random
//! 5×5 matrix and for a 2×2 Jordan block (whose range is the disc of
//! radius 1/2).
//!
//! ```bash
//! cargo run --release --example numerical_range
//! ```

use essential_absorption::linalg::ComplexMatrix;
use essential_absorption::numrange::numerical_range_boundary;
use essential_absorption::sampling::random_matrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let z = Complex64::new(0.0, 0.0);
    let jordan = ComplexMatrix::from_row_major(2, 2, vec![z, Complex64::new(1.0, 0.0), z, z])?;
    let b = numerical_range_boundary(&jordan, 16)?;
    println!("Jordan block: boundary radii");
    for s in &b.samples {
        println!("  θ = {:>6.3}  |p| = {:.12}", s.theta, s.point.norm());
    }

    let t = random_matrix(&mut ChaCha8Rng::seed_from_u64(7), 5);
    let b = numerical_range_boundary(&t, 256)?;
    println!(
        "random 5×5: {} samples, support defect {:.2e}, convexity violation {:.2e}",
        b.samples.len(),
        b.support_defect(),
        b.convexity_violation()
    );
    b.write_csv(std::io::stdout().lock())?;
    Ok(())
}
