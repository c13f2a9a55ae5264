//! Tracking the lowest eigenvalue branches of `A(t) = A₀ + tA₁` over a
//! grid, with sorted matching between neighbouring grid points.
//!
//! ```bash
//! cargo run --release --example track_branches
//! ```

use essential_absorption::linalg::HermitianMatrix;
use essential_absorption::model::{Family, PolynomialFamily};
use essential_absorption::numeric::linspace;
use essential_absorption::perturbation::track;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A₀ has a doubly degenerate level at 0; A₁ splits it.
    let a0 = HermitianMatrix::from_real_diagonal(&[0.0, 0.0, 1.0, 2.0])?;
    let a1 = HermitianMatrix::from_real_symmetric(&DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.5, 0.0, 0.2, //
            0.5, -1.0, 0.3, 0.0, //
            0.0, 0.3, 0.0, 0.1, //
            0.2, 0.0, 0.1, 0.5,
        ],
    ))?;
    let family = Family::from(PolynomialFamily::new(vec![a0, a1], None)?);

    let grid = linspace(0.0, 0.5, 11);
    let traj = track(&family, &grid, 3)?;
    for (i, t) in traj.t_grid.iter().enumerate() {
        let row: Vec<String> = traj.branches.iter().map(|b| format!("{:>9.5}", b.values[i])).collect();
        println!("t = {t:.2}  {}", row.join(" "));
    }
    for w in &traj.warnings {
        println!("warning: {w}");
    }
    traj.write_csv(std::io::stdout().lock())?;
    Ok(())
}
