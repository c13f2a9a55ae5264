//! Seeded random matrices and vectors. All draws go through a caller-owned
//! generator so results are reproducible from the seed alone.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, HermitianMatrix};

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Complex Ginibre matrix (i.i.d. standard complex Gaussian entries).
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let entries: Vec<Complex64> = (0..n * n).map(|_| gaussian_complex(rng)).collect();
    ComplexMatrix::from_row_major(n, n, entries).expect("finite gaussian entries")
}

/// `(G + G*)/2` for a Ginibre `G`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(random_matrix(rng, n).into_matrix())
}

/// Uniformly distributed unit vector in `C^n`, as an `n×1` column.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<Complex64> {
    loop {
        let v = DVector::from_iterator(n, (0..n).map(|_| gaussian_complex(rng)));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// Haar-ish unitary from the QR factorization of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<Complex64> {
    let g = random_matrix(rng, n).into_matrix();
    g.qr().q()
}
