//! Dense complex linear algebra: Hermitian eigendecomposition, compressions
//! onto subspaces and Rayleigh quotients.
//!
//! Matrices are stored as `nalgebra::DMatrix<Complex64>`. Every other module
//! goes through the newtypes defined here so that the finiteness and
//! Hermitian-symmetry invariants are checked once, at construction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Residual bound for eigenpairs, relative to the matrix scale.
pub const TOL_EIG: f64 = 1e-10;
/// Admissible deviation of `V* V` from the identity.
pub const TOL_ORTHO: f64 = 1e-10;
/// Eigenvalues closer than `CLUSTER_TOL * scale` are treated as one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Largest tolerated pre-symmetrization defect, relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Gram-matrix tolerance for bases passed to [`compress`].
pub const GRAM_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix must be non-empty")]
    Empty,
    #[error("expected {expected} entries, got {actual}")]
    EntryCount { expected: usize, actual: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {limit:.3e}")]
    NotHermitian { defect: f64, limit: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("Hermitian eigensolver did not converge for a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },
    #[error("basis is not orthonormal: max Gram defect {max_defect:.3e}")]
    NonOrthonormalBasis { max_defect: f64 },
    #[error("quadratic form requires a non-zero vector")]
    ZeroVector,
}

fn check_finite(m: &DMatrix<Complex64>) -> Result<(), LinalgError> {
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let z = m[(row, col)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(LinalgError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

/// A general dense complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    m: DMatrix<Complex64>,
}

impl ComplexMatrix {
    pub fn from_row_major(
        rows: usize,
        cols: usize,
        entries: Vec<Complex64>,
    ) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if entries.len() != rows * cols {
            return Err(LinalgError::EntryCount {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    pub fn from_dmatrix(m: DMatrix<Complex64>) -> Result<Self, LinalgError> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(LinalgError::Empty);
        }
        check_finite(&m)?;
        Ok(Self { m })
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self, LinalgError> {
        Self::from_dmatrix(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn diagonal(values: &[Complex64]) -> Result<Self, LinalgError> {
        Self::from_dmatrix(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn nrows(&self) -> usize {
        self.m.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.m.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.m.nrows() == self.m.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    /// Frobenius norm; used as the scale for every relative tolerance.
    pub fn scale(&self) -> f64 {
        self.m.norm()
    }

    /// `(e^{-iθ} T + e^{iθ} T*) / 2`.
    pub fn rotated_real_part(&self, theta: f64) -> Result<HermitianMatrix, LinalgError> {
        self.require_square()?;
        let rot = Complex64::from_polar(1.0, -theta);
        let m = (&self.m * rot + self.m.adjoint() * rot.conj()) * Complex64::new(0.5, 0.0);
        Ok(HermitianMatrix::symmetrized(m))
    }

    pub fn real_part(&self) -> Result<HermitianMatrix, LinalgError> {
        self.rotated_real_part(0.0)
    }

    pub fn imag_part(&self) -> Result<HermitianMatrix, LinalgError> {
        self.rotated_real_part(std::f64::consts::FRAC_PI_2)
    }

    fn require_square(&self) -> Result<(), LinalgError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(LinalgError::NotSquare {
                rows: self.nrows(),
                cols: self.ncols(),
            })
        }
    }
}

/// A Hermitian matrix. Construction symmetrizes exactly and remembers the
/// defect that was removed.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    m: DMatrix<Complex64>,
    defect: f64,
}

/// Equality compares entries only; the recorded symmetrization defect is
/// provenance, not value.
impl PartialEq for HermitianMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}

impl HermitianMatrix {
    /// Symmetrizes `M <- (M + M*)/2`; fails if the removed defect exceeds
    /// `SYMMETRY_TOL * max|entry|`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        matrix.require_square()?;
        let m = matrix.into_matrix();
        let max_entry = m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let mut defect = 0.0_f64;
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        let limit = SYMMETRY_TOL * max_entry;
        if defect > limit {
            return Err(LinalgError::NotHermitian { defect, limit });
        }
        let mut h = Self::symmetrized(m);
        h.defect = defect;
        Ok(h)
    }

    /// Symmetrizes without a defect check. Only for matrices that are
    /// Hermitian by construction up to rounding.
    pub(crate) fn symmetrized(m: DMatrix<Complex64>) -> Self {
        let half = Complex64::new(0.5, 0.0);
        let m = (&m + m.adjoint()) * half;
        Self { m, defect: 0.0 }
    }

    pub fn from_real_symmetric(m: &DMatrix<f64>) -> Result<Self, LinalgError> {
        Self::new(ComplexMatrix::from_real(m)?)
    }

    pub fn from_real_diagonal(values: &[f64]) -> Result<Self, LinalgError> {
        if values.is_empty() {
            return Err(LinalgError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { row: i, col: i });
        }
        let diag: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(Self {
            m: DMatrix::from_diagonal(&DVector::from_vec(diag)),
            defect: 0.0,
        })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
            defect: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix { m: self.m.clone() }
    }

    pub fn scale(&self) -> f64 {
        self.m.norm()
    }

    pub fn is_real(&self) -> bool {
        self.m.iter().all(|z| z.im == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.m[(i, j)] == ZERO))
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            m: &self.m * Complex64::new(factor, 0.0),
            defect: 0.0,
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            m: &self.m + &other.m,
            defect: 0.0,
        })
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &Self) -> Result<(), LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        self.m += &other.m * Complex64::new(factor, 0.0);
        Ok(())
    }

    /// `self += coefficient * a a*`; exact Hermitian symmetry is preserved
    /// because entry `(i,j)` and `(j,i)` are computed as conjugates.
    pub fn add_rank_one(&mut self, coefficient: f64, a: &[Complex64]) -> Result<(), LinalgError> {
        let n = self.dim();
        if a.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                actual: a.len(),
            });
        }
        for j in 0..n {
            if a[j] == ZERO {
                continue;
            }
            for i in 0..n {
                if a[i] != ZERO {
                    self.m[(i, j)] += a[i] * a[j].conj() * coefficient;
                }
            }
        }
        Ok(())
    }

    pub fn matvec(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        &self.m * x
    }
}

/// Ascending eigenvalues with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

impl EigenDecomposition {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> DVector<Complex64> {
        self.vectors.column(i).into_owned()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest `‖M v_i − λ_i v_i‖` over all pairs.
    pub fn max_residual(&self, m: &HermitianMatrix) -> f64 {
        let mv = m.as_matrix() * &self.vectors;
        (0..self.len())
            .map(|i| {
                let lam = Complex64::new(self.values[i], 0.0);
                (mv.column(i) - self.vectors.column(i) * lam).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|V* V − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        gram_defect(&self.vectors)
    }

    /// Groups consecutive eigenvalues closer than `tol` into index ranges.
    pub fn clusters(&self, tol: f64) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.values.len() {
            if i == self.values.len() || self.values[i] - self.values[i - 1] > tol {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    /// Orthonormal columns spanning the eigenvectors whose indices are listed.
    pub fn basis_for(&self, indices: &[usize]) -> DMatrix<Complex64> {
        let cols: Vec<_> = indices.iter().map(|&i| self.vectors.column(i)).collect();
        if cols.is_empty() {
            DMatrix::zeros(self.vectors.nrows(), 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }

    /// Spectral projector `Σ v_i v_i*` for the listed indices.
    pub fn projector(&self, indices: &[usize]) -> DMatrix<Complex64> {
        let b = self.basis_for(indices);
        &b * b.adjoint()
    }
}

fn sort_ascending(values: Vec<f64>, vectors: DMatrix<Complex64>) -> EigenDecomposition {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let cols: Vec<_> = order.iter().map(|&i| vectors.column(i)).collect();
    EigenDecomposition {
        values: sorted_values,
        vectors: DMatrix::from_columns(&cols),
    }
}

fn real_copy(m: &HermitianMatrix) -> DMatrix<f64> {
    m.as_matrix().map(|z| z.re)
}

/// Full Hermitian eigendecomposition (tridiagonalization + implicit QR).
pub fn hermitian_eig(m: &HermitianMatrix) -> Result<EigenDecomposition, LinalgError> {
    let n = m.dim();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let budget = 100 * n.max(10);
    if m.is_real() {
        let eig = SymmetricEigen::try_new(real_copy(m), f64::EPSILON, budget)
            .ok_or(LinalgError::NoConvergence { dim: n })?;
        let vectors = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        Ok(sort_ascending(eig.eigenvalues.iter().copied().collect(), vectors))
    } else {
        let eig = SymmetricEigen::try_new(m.as_matrix().clone(), f64::EPSILON, budget)
            .ok_or(LinalgError::NoConvergence { dim: n })?;
        Ok(sort_ascending(
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors,
        ))
    }
}

/// Ascending eigenvalues only; skips eigenvector accumulation.
pub fn hermitian_eigenvalues(m: &HermitianMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = m.dim();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let mut values: Vec<f64> = if m.is_real() {
        real_copy(m).symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.as_matrix()
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NoConvergence { dim: n });
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn split(m: &DMatrix<Complex64>) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
    let im = m.map(|z| z.im);
    let has_im = im.iter().any(|&x| x != 0.0);
    (m.map(|z| z.re), has_im.then_some(im))
}

/// Complex product through real gemm kernels (nalgebra only dispatches
/// `f32`/`f64` to a blocked kernel); purely real factors skip the
/// imaginary products.
pub fn complex_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let mut re = &ar * &br;
    let mut im = DMatrix::<f64>::zeros(a.nrows(), b.ncols());
    if let Some(ai) = &ai {
        im += ai * &br;
        if let Some(bi) = &bi {
            re -= ai * bi;
        }
    }
    if let Some(bi) = &bi {
        im += &ar * bi;
    }
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

/// Largest entry of `|B* B − I|`.
pub fn gram_defect(basis: &DMatrix<Complex64>) -> f64 {
    let g = complex_product(&basis.adjoint(), basis);
    let mut worst = 0.0_f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// The `k×k` compression with entries `⟨T b_j, b_i⟩ = (B* T B)_{ij}`; basis
/// vectors are the columns of `basis`.
pub fn compress(
    t: &ComplexMatrix,
    basis: &DMatrix<Complex64>,
) -> Result<ComplexMatrix, LinalgError> {
    t.require_square()?;
    if basis.nrows() != t.nrows() {
        return Err(LinalgError::DimensionMismatch {
            expected: t.nrows(),
            actual: basis.nrows(),
        });
    }
    if basis.ncols() == 0 {
        return Err(LinalgError::Empty);
    }
    let max_defect = gram_defect(basis);
    if max_defect > GRAM_TOL {
        return Err(LinalgError::NonOrthonormalBasis { max_defect });
    }
    let tb = complex_product(t.as_matrix(), basis);
    ComplexMatrix::from_dmatrix(complex_product(&basis.adjoint(), &tb))
}

/// Hermitian compression `B* M B`, symmetrized.
pub fn compress_hermitian(
    m: &HermitianMatrix,
    basis: &DMatrix<Complex64>,
) -> Result<HermitianMatrix, LinalgError> {
    let c = compress(&m.to_complex(), basis)?;
    Ok(HermitianMatrix::symmetrized(c.into_matrix()))
}

/// Rayleigh quotient `⟨T x, x⟩ / ⟨x, x⟩`.
pub fn quad_form(t: &ComplexMatrix, x: &[Complex64]) -> Result<Complex64, LinalgError> {
    t.require_square()?;
    if x.len() != t.ncols() {
        return Err(LinalgError::DimensionMismatch {
            expected: t.ncols(),
            actual: x.len(),
        });
    }
    let v = DVector::from_column_slice(x);
    let nn = v.norm_squared();
    if nn == 0.0 {
        return Err(LinalgError::ZeroVector);
    }
    let tx = t.as_matrix() * &v;
    Ok(v.dotc(&tx) / nn)
}

/// Rayleigh quotient of a Hermitian matrix with the rounding-level imaginary
/// part clamped away.
pub fn quad_form_real(m: &HermitianMatrix, x: &[Complex64]) -> Result<f64, LinalgError> {
    Ok(quad_form(&m.to_complex(), x)?.re)
}

/// Normalizes a vector; `None` for the zero vector.
pub fn normalized(x: &DVector<Complex64>) -> Option<DVector<Complex64>> {
    let n = x.norm();
    (n > 0.0).then(|| x / Complex64::new(n, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_hermitian, random_matrix, random_unit_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_eigenvalues() {
        let m = HermitianMatrix::from_real_diagonal(&[1.0, 1.0, 1.0]).unwrap();
        let eig = hermitian_eig(&m).unwrap();
        assert_eq!(eig.values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted_with_basis_vectors() {
        let m = HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let eig = hermitian_eig(&m).unwrap();
        assert_eq!(eig.values(), &[1.0, 2.0, 3.0]);
        for (i, &k) in [1usize, 2, 0].iter().enumerate() {
            assert!((eig.vectors()[(k, i)].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn random_reconstruction_dim_50() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_hermitian(&mut rng, 50);
        let eig = hermitian_eig(&m).unwrap();
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(
            50,
            eig.values().iter().map(|&v| c(v)),
        ));
        let rec = eig.vectors() * lam * eig.vectors().adjoint();
        let err = (rec - m.as_matrix()).norm();
        assert!(err <= 1e-10 * m.scale(), "reconstruction error {err}");
        assert!(eig.max_residual(&m) <= TOL_EIG * m.scale());
        assert!(eig.orthonormality_defect() <= TOL_ORTHO);
        assert!(eig.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigensolver_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_hermitian(&mut rng, 20);
        let a = hermitian_eig(&m).unwrap();
        let b = hermitian_eig(&m).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.vectors(), b.vectors());
    }

    #[test]
    fn values_only_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_hermitian(&mut rng, 30);
        let full = hermitian_eig(&m).unwrap();
        let vals = hermitian_eigenvalues(&m).unwrap();
        for (a, b) in full.values().iter().zip(&vals) {
            assert!((a - b).abs() <= 1e-12 * m.scale());
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let t = ComplexMatrix::from_row_major(2, 2, vec![c(1.0), c(2.0), c(0.0), c(1.0)]).unwrap();
        assert!(matches!(
            HermitianMatrix::new(t),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let r = ComplexMatrix::from_row_major(1, 2, vec![c(f64::NAN), c(0.0)]);
        assert_eq!(r, Err(LinalgError::NonFinite { row: 0, col: 0 }));
    }

    #[test]
    fn compress_full_basis_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_matrix(&mut rng, 4);
        let c = compress(&t, &DMatrix::identity(4, 4)).unwrap();
        assert!((c.as_matrix() - t.as_matrix()).norm() <= 1e-15 * t.scale());
    }

    #[test]
    fn compress_coordinate_subspace() {
        let t = ComplexMatrix::diagonal(&[c(1.0), c(2.0), c(3.0)]).unwrap();
        let mut b = DMatrix::zeros(3, 2);
        b[(0, 0)] = c(1.0);
        b[(2, 1)] = c(1.0);
        let r = compress(&t, &b).unwrap();
        assert_eq!(r.as_matrix(), &DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(3.0)])));
    }

    #[test]
    fn compress_matches_direct_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = random_matrix(&mut rng, 6);
        let u = random_unit_vector(&mut rng, 6);
        let w = random_unit_vector(&mut rng, 6);
        let w = &w - &u * u.dotc(&w);
        let w = normalized(&w).unwrap();
        let b = DMatrix::from_columns(&[u.column(0), w.column(0)]);
        let r = compress(&t, &b).unwrap();
        let cols = [&u, &w];
        for i in 0..2 {
            for j in 0..2 {
                // ⟨T b_j, b_i⟩ computed directly
                let direct = cols[i].dotc(&(t.as_matrix() * cols[j]));
                assert!((r.entry(i, j) - direct).norm() <= 1e-12 * t.scale());
            }
        }
    }

    #[test]
    fn compress_rejects_non_orthonormal() {
        let t = ComplexMatrix::identity(3);
        let b = DMatrix::from_element(3, 1, c(1.0));
        assert!(matches!(
            compress(&t, &b),
            Err(LinalgError::NonOrthonormalBasis { .. })
        ));
    }

    #[test]
    fn quad_form_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let id = ComplexMatrix::identity(2);
        assert!((quad_form(&id, &[c(s), c(s)]).unwrap() - c(1.0)).norm() < 1e-15);
        let d = ComplexMatrix::diagonal(&[c(0.0), c(1.0)]).unwrap();
        assert!((quad_form(&d, &[c(s), c(s)]).unwrap() - c(0.5)).norm() < 1e-15);
        // Jordan block: ⟨Tx,x⟩ = x2 * conj(x1)
        let j = ComplexMatrix::from_row_major(2, 2, vec![c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        assert!((quad_form(&j, &[c(s), c(s)]).unwrap() - c(0.5)).norm() < 1e-15);
        assert_eq!(quad_form(&j, &[c(0.0), c(0.0)]), Err(LinalgError::ZeroVector));
    }

    #[test]
    fn rank_one_update_stays_hermitian() {
        let mut m = HermitianMatrix::zeros(3);
        let a = [Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0), c(3.0)];
        m.add_rank_one(-0.7, &a).unwrap();
        assert_eq!(m.as_matrix(), &m.as_matrix().adjoint());
    }

    #[test]
    fn clusters_group_close_values() {
        let m = HermitianMatrix::from_real_diagonal(&[0.0, 1e-12, 1.0, 2.0, 2.0]).unwrap();
        let eig = hermitian_eig(&m).unwrap();
        assert_eq!(eig.clusters(1e-8), vec![0..2, 2..3, 3..5]);
    }
}
