//! Worked examples: the discretized Volterra family `V(θ) = cosθ·Re V +
//! sinθ·Im V` and builders for the two rank-one models with crossing
//! minimal eigenvalues.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, HermitianMatrix, LinalgError};
use crate::model::{
    Coupling, DiagonalRule, DiagonalTail, ModelError, PolynomialFamily, RankOneTerm, Sign,
    StructuredFamily, DEFAULT_TAIL_TOL,
};
use crate::numeric::fmt_f64;
use crate::perturbation::{b0_compression, kernel_projection, PerturbationError};
use crate::secular::{example62_sparse_weights, Example62Kind};

pub const MIN_VOLTERRA_N: usize = 8;
pub const MIN_VERIFY_N: usize = 128;
/// Kernel tolerance of `Re V_N` in units of the mesh width.
pub const KERNEL_TOL_MESH: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CasebookError {
    #[error("grid size {n} is below the minimum {min}")]
    TooSmall { n: usize, min: usize },
    #[error("2θ + 2nπ vanishes for n = {n}")]
    Pole { n: i64 },
    #[error("n_count must be positive")]
    EmptyRequest,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
}

/// Midpoint collocation of `(Vf)(t) = ∫₀ᵗ f(s) ds` on `N` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraDiscretization {
    pub n: usize,
    pub h: f64,
    pub matrix: ComplexMatrix,
}

impl VolterraDiscretization {
    /// `(V + Vᵀ)/2`, which equals `(h/2)·J` with `J` the all-ones matrix.
    pub fn real_part(&self) -> HermitianMatrix {
        self.matrix.real_part().expect("square by construction")
    }

    /// `(V − Vᵀ)/(2i)`.
    pub fn imag_part(&self) -> HermitianMatrix {
        self.matrix.imag_part().expect("square by construction")
    }
}

pub fn volterra_matrix(n: usize) -> Result<VolterraDiscretization, CasebookError> {
    if n < MIN_VOLTERRA_N {
        return Err(CasebookError::TooSmall {
            n,
            min: MIN_VOLTERRA_N,
        });
    }
    let h = 1.0 / n as f64;
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..i {
            entries[i * n + j] = Complex64::new(h, 0.0);
        }
        entries[i * n + i] = Complex64::new(0.5 * h, 0.0);
    }
    Ok(VolterraDiscretization {
        n,
        h,
        matrix: ComplexMatrix::from_row_major(n, n, entries)?,
    })
}

/// `cosθ·Re V_N + sinθ·Im V_N = Re(e^{−iθ} V_N)`.
pub fn volterra_theta(disc: &VolterraDiscretization, theta: f64) -> HermitianMatrix {
    disc.matrix
        .rotated_real_part(theta)
        .expect("square by construction")
}

/// `sinθ/(2θ + 2nπ)`; at `θ = 0` the `n = 0` mode takes its limit `1/2`.
pub fn volterra_exact_eig(theta: f64, n: i64) -> Result<f64, CasebookError> {
    let denom = 2.0 * theta + 2.0 * n as f64 * PI;
    if denom == 0.0 {
        if theta == 0.0 {
            return Ok(0.5);
        }
        return Err(CasebookError::Pole { n });
    }
    if denom.abs() < 1e-12 {
        return Err(CasebookError::Pole { n });
    }
    Ok(theta.sin() / denom)
}

pub fn volterra_exact_eigs(theta: f64, ns: &[i64]) -> Result<Vec<f64>, CasebookError> {
    ns.iter().map(|&n| volterra_exact_eig(theta, n)).collect()
}

/// The `count` mode indices with the largest exact eigenvalue magnitude.
/// Ties (all modes vanish at `θ = 0`) are broken by `|n|`, then sign.
pub fn leading_modes(theta: f64, count: usize) -> Vec<i64> {
    let reach = count as i64 + 2;
    let mut modes: Vec<(i64, f64)> = (-reach..=reach)
        .filter_map(|n| volterra_exact_eig(theta, n).ok().map(|v| (n, v.abs())))
        .collect();
    modes.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(a.0.abs().cmp(&b.0.abs()))
            .then(b.0.cmp(&a.0))
    });
    modes.into_iter().take(count).map(|m| m.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRow {
    pub n: i64,
    pub exact: f64,
    pub computed: f64,
    /// Relative error; absolute when the exact value is zero.
    pub rel_error: f64,
}

/// Greedy nearest matching of targets (largest first) to computed values.
fn match_modes(modes: &[i64], exact: &[f64], computed: &[f64]) -> Vec<ModeRow> {
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&a, &b| exact[b].abs().total_cmp(&exact[a].abs()));
    let mut used = vec![false; computed.len()];
    let mut rows = Vec::with_capacity(modes.len());
    for i in order {
        let best = (0..computed.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (computed[a] - exact[i])
                    .abs()
                    .total_cmp(&(computed[b] - exact[i]).abs())
            });
        let computed_value = match best {
            Some(j) => {
                used[j] = true;
                computed[j]
            }
            None => f64::NAN,
        };
        let err = (computed_value - exact[i]).abs();
        rows.push(ModeRow {
            n: modes[i],
            exact: exact[i],
            computed: computed_value,
            rel_error: if exact[i] != 0.0 { err / exact[i].abs() } else { err },
        });
    }
    rows
}

fn largest_magnitude(values: &[f64], count: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    v.truncate(count);
    v
}

fn max_error(rows: &[ModeRow]) -> f64 {
    rows.iter().map(|r| r.rel_error).fold(0.0, f64::max)
}

/// Eigenvalues of `V_N(θ)` against the closed form for the leading modes.
pub fn volterra_spectrum_rows(
    disc: &VolterraDiscretization,
    theta: f64,
    n_count: usize,
) -> Result<Vec<ModeRow>, CasebookError> {
    if n_count == 0 {
        return Err(CasebookError::EmptyRequest);
    }
    let modes = leading_modes(theta, n_count);
    let exact = volterra_exact_eigs(theta, &modes)?;
    let values = hermitian_eigenvalues(&volterra_theta(disc, theta))?;
    let candidates = largest_magnitude(&values, 3 * n_count);
    Ok(match_modes(&modes, &exact, &candidates))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraReport {
    pub n: usize,
    pub theta: f64,
    pub rows: Vec<ModeRow>,
    pub max_rel_error: f64,
    pub kernel_tol: f64,
    pub kernel_dim: usize,
    /// Compression of `Im V_N` onto the kernel of `Re V_N` against the
    /// θ-derivatives `1/(2πn)` of the nonzero modes at `θ = 0`.
    pub compression_rows: Vec<ModeRow>,
    pub compression_max_rel_error: f64,
    pub top_real_part_eigenvalue: f64,
}

impl VolterraReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "theta = {}", fmt_f64(self.theta));
        let _ = writeln!(s, "modes = {}", self.rows.len());
        let _ = writeln!(s, "max_rel_error = {}", fmt_f64(self.max_rel_error));
        let _ = writeln!(s, "top_re_v_eigenvalue = {}", fmt_f64(self.top_real_part_eigenvalue));
        let _ = writeln!(s, "kernel_tol = {}", fmt_f64(self.kernel_tol));
        let _ = writeln!(s, "kernel_dim = {}", self.kernel_dim);
        let _ = writeln!(
            s,
            "compression_max_rel_error = {}",
            fmt_f64(self.compression_max_rel_error)
        );
        s
    }

    pub fn write_csv<W: Write>(rows: &[ModeRow], out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "exact", "computed", "rel_error"])?;
        for r in rows {
            w.write_record([
                r.n.to_string(),
                fmt_f64(r.exact),
                fmt_f64(r.computed),
                fmt_f64(r.rel_error),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Compression of `Im V_N` onto the numerical kernel of `Re V_N`
/// (tolerance `3h`), compared with `1/(2πn)` for `n = ±1, …, ±count/2`.
pub fn volterra_compression_rows(
    disc: &VolterraDiscretization,
    count: usize,
) -> Result<(Vec<ModeRow>, usize), CasebookError> {
    let tol = KERNEL_TOL_MESH * disc.h;
    let p = kernel_projection(&disc.real_part(), 0.0, tol)?;
    let mu = b0_compression(&p, &disc.imag_part())?.mu;
    let half = count.div_ceil(2) as i64;
    let modes: Vec<i64> = (1..=half).flat_map(|n| [n, -n]).take(count).collect();
    let exact: Vec<f64> = modes.iter().map(|&n| 1.0 / (2.0 * PI * n as f64)).collect();
    let candidates = largest_magnitude(&mu, 3 * count);
    Ok((match_modes(&modes, &exact, &candidates), p.dim()))
}

pub fn volterra_verify(n: usize, theta: f64, n_count: usize) -> Result<VolterraReport, CasebookError> {
    if n < MIN_VERIFY_N {
        return Err(CasebookError::TooSmall { n, min: MIN_VERIFY_N });
    }
    let disc = volterra_matrix(n)?;
    let rows = volterra_spectrum_rows(&disc, theta, n_count)?;
    let (compression_rows, kernel_dim) = volterra_compression_rows(&disc, 4)?;
    let top = *hermitian_eigenvalues(&disc.real_part())?
        .last()
        .expect("non-empty");
    Ok(VolterraReport {
        n,
        theta,
        max_rel_error: max_error(&rows),
        rows,
        kernel_tol: KERNEL_TOL_MESH * disc.h,
        kernel_dim,
        compression_max_rel_error: max_error(&compression_rows),
        compression_rows,
        top_real_part_eigenvalue: top,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementLevel {
    pub n: usize,
    pub max_rel_error: f64,
}

/// Max relative eigenvalue error of the leading modes for each grid size.
pub fn refinement_study(
    theta: f64,
    sizes: &[usize],
    n_count: usize,
) -> Result<Vec<RefinementLevel>, CasebookError> {
    sizes
        .par_iter()
        .map(|&n| {
            let disc = volterra_matrix(n)?;
            let rows = volterra_spectrum_rows(&disc, theta, n_count)?;
            Ok(RefinementLevel {
                n,
                max_rel_error: max_error(&rows),
            })
        })
        .collect()
}

/// Errors decrease along the study, allowing `slack` relative growth.
pub fn is_refining(levels: &[RefinementLevel], slack: f64) -> bool {
    levels
        .windows(2)
        .all(|w| w[1].max_rel_error <= w[0].max_rel_error * (1.0 + slack))
}

/// `[Re V_N, Im V_N]`: the first-order family `Re V + θ·Im V`.
pub fn volterra_family(n: usize) -> Result<PolynomialFamily, CasebookError> {
    let disc = volterra_matrix(n)?;
    Ok(PolynomialFamily::new(
        vec![disc.real_part(), disc.imag_part()],
        None,
    )?)
}

/// `diag(0, e^{−2}, e^{−3}, …) − t·vvᵀ` truncated at `n`, with `v` the
/// square roots of the model weights.
pub fn example62_family(kind: Example62Kind, n: usize) -> Result<StructuredFamily, CasebookError> {
    let base = DiagonalTail::new(
        DiagonalRule::ExpNegK,
        vec![0.0],
        Some(vec![0.0]),
        n,
        DEFAULT_TAIL_TOL,
    )?;
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for (k, w) in example62_sparse_weights(kind, n) {
        v[k - 1] = Complex64::new(w.sqrt(), 0.0);
    }
    Ok(StructuredFamily::new(
        base,
        None,
        vec![RankOneTerm {
            vector: v,
            coupling: Coupling::monomial(1),
            sign: Sign::Minus,
        }],
    )?)
}
