//! Eigenvalue branches near the essential-spectrum threshold: tracking over
//! a t-grid, the kernel projection `P` of `A(t₀) − Σ(t₀)`, the predictor
//! compression `B₀ = P A₁ P`, slope estimation and the absorption verdict.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::{
    compress_hermitian, hermitian_eig, hermitian_eigenvalues, quad_form_real, EigenDecomposition,
    HermitianMatrix, LinalgError, CLUSTER_TOL,
};
use crate::model::{Family, ModelError, PolynomialFamily};
use crate::numeric::{fit_line, fmt_f64, logspace};
use crate::secular::{SecularError, SecularModel};

/// Default kernel tolerance relative to `‖A‖`.
pub const KERNEL_REL_TOL: f64 = 1e-8;
/// Two matchings whose costs differ by less than this are ambiguous.
pub const MATCH_AMBIGUITY: f64 = 1e-12;
/// Slopes this close to `ω` are reported as at-threshold.
pub const THRESHOLD_BAND: f64 = 1e-6;
/// Floor of the β–μ matching tolerance.
pub const MATCH_TOL_FLOOR: f64 = 1e-4;
pub const MIN_SLOPE_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerturbationError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Secular(#[from] SecularError),
    #[error("invalid t grid: {0}")]
    Grid(String),
    #[error("requested {requested} branches but dim is {dim}")]
    TooManyBranches { requested: usize, dim: usize },
    #[error("only {available} usable points beyond t0; at least 4 are needed")]
    TooFewPoints { available: usize },
    #[error("no kernel: the projection at the threshold level is empty")]
    NoKernel,
    #[error("unknown branch id {0}")]
    UnknownBranch(usize),
    #[error("family carries no essential-spectrum data; declare the threshold level")]
    MissingSigma,
    #[error("tol_kernel must be positive, got {0}")]
    Tolerance(f64),
    #[error("level is not isolated: gap {gap} < required {required}")]
    Isolation { gap: f64, required: f64 },
    #[error("secular branches need a family of the form diag(d) − t·aa* with t0 = 0")]
    SecularUnavailable,
}

/// Where branch values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchSource {
    /// Secular roots for eligible rank-one families, dense otherwise.
    #[default]
    Auto,
    Dense,
    Secular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: usize,
    pub values: Vec<f64>,
    pub below_sigma: Vec<bool>,
}

/// Tracked bottom eigenvalues over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub t_grid: Vec<f64>,
    pub branches: Vec<Branch>,
    /// `Σ(t)` per grid point; `None` when unavailable.
    pub sigma: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

impl TrajectorySet {
    pub fn branch(&self, id: usize) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    /// Branch values at grid index `i`, sorted ascending.
    pub fn sorted_values_at(&self, i: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.branches.iter().map(|b| b.values[i]).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "branch_id", "lambda", "sigma", "below_sigma"])?;
        for (i, &t) in self.t_grid.iter().enumerate() {
            for b in &self.branches {
                w.write_record([
                    fmt_f64(t),
                    b.id.to_string(),
                    fmt_f64(b.values[i]),
                    self.sigma[i].map_or_else(|| "n/a".to_string(), fmt_f64),
                    b.below_sigma[i].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// How `Σ(t)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SigmaSpec {
    /// From the structured family's tail data.
    #[default]
    Auto,
    /// `Σ(t) = level + ω·(t − t₀)`; without `ω` only the level is known and
    /// no branch is excluded for crossing `Σ`.
    Declared { level: f64, omega: Option<f64> },
}

fn check_grid(t_grid: &[f64]) -> Result<(), PerturbationError> {
    if t_grid.len() < 2 {
        return Err(PerturbationError::Grid("at least two points are required".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(PerturbationError::Grid("non-finite grid point".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PerturbationError::Grid("grid must be strictly increasing".into()));
    }
    Ok(())
}

fn sigma_values(family: &Family, t_grid: &[f64], sigma: SigmaSpec, t0: f64) -> Vec<Option<f64>> {
    t_grid
        .iter()
        .map(|&t| match sigma {
            SigmaSpec::Auto => family.sigma(t),
            SigmaSpec::Declared { level, omega } => omega.map(|w| level + w * (t - t0)),
        })
        .collect()
}

/// Dense tracking of the bottom `n_branches` eigenvalues; `Σ` from tail data.
pub fn track(family: &Family, t_grid: &[f64], n_branches: usize) -> Result<TrajectorySet, PerturbationError> {
    track_with(family, t_grid, n_branches, BranchSource::Dense, SigmaSpec::Auto, 0.0)
}

/// Tracking with an explicit branch source and threshold specification.
pub fn track_with(
    family: &Family,
    t_grid: &[f64],
    n_branches: usize,
    source: BranchSource,
    sigma: SigmaSpec,
    t0: f64,
) -> Result<TrajectorySet, PerturbationError> {
    check_grid(t_grid)?;
    let dim = family.dim();
    if n_branches == 0 || n_branches > dim {
        return Err(PerturbationError::TooManyBranches {
            requested: n_branches,
            dim,
        });
    }
    let secular = match source {
        BranchSource::Dense => None,
        BranchSource::Secular => Some(secular_model_for(family, n_branches)?),
        BranchSource::Auto => secular_model_for(family, n_branches).ok(),
    };
    let sigma = sigma_values(family, t_grid, sigma, t0);

    let (spectra, scales): (Vec<Vec<f64>>, Vec<f64>) = match &secular {
        Some(model) => {
            let values = t_grid
                .iter()
                .map(|&t| {
                    if t > 0.0 {
                        Ok(vec![model.lambda_min(t)?])
                    } else {
                        Err(PerturbationError::Grid("secular branches need t > 0".into()))
                    }
                })
                .collect::<Result<Vec<_>, PerturbationError>>()?;
            (values, vec![0.0; t_grid.len()])
        }
        None => t_grid
            .par_iter()
            .map(|&t| {
                let a = family.evaluate(t)?;
                let mut vals = hermitian_eigenvalues(&a)?;
                vals.truncate(n_branches);
                Ok((vals, a.scale()))
            })
            .collect::<Result<Vec<_>, PerturbationError>>()?
            .into_iter()
            .unzip(),
    };

    let n = spectra[0].len();
    let mut warnings = Vec::new();
    let mut values: Vec<Vec<f64>> = (0..n).map(|b| vec![spectra[0][b]]).collect();
    for i in 1..t_grid.len() {
        let predictions: Vec<f64> = (0..n)
            .map(|b| {
                let prev = values[b][i - 1];
                if i >= 2 {
                    let slope = (prev - values[b][i - 2]) / (t_grid[i - 1] - t_grid[i - 2]);
                    prev + slope * (t_grid[i] - t_grid[i - 1])
                } else {
                    prev
                }
            })
            .collect();
        // sorted assignment against predictions is optimal in one dimension
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| predictions[a].total_cmp(&predictions[b]).then(a.cmp(&b)));
        let new = &spectra[i];
        for (rank, &b) in order.iter().enumerate() {
            values[b].push(new[rank]);
        }
        for r in 1..n {
            let (p, q) = (order[r - 1], order[r]);
            let keep = (new[r - 1] - predictions[p]).abs() + (new[r] - predictions[q]).abs();
            let swap = (new[r] - predictions[p]).abs() + (new[r - 1] - predictions[q]).abs();
            let floor = MATCH_AMBIGUITY * scales[i].max(1.0);
            if (swap - keep).abs() <= floor && (new[r] - new[r - 1]).abs() > floor {
                warnings.push(format!(
                    "ambiguous matching of branches {p} and {q} at t = {}",
                    fmt_f64(t_grid[i])
                ));
            }
        }
    }

    // jump-bound check from neighbouring difference quotients
    for (b, vals) in values.iter().enumerate() {
        let slopes: Vec<f64> = (1..t_grid.len())
            .map(|i| (vals[i] - vals[i - 1]) / (t_grid[i] - t_grid[i - 1]))
            .collect();
        for i in 0..slopes.len() {
            let left = if i > 0 { slopes[i - 1].abs() } else { 0.0 };
            let right = slopes.get(i + 1).map_or(0.0, |s| s.abs());
            let neighbour = left.max(right);
            let tiny = 1e-10 * scales[i + 1].max(1.0) / (t_grid[i + 1] - t_grid[i]);
            if slopes.len() > 1 && slopes[i].abs() > 4.0 * neighbour + tiny {
                warnings.push(format!(
                    "branch {b} jumps between t = {} and t = {}",
                    fmt_f64(t_grid[i]),
                    fmt_f64(t_grid[i + 1])
                ));
            }
        }
    }

    let branches = values
        .into_iter()
        .enumerate()
        .map(|(id, vals)| {
            let below_sigma = vals
                .iter()
                .zip(&sigma)
                .enumerate()
                .map(|(i, (&v, s))| match s {
                    Some(s) => {
                        let tol = if secular.is_some() { 0.0 } else { 1e-12 * scales[i].max(1.0) };
                        v < s - tol
                    }
                    None => true,
                })
                .collect();
            Branch {
                id,
                values: vals,
                below_sigma,
            }
        })
        .collect();

    Ok(TrajectorySet {
        t_grid: t_grid.to_vec(),
        branches,
        sigma,
        warnings,
    })
}

fn secular_model_for(family: &Family, n_branches: usize) -> Result<SecularModel, PerturbationError> {
    let s = family.as_structured().ok_or(PerturbationError::SecularUnavailable)?;
    if n_branches != 1 || !s.is_diagonal_minus_rank_one() {
        return Err(PerturbationError::SecularUnavailable);
    }
    let model = SecularModel::from_family(s)?;
    if model.weight_at_min() <= 0.0 {
        return Err(PerturbationError::SecularUnavailable);
    }
    Ok(model)
}

/// Orthonormal basis of the numerical eigenspace `{|λ − level| ≤ tol}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProjection {
    pub level: f64,
    pub tol_kernel: f64,
    pub basis: DMatrix<Complex64>,
    /// Eigenvalues of the vectors in the basis.
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

impl KernelProjection {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.ncols() == 0
    }

    /// `‖P x‖` for a vector `x`.
    pub fn project_norm(&self, x: &DVector<Complex64>) -> f64 {
        (self.basis.adjoint() * x).norm()
    }
}

pub fn kernel_projection(a: &HermitianMatrix, level: f64, tol_kernel: f64) -> Result<KernelProjection, PerturbationError> {
    let eig = hermitian_eig(a)?;
    kernel_from_eig(&eig, level, tol_kernel)
}

fn kernel_from_eig(eig: &EigenDecomposition, level: f64, tol_kernel: f64) -> Result<KernelProjection, PerturbationError> {
    if !(tol_kernel > 0.0 && tol_kernel.is_finite()) {
        return Err(PerturbationError::Tolerance(tol_kernel));
    }
    let mut indices = Vec::new();
    let mut warnings = Vec::new();
    for (i, &v) in eig.values().iter().enumerate() {
        let dist = (v - level).abs();
        if dist <= tol_kernel {
            indices.push(i);
        }
        if dist > 0.5 * tol_kernel && dist <= 2.0 * tol_kernel {
            warnings.push(format!(
                "eigenvalue {} sits at distance {} from the level, within a factor 2 of tol_kernel {}",
                fmt_f64(v),
                fmt_f64(dist),
                fmt_f64(tol_kernel)
            ));
        }
    }
    let n = eig.vectors().nrows();
    let basis = if indices.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        eig.basis_for(&indices)
    };
    Ok(KernelProjection {
        level,
        tol_kernel,
        basis,
        values: indices.iter().map(|&i| eig.values()[i]).collect(),
        warnings,
    })
}

/// `B₀ = P A₁ P` in coordinates of the kernel basis.
#[derive(Debug, Clone)]
pub struct Compression {
    pub matrix: HermitianMatrix,
    pub mu: Vec<f64>,
}

/// Eigenvalues of `B₀` on `ran P`; the complementary eigenvalue 0 of the
/// full-space operator is excluded.
pub fn b0_compression(p: &KernelProjection, a1: &HermitianMatrix) -> Result<Compression, PerturbationError> {
    if p.is_empty() {
        return Err(PerturbationError::NoKernel);
    }
    let matrix = compress_hermitian(a1, &p.basis)?;
    let mu = hermitian_eigenvalues(&matrix)?;
    Ok(Compression { matrix, mu })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    pub beta: f64,
    pub uncertainty: f64,
    pub points_used: usize,
    /// Set when the uncertainty exceeds `1e-3·max(1, |β|)`.
    pub flagged: bool,
}

/// Limit of `(λ(t) − σ₀)/(t − t₀)` as `t → t₀⁺` from raw samples.
///
/// Fits `y = β + c·s` (with `s = t − t₀`) on the smallest-`s` window and on
/// a window twice as large, and Richardson-combines the two intercepts.
pub fn estimate_slope(points: &[(f64, f64)], t0: f64, sigma_t0: f64) -> Result<SlopeEstimate, PerturbationError> {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, l)| *t > t0 && t.is_finite() && l.is_finite())
        .map(|&(t, l)| (t - t0, (l - sigma_t0) / (t - t0)))
        .collect();
    if pts.len() < MIN_SLOPE_POINTS {
        return Err(PerturbationError::TooFewPoints { available: pts.len() });
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    let w1 = n.min((n / 4).max(MIN_SLOPE_POINTS));
    let w2 = n.min(2 * w1);
    let fit = |w: usize| {
        // normalized abscissae: the intercept is unchanged and tiny offsets
        // do not underflow in the variance
        let unit = pts[w - 1].0;
        let xs: Vec<f64> = pts[..w].iter().map(|p| p.0 / unit).collect();
        let ys: Vec<f64> = pts[..w].iter().map(|p| p.1).collect();
        fit_line(&xs, &ys).expect("distinct abscissae")
    };
    let f1 = fit(w1);
    let (beta, extrapolation) = if w2 > w1 {
        let f2 = fit(w2);
        let s1 = pts[w1 - 1].0;
        let s2 = pts[w2 - 1].0;
        let q = (s1 / s2).powi(2);
        let r = (f1.intercept - f2.intercept) * q / (1.0 - q);
        // the raw window disagreement guards against non-polynomial (e.g.
        // logarithmic) convergence, which Richardson cannot see
        (f1.intercept + r, r.abs() + (f1.intercept - f2.intercept).abs())
    } else {
        (f1.intercept, 0.0)
    };
    let uncertainty = extrapolation + f1.rms_residual;
    Ok(SlopeEstimate {
        beta,
        uncertainty,
        points_used: w2,
        flagged: uncertainty > 1e-3 * beta.abs().max(1.0),
    })
}

pub fn slope_estimate(
    traj: &TrajectorySet,
    branch_id: usize,
    t0: f64,
    sigma_t0: f64,
) -> Result<SlopeEstimate, PerturbationError> {
    let b = traj
        .branch(branch_id)
        .ok_or(PerturbationError::UnknownBranch(branch_id))?;
    let pts: Vec<(f64, f64)> = traj.t_grid.iter().copied().zip(b.values.iter().copied()).collect();
    estimate_slope(&pts, t0, sigma_t0)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AbsorptionOptions {
    /// Offsets are absolute t values (> t₀); `None` picks a grid from the
    /// second-order coefficient of the kernel branches.
    pub t_grid: Option<Vec<f64>>,
    pub n_branches: Option<usize>,
    pub tol_kernel: Option<f64>,
    pub sigma: SigmaSpec,
    pub branch_source: BranchSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// No kernel and no branch below `Σ`: nothing to verify.
    NoAbsorption,
    /// A branch is absorbed with slope below `ω` although the kernel is
    /// empty, which the theory forbids.
    TheoremViolation,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NoAbsorption => "no-absorption",
            Verdict::TheoremViolation => "theorem-violation",
        }
    }

    pub fn is_success(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::NoAbsorption)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSlope {
    pub branch_id: usize,
    pub estimate: SlopeEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub branch_id: usize,
    pub beta: f64,
    pub uncertainty: f64,
    pub mu: f64,
    pub gap: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionReport {
    pub t0: f64,
    pub sigma_t0: f64,
    pub omega: Option<f64>,
    pub tol_kernel: f64,
    pub kernel_dim: usize,
    pub eigenvalues_below: usize,
    pub source: BranchSource,
    pub t_min: f64,
    pub t_max: f64,
    pub grid_points: usize,
    pub slopes: Vec<BranchSlope>,
    pub mu: Vec<f64>,
    pub mu_at_threshold: Vec<f64>,
    pub matched_pairs: Vec<MatchedPair>,
    /// Absorbed slopes within the threshold band of `ω`.
    pub at_threshold: Vec<BranchSlope>,
    /// `(‖P x‖, distance of the projected vector to the μ-eigenspace)` for
    /// the lowest absorbed branch at the smallest grid point.
    pub alignment: Option<(f64, f64)>,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

impl AbsorptionReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), fmt_f64);
        let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";");
        let _ = writeln!(s, "t0 = {}", fmt_f64(self.t0));
        let _ = writeln!(s, "sigma_t0 = {}", fmt_f64(self.sigma_t0));
        let _ = writeln!(s, "omega = {}", opt(self.omega));
        let _ = writeln!(s, "tol_kernel = {}", fmt_f64(self.tol_kernel));
        let _ = writeln!(s, "kernel_dim = {}", self.kernel_dim);
        let _ = writeln!(s, "eigenvalues_below = {}", self.eigenvalues_below);
        let _ = writeln!(s, "branch_source = {}", match self.source {
            BranchSource::Auto => "auto",
            BranchSource::Dense => "dense",
            BranchSource::Secular => "secular",
        });
        let _ = writeln!(s, "t_min = {}", fmt_f64(self.t_min));
        let _ = writeln!(s, "t_max = {}", fmt_f64(self.t_max));
        let _ = writeln!(s, "grid_points = {}", self.grid_points);
        let _ = writeln!(s, "absorbed_branches = {}", self.slopes.len());
        let _ = writeln!(s, "mu = {}", list(&self.mu));
        let _ = writeln!(s, "mu_at_threshold = {}", list(&self.mu_at_threshold));
        for b in &self.slopes {
            let _ = writeln!(
                s,
                "beta[{}] = {} +/- {}{}",
                b.branch_id,
                fmt_f64(b.estimate.beta),
                fmt_f64(b.estimate.uncertainty),
                if b.estimate.flagged { " (flagged)" } else { "" }
            );
        }
        for b in &self.at_threshold {
            let _ = writeln!(
                s,
                "at_threshold[{}] = {} (unverifiable)",
                b.branch_id,
                fmt_f64(b.estimate.beta)
            );
        }
        if let Some((proj, dist)) = self.alignment {
            let _ = writeln!(s, "eigenvector_projection = {}", fmt_f64(proj));
            let _ = writeln!(s, "eigenvector_distance = {}", fmt_f64(dist));
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning = {w}");
        }
        let _ = writeln!(s, "verdict = {}", self.verdict.as_str());
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["branch_id", "beta", "uncertainty", "mu", "gap"])?;
        for p in &self.matched_pairs {
            w.write_record([
                p.branch_id.to_string(),
                fmt_f64(p.beta),
                fmt_f64(p.uncertainty),
                fmt_f64(p.mu),
                fmt_f64(p.gap),
            ])?;
        }
        let matched: Vec<usize> = self.matched_pairs.iter().map(|p| p.branch_id).collect();
        for b in self.slopes.iter().chain(&self.at_threshold) {
            if !matched.contains(&b.branch_id) {
                w.write_record([
                    b.branch_id.to_string(),
                    fmt_f64(b.estimate.beta),
                    fmt_f64(b.estimate.uncertainty),
                    "n/a".into(),
                    "n/a".into(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Default kernel tolerance: `1e-8‖A‖`, and for structured families never
/// more than a quarter of the smallest nonzero distance of a diagonal entry
/// to the level, so accumulating tail entries stay out of the kernel.
pub fn default_tol_kernel(family: &Family, a: &HermitianMatrix, t0: f64, level: f64) -> f64 {
    let scale = a.scale();
    let mut tol = if scale > 0.0 { KERNEL_REL_TOL * scale } else { KERNEL_REL_TOL };
    if let Some(s) = family.as_structured() {
        let gap = s
            .diagonal_at(t0)
            .iter()
            .map(|d| (d - level).abs())
            .filter(|&g| g > 0.0)
            .fold(f64::INFINITY, f64::min);
        if gap.is_finite() {
            tol = tol.min(0.25 * gap);
        }
    }
    tol
}

/// Threshold data at `t₀`: `Σ(t₀)` and the right derivative `ω` of `Σ`.
fn threshold(family: &Family, t0: f64, spec: SigmaSpec) -> Result<(f64, Option<f64>), PerturbationError> {
    match spec {
        SigmaSpec::Declared { level, omega } => Ok((level, omega)),
        SigmaSpec::Auto => {
            let s = family.as_structured().ok_or(PerturbationError::MissingSigma)?;
            let data = s.essential_points();
            let sigma = data.sigma(t0).ok_or(PerturbationError::MissingSigma)?;
            let scale = data
                .points
                .iter()
                .map(|p| p.0.abs().max(p.1.abs()))
                .fold(1.0, f64::max);
            let omega = data
                .points
                .iter()
                .filter(|&&(x, y)| (x + t0 * y - sigma).abs() <= 1e-12 * scale)
                .map(|&(_, y)| y)
                .min_by(f64::total_cmp);
            Ok((sigma, omega))
        }
    }
}

/// Frobenius norm of `C₂ = P A₁ Q (A₀ − σ₀)⁺ Q A₁ P`, the coefficient of
/// the second-order term of the kernel branches.
fn second_order_norm(eig: &EigenDecomposition, kernel: &[usize], a1: &HermitianMatrix, level: f64) -> f64 {
    if kernel.is_empty() {
        return 0.0;
    }
    let n = eig.len();
    let pk = eig.basis_for(kernel);
    let coupling = pk.adjoint() * a1.as_matrix(); // k × n
    let mut c2 = DMatrix::<Complex64>::zeros(kernel.len(), kernel.len());
    for j in 0..n {
        if kernel.contains(&j) {
            continue;
        }
        let v = eig.vectors().column(j);
        let u = &coupling * v;
        let denom = eig.values()[j] - level;
        c2 += (&u * u.adjoint()).map(|z| z.unscale(denom));
    }
    // entries can exceed sqrt(f64::MAX) when tail entries approach the level
    let big = c2.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return 0.0;
    }
    big * c2.iter().map(|z| (z.norm() / big).powi(2)).sum::<f64>().sqrt()
}

/// Runs the full absorption pipeline at `t₀`.
pub fn verify_absorption(
    family: &Family,
    t0: f64,
    options: &AbsorptionOptions,
) -> Result<AbsorptionReport, PerturbationError> {
    let a0 = family.evaluate(t0)?;
    let a1 = family.derivative(t0)?;
    let (sigma_t0, omega) = threshold(family, t0, options.sigma)?;
    let tol_kernel = match options.tol_kernel {
        Some(t) => t,
        None => default_tol_kernel(family, &a0, t0, sigma_t0),
    };
    let eig = hermitian_eig(&a0)?;
    let p = kernel_from_eig(&eig, sigma_t0, tol_kernel)?;
    let mut warnings = p.warnings.clone();
    let kernel_idx: Vec<usize> = (0..eig.len())
        .filter(|&i| (eig.values()[i] - sigma_t0).abs() <= tol_kernel)
        .collect();
    let below = eig.values().iter().filter(|&&v| v < sigma_t0 - tol_kernel).count();
    let compression = if p.is_empty() {
        None
    } else {
        Some(b0_compression(&p, &a1)?)
    };
    let mu_all = compression.as_ref().map_or_else(Vec::new, |c| c.mu.clone());
    let omega_cut = omega.unwrap_or(f64::INFINITY);
    let mu: Vec<f64> = mu_all.iter().copied().filter(|&m| m < omega_cut - THRESHOLD_BAND).collect();
    let mu_at_threshold: Vec<f64> = mu_all
        .iter()
        .copied()
        .filter(|&m| (m - omega_cut).abs() <= THRESHOLD_BAND)
        .collect();

    let secular_ok = t0 == 0.0
        && below == 0
        && matches!(options.sigma, SigmaSpec::Auto)
        && secular_model_for(family, 1).is_ok()
        && eig.values()[0] == sigma_t0;
    let source = match options.branch_source {
        BranchSource::Auto if secular_ok => BranchSource::Secular,
        BranchSource::Auto => BranchSource::Dense,
        BranchSource::Secular if !secular_ok => return Err(PerturbationError::SecularUnavailable),
        s => s,
    };
    let n_branches = match source {
        BranchSource::Secular => 1,
        _ => options
            .n_branches
            .unwrap_or(below + p.dim().max(1) + 1)
            .min(family.dim()),
    };

    let t_grid = match &options.t_grid {
        Some(g) => g.clone(),
        None => {
            let c2 = second_order_norm(&eig, &kernel_idx, &a1, sigma_t0);
            let tau_max = if kernel_idx.is_empty() {
                let gap = eig
                    .values()
                    .iter()
                    .map(|v| (v - sigma_t0).abs())
                    .fold(f64::INFINITY, f64::min);
                1e-3 * gap.max(f64::MIN_POSITIVE) / a1.scale().max(1.0)
            } else {
                1e-3 / c2.max(1.0)
            };
            let points = if source == BranchSource::Secular { 24 } else { 16 };
            logspace(tau_max * 1e-2, tau_max, points)
                .into_iter()
                .map(|s| t0 + s)
                .collect()
        }
    };
    if t_grid.iter().any(|&t| t <= t0) {
        return Err(PerturbationError::Grid("grid points must exceed t0".into()));
    }
    let traj = track_with(family, &t_grid, n_branches, source, options.sigma, t0)?;
    warnings.extend(traj.warnings.iter().cloned());

    // absorbed: starts at or above the kernel, stays below Σ, and is still
    // within the Weyl distance of the level at the first grid point
    let first = family.evaluate(t_grid[0])?;
    let shift = first.try_add(&a0.scaled(-1.0))?.scale();
    let absorbed: Vec<usize> = traj
        .branches
        .iter()
        .filter(|b| {
            let starts_at_kernel = source == BranchSource::Secular || b.id >= below;
            starts_at_kernel
                && b.below_sigma.iter().all(|&x| x)
                && (b.values[0] - sigma_t0).abs() <= 2.0 * shift + tol_kernel
        })
        .map(|b| b.id)
        .collect();

    let mut slopes = Vec::new();
    let mut at_threshold = Vec::new();
    for &id in &absorbed {
        let estimate = slope_estimate(&traj, id, t0, sigma_t0)?;
        let bs = BranchSlope { branch_id: id, estimate };
        if (estimate.beta - omega_cut).abs() <= THRESHOLD_BAND {
            at_threshold.push(bs);
        } else if estimate.beta < omega_cut {
            slopes.push(bs);
        } else {
            // slope above ω: the branch leaves Σ from below only on the grid
            warnings.push(format!(
                "branch {id} has slope {} above omega; not paired",
                fmt_f64(estimate.beta)
            ));
        }
    }
    slopes.sort_by(|a, b| a.estimate.beta.total_cmp(&b.estimate.beta));

    let matched_pairs: Vec<MatchedPair> = slopes
        .iter()
        .zip(&mu)
        .map(|(b, &m)| MatchedPair {
            branch_id: b.branch_id,
            beta: b.estimate.beta,
            uncertainty: b.estimate.uncertainty,
            mu: m,
            gap: (b.estimate.beta - m).abs(),
            tolerance: MATCH_TOL_FLOOR.max(10.0 * b.estimate.uncertainty),
        })
        .collect();

    let verdict = if p.is_empty() {
        if slopes.is_empty() {
            Verdict::NoAbsorption
        } else {
            Verdict::TheoremViolation
        }
    } else if slopes.len() == mu.len() && matched_pairs.iter().all(|m| m.gap <= m.tolerance) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    let alignment = match (&compression, slopes.first(), matched_pairs.first()) {
        (Some(c), Some(b), Some(pair)) => {
            let x = branch_vector(family, &traj, b.branch_id, source)?;
            let coords = p.basis.adjoint() * &x;
            let proj = coords.norm();
            let ceig = hermitian_eig(&c.matrix)?;
            let cluster: Vec<usize> = (0..c.mu.len())
                .filter(|&i| (c.mu[i] - pair.mu).abs() <= CLUSTER_TOL * c.matrix.scale().max(1.0))
                .collect();
            let u = ceig.basis_for(&cluster);
            let dist = if proj > 0.0 {
                let within = (u.adjoint() * (&coords / Complex64::new(proj, 0.0))).norm();
                (1.0 - within * within).max(0.0).sqrt()
            } else {
                1.0
            };
            Some((proj, dist))
        }
        _ => None,
    };

    Ok(AbsorptionReport {
        t0,
        sigma_t0,
        omega,
        tol_kernel,
        kernel_dim: p.dim(),
        eigenvalues_below: below,
        source,
        t_min: t_grid[0],
        t_max: *t_grid.last().expect("grid has points"),
        grid_points: t_grid.len(),
        slopes,
        mu,
        mu_at_threshold,
        matched_pairs,
        at_threshold,
        alignment,
        verdict,
        warnings,
    })
}

/// Unit eigenvector of the given branch at the smallest grid point.
fn branch_vector(
    family: &Family,
    traj: &TrajectorySet,
    id: usize,
    source: BranchSource,
) -> Result<DVector<Complex64>, PerturbationError> {
    let t = traj.t_grid[0];
    let lambda = traj.branch(id).ok_or(PerturbationError::UnknownBranch(id))?.values[0];
    if source == BranchSource::Secular {
        // (diag(d) − λ)⁻¹ a is the eigenvector of diag(d) − t·aa*
        let s = family.as_structured().ok_or(PerturbationError::SecularUnavailable)?;
        let a = &s.rank_one_terms()[0].vector;
        let d = s.diagonal_at(0.0);
        let x = DVector::from_iterator(
            d.len(),
            d.iter().zip(a).map(|(dk, ak)| ak.unscale(dk - lambda)),
        );
        // rescale before normalizing: entries can be near f64::MAX.sqrt()
        let big = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let x = x.map(|z| z.unscale(big));
        let n = x.norm();
        return Ok(x.map(|z| z.unscale(n)));
    }
    let eig = hermitian_eig(&family.evaluate(t)?)?;
    let i = eig
        .values()
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - lambda).abs().total_cmp(&(b.1 - lambda).abs()))
        .map(|(i, _)| i)
        .expect("non-empty spectrum");
    Ok(eig.vector(i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeStatus {
    Simple,
    /// The branch touches a neighbour; no derivative check is made.
    Crossing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub status: DerivativeStatus,
    pub t: f64,
    pub branch: usize,
    /// `⟨A′(t)x, x⟩`.
    pub analytic: f64,
    /// `(h, central difference, |difference − analytic|)` for halving `h`.
    pub differences: Vec<(f64, f64, f64)>,
    pub passed: bool,
}

/// Central differences of the `branch`-th smallest eigenvalue against the
/// Hellmann–Feynman value `⟨A′(t)x, x⟩`.
pub fn derivative_check(family: &Family, t: f64, branch: usize) -> Result<DerivativeReport, PerturbationError> {
    let a = family.evaluate(t)?;
    if branch >= a.dim() {
        return Err(PerturbationError::UnknownBranch(branch));
    }
    let eig = hermitian_eig(&a)?;
    let vals = eig.values();
    let scale = a.scale().max(1.0);
    let gap = vals
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != branch)
        .map(|(_, v)| (v - vals[branch]).abs())
        .fold(f64::INFINITY, f64::min);
    if gap < 1e-6 * scale {
        return Ok(DerivativeReport {
            status: DerivativeStatus::Crossing,
            t,
            branch,
            analytic: f64::NAN,
            differences: Vec::new(),
            passed: false,
        });
    }
    let dp = family.derivative(t)?;
    let x = eig.vector(branch);
    let analytic = quad_form_real(&dp, x.as_slice())?;
    let mut h = (0.1 * gap / dp.scale().max(1e-300)).min(1e-2);
    let mut differences = Vec::new();
    for _ in 0..6 {
        let up = hermitian_eigenvalues(&family.evaluate(t + h)?)?[branch];
        let down = hermitian_eigenvalues(&family.evaluate(t - h)?)?[branch];
        let fd = (up - down) / (2.0 * h);
        differences.push((h, fd, (fd - analytic).abs()));
        h /= 2.0;
    }
    let noise = 1e-12 * scale / differences.last().map_or(1.0, |d| d.0);
    let passed = differences.windows(2).all(|w| {
        let (e0, e1) = (w[0].2, w[1].2);
        e0 <= noise || e1 <= noise || e0 / e1 >= 3.0
    }) && differences.last().is_some_and(|d| d.2 <= 1e-4 * scale.max(analytic.abs()));
    Ok(DerivativeReport {
        status: DerivativeStatus::Simple,
        t,
        branch,
        analytic,
        differences,
        passed,
    })
}

/// Eigenvalues of the compression of `A₁` onto the eigenspace of `A₀` at an
/// isolated `level`: the predicted derivatives at `t = 0` of the branches
/// emanating from it.
pub fn isolated_branch_slopes(
    family: &PolynomialFamily,
    level: f64,
    tol: f64,
) -> Result<Vec<f64>, PerturbationError> {
    let a0 = &family.coefficients()[0];
    let a1 = family.a1()?;
    let eig = hermitian_eig(a0)?;
    let p = kernel_from_eig(&eig, level, tol)?;
    let gap = eig
        .values()
        .iter()
        .map(|v| (v - level).abs())
        .filter(|&g| g > tol)
        .fold(f64::INFINITY, f64::min);
    if gap < 10.0 * tol {
        return Err(PerturbationError::Isolation {
            gap,
            required: 10.0 * tol,
        });
    }
    Ok(b0_compression(&p, &a1)?.mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coupling, DiagonalRule, DiagonalTail, RankOneTerm, Sign, StructuredFamily};
    use crate::sampling::{random_hermitian, random_unitary};
    use crate::secular::{example62_diagonal, example62_sparse_weights, Example62Kind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_family(a0: &[f64], a1: &[f64]) -> Family {
        PolynomialFamily::new(
            vec![
                HermitianMatrix::from_real_diagonal(a0).unwrap(),
                HermitianMatrix::from_real_diagonal(a1).unwrap(),
            ],
            None,
        )
        .unwrap()
        .into()
    }

    fn example62a(n: usize) -> Family {
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        for (k, w) in example62_sparse_weights(Example62Kind::A, n) {
            a[k - 1] = Complex64::new(w.sqrt(), 0.0);
        }
        let d = DiagonalTail::new(
            DiagonalRule::ExpNegK,
            vec![0.0],
            Some(vec![0.0]),
            n,
            crate::model::DEFAULT_TAIL_TOL,
        )
        .unwrap();
        assert_eq!(d.entries(), example62_diagonal(n).as_slice());
        StructuredFamily::new(
            d,
            None,
            vec![RankOneTerm {
                vector: a,
                coupling: Coupling::monomial(1),
                sign: Sign::Minus,
            }],
        )
        .unwrap()
        .into()
    }

    #[test]
    fn straight_line_branches() {
        let f = diag_family(&[-1.0, 1.0], &[1.0, -1.0]);
        let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let tr = track(&f, &grid, 2).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            assert!((tr.branches[0].values[i] - (-1.0 + t)).abs() < 1e-15);
            assert!((tr.branches[1].values[i] - (1.0 - t)).abs() < 1e-15);
        }
        assert!(tr.sigma.iter().all(Option::is_none));
    }

    #[test]
    fn crossing_branches_keep_identity() {
        let f = diag_family(&[-1.0, 1.0], &[1.0, -1.0]);
        let grid: Vec<f64> = (1..=19).map(|i| i as f64 / 10.0 + 0.05).collect();
        let tr = track(&f, &grid, 2).unwrap();
        let last = grid.len() - 1;
        assert!((tr.branches[0].values[last] - (-1.0 + grid[last])).abs() < 1e-14);
    }

    #[test]
    fn track_matches_sorted_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f: Family = PolynomialFamily::new(
            vec![random_hermitian(&mut rng, 8), random_hermitian(&mut rng, 8)],
            None,
        )
        .unwrap()
        .into();
        let grid = crate::numeric::linspace(0.01, 1.0, 100);
        let tr = track(&f, &grid, 8).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let want = hermitian_eigenvalues(&f.evaluate(t).unwrap()).unwrap();
            let got = tr.sorted_values_at(i);
            for (a, b) in want.iter().zip(&got) {
                assert!((a - b).abs() <= 1e-10 * f.evaluate(t).unwrap().scale());
            }
        }
    }

    #[test]
    fn example62_dense_branch_matches_secular() {
        let f = example62a(200);
        let model = SecularModel::from_family(f.as_structured().unwrap()).unwrap();
        let grid = [1e-3, 1e-2, 0.1, 0.5];
        let tr = track(&f, &grid, 2).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let want = model.lambda_min(t).unwrap();
            assert!(((tr.branches[0].values[i] - want) / want).abs() <= 1e-10);
        }
        assert!(tr.branches[0].below_sigma.iter().all(|&b| b));
    }

    #[test]
    fn kernel_projection_examples() {
        let a = HermitianMatrix::from_real_diagonal(&[0.0, 0.0, 1.0]).unwrap();
        let p = kernel_projection(&a, 0.0, 1e-8).unwrap();
        assert_eq!(p.dim(), 2);
        let a = HermitianMatrix::from_real_diagonal(&[1e-12, 1.0]).unwrap();
        let p = kernel_projection(&a, 0.0, 1e-8).unwrap();
        assert_eq!(p.dim(), 1);
        assert!(p.warnings.is_empty());
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 2.0]).unwrap();
        assert!(kernel_projection(&a, 0.0, 1e-8).unwrap().is_empty());
        let a = HermitianMatrix::from_real_diagonal(&[1.5e-8, 2.0]).unwrap();
        assert_eq!(kernel_projection(&a, 0.0, 1e-8).unwrap().warnings.len(), 1);
    }

    #[test]
    fn compression_examples() {
        let a0 = HermitianMatrix::from_real_diagonal(&[0.0, 0.0, 1.0]).unwrap();
        let a1 = HermitianMatrix::from_real_diagonal(&[5.0, 7.0, 9.0]).unwrap();
        let p = kernel_projection(&a0, 0.0, 1e-8).unwrap();
        let mu = b0_compression(&p, &a1).unwrap().mu;
        assert!((mu[0] - 5.0).abs() < 1e-14 && (mu[1] - 7.0).abs() < 1e-14);
        let empty = kernel_projection(&a0, 5.0, 1e-8).unwrap();
        assert!(matches!(b0_compression(&empty, &a1), Err(PerturbationError::NoKernel)));
    }

    #[test]
    fn compression_is_basis_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a0 = HermitianMatrix::from_real_diagonal(&[0.0, 0.0, 0.0, 2.0, 3.0]).unwrap();
        let a1 = random_hermitian(&mut rng, 5);
        let mut p = kernel_projection(&a0, 0.0, 1e-8).unwrap();
        let mu = b0_compression(&p, &a1).unwrap().mu;
        p.basis = &p.basis * random_unitary(&mut rng, 3);
        let mu2 = b0_compression(&p, &a1).unwrap().mu;
        for (a, b) in mu.iter().zip(&mu2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn slope_of_quadratic_branch() {
        let pts: Vec<(f64, f64)> = crate::numeric::logspace(1e-4, 1e-1, 20)
            .into_iter()
            .map(|t| (t, -2.0 * t + 3.0 * t * t))
            .collect();
        let s = estimate_slope(&pts, 0.0, 0.0).unwrap();
        assert!((s.beta + 2.0).abs() < 1e-10, "{s:?}");
        assert!(!s.flagged);
        assert!(matches!(
            estimate_slope(&pts[..3], 0.0, 0.0),
            Err(PerturbationError::TooFewPoints { available: 3 })
        ));
    }

    #[test]
    fn slow_branch_is_flagged() {
        let pts: Vec<(f64, f64)> = crate::numeric::logspace(1e-12, 1e-6, 24)
            .into_iter()
            .map(|t| (t, -t * (1.0 + 1.0 / t.ln())))
            .collect();
        let s = estimate_slope(&pts, 0.0, 0.0).unwrap();
        assert!(s.flagged, "{s:?}");
        assert!((s.beta + 1.0).abs() < 0.1, "{s:?}");
    }

    #[test]
    fn absorption_on_example62() {
        let f = example62a(400);
        let r = verify_absorption(&f, 0.0, &AbsorptionOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_text());
        assert_eq!(r.kernel_dim, 1);
        assert_eq!(r.source, BranchSource::Secular);
        assert_eq!(r.omega, Some(0.0));
        assert!((r.matched_pairs[0].beta + 1.0).abs() < 1e-3);
        let (proj, dist) = r.alignment.unwrap();
        assert!(proj >= 0.99 && dist <= 1e-2);
    }

    #[test]
    fn absorption_on_diagonal_family() {
        // A(t) = diag(0, tail) + t·diag(1, e), e_k → 2
        let n = 60;
        let d = DiagonalTail::from_rule(DiagonalRule::Reciprocal { scale: 1.0 }, vec![0.0], n).unwrap();
        let e = DiagonalTail::from_rule(DiagonalRule::Constant(2.0), vec![1.0], n).unwrap();
        let f: Family = StructuredFamily::new(d, Some(e), vec![]).unwrap().into();
        let r = verify_absorption(&f, 0.0, &AbsorptionOptions::default()).unwrap();
        assert_eq!(r.omega, Some(2.0));
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_text());
        assert!((r.matched_pairs[0].beta - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_absorption_is_vacuous_pass() {
        let n = 40;
        let d = DiagonalTail::from_rule(DiagonalRule::Reciprocal { scale: 1.0 }, vec![], n).unwrap();
        let f: Family = StructuredFamily::new(d, None, vec![]).unwrap().into();
        let r = verify_absorption(&f, 0.0, &AbsorptionOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NoAbsorption, "{}", r.to_text());
        assert!(r.verdict.is_success());
    }

    #[test]
    fn derivative_checks() {
        let f = diag_family(&[-1.0, 1.0], &[1.0, -1.0]);
        let r = derivative_check(&f, 0.3, 0).unwrap();
        assert_eq!(r.status, DerivativeStatus::Simple);
        assert!((r.analytic - 1.0).abs() < 1e-15);
        assert!(r.passed);
        let r = derivative_check(&f, 1.0, 0).unwrap();
        assert_eq!(r.status, DerivativeStatus::Crossing);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f: Family = PolynomialFamily::new(
            (0..3).map(|_| random_hermitian(&mut rng, 6)).collect(),
            None,
        )
        .unwrap()
        .into();
        let r = derivative_check(&f, 0.2, 0).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn isolated_slopes() {
        let f = PolynomialFamily::new(
            vec![
                HermitianMatrix::from_real_diagonal(&[0.0, 0.0, 5.0]).unwrap(),
                HermitianMatrix::from_real_diagonal(&[1.0, 2.0, 3.0]).unwrap(),
            ],
            None,
        )
        .unwrap();
        let mu = isolated_branch_slopes(&f, 0.0, 1e-8).unwrap();
        assert!((mu[0] - 1.0).abs() < 1e-14 && (mu[1] - 2.0).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a1 = random_hermitian(&mut rng, 4);
        let f = PolynomialFamily::new(vec![HermitianMatrix::zeros(4), a1.clone()], None).unwrap();
        let mu = isolated_branch_slopes(&f, 0.0, 1e-8).unwrap();
        let want = hermitian_eigenvalues(&a1).unwrap();
        for (a, b) in mu.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }

        let f = PolynomialFamily::new(
            vec![
                HermitianMatrix::from_real_diagonal(&[0.0, 5e-8]).unwrap(),
                HermitianMatrix::from_real_diagonal(&[1.0, 2.0]).unwrap(),
            ],
            None,
        )
        .unwrap();
        assert!(matches!(
            isolated_branch_slopes(&f, 0.0, 1e-8),
            Err(PerturbationError::Isolation { .. })
        ));
    }

    #[test]
    fn trajectory_csv_columns() {
        let f = diag_family(&[-1.0, 1.0], &[1.0, -1.0]);
        let tr = track(&f, &[0.1, 0.2], 1).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,branch_id,lambda,sigma,below_sigma\n"));
        assert!(text.contains(",n/a,true"));
    }
}
