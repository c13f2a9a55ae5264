//! Numerical-range geometry: support-function boundaries, the convex
//! essential region of structured families, the threshold `ω`, the
//! constructive cap check and ray approximations.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{hermitian_eig, quad_form, ComplexMatrix, LinalgError};
use crate::model::{EssentialData, ModelError, StructuredFamily};
use crate::numeric::{fit_line, fmt_f64};
use crate::sampling::random_unit_vector;

/// Vertices closer than this are merged.
pub const VERTEX_TOL: f64 = 1e-12;
/// Agreement tolerance between `Σ(t)/t` and `ω`.
pub const TOL_SLOPE: f64 = 1e-6;
/// Cap-check success threshold, relative to `‖T‖`.
pub const CAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumRangeError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("need at least 4 angles, got {0}")]
    TooFewAngles(usize),
    #[error("essential data has no finite limit points")]
    EmptyEssentialData,
    #[error("epsilon {0} must lie in (0, 1)")]
    Epsilon(f64),
    #[error("x is not a unit vector (norm {0})")]
    NotUnit(f64),
    #[error("t grid must be non-empty and positive")]
    BadGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub theta: f64,
    pub support_value: f64,
    pub point: Complex64,
}

/// Support-function samples of `W(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumRangeBoundary {
    pub dim: usize,
    pub samples: Vec<BoundarySample>,
}

impl NumRangeBoundary {
    /// Largest `|Re(e^{−iθ}p) − h(θ)|` over the samples.
    pub fn support_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| ((Complex64::from_polar(1.0, -s.theta) * s.point).re - s.support_value).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation of any sampled supporting half-plane by any point.
    pub fn convexity_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for p in &self.samples {
            for h in &self.samples {
                let v = (Complex64::from_polar(1.0, -h.theta) * p.point).re - h.support_value;
                worst = worst.max(v);
            }
        }
        worst.max(0.0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "support_value", "re", "im"])?;
        for s in &self.samples {
            w.write_record([
                fmt_f64(s.theta),
                fmt_f64(s.support_value),
                fmt_f64(s.point.re),
                fmt_f64(s.point.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// For each `θ_j = 2πj/n`, the top eigenpair of `Re(e^{−iθ}T)` gives the
/// support value and a boundary point `⟨Tx,x⟩`.
pub fn numerical_range_boundary(t: &ComplexMatrix, n_angles: usize) -> Result<NumRangeBoundary, NumRangeError> {
    if n_angles < 4 {
        return Err(NumRangeError::TooFewAngles(n_angles));
    }
    let samples = (0..n_angles)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n_angles as f64;
            let h = t.rotated_real_part(theta)?;
            let eig = hermitian_eig(&h)?;
            let top = eig.len() - 1;
            let x = eig.vector(top);
            let point = quad_form(t, x.as_slice())?;
            Ok(BoundarySample {
                theta,
                support_value: eig.values()[top],
                point,
            })
        })
        .collect::<Result<Vec<_>, NumRangeError>>()?;
    Ok(NumRangeBoundary {
        dim: t.nrows(),
        samples,
    })
}

/// Closed convex polygon given by its vertices in counter-clockwise order,
/// possibly degenerate (a point or a segment).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRegion {
    vertices: Vec<(f64, f64)>,
    unbounded: Vec<(f64, f64)>,
}

impl ConvexRegion {
    /// Monotone-chain hull; collinear and duplicate points are dropped.
    pub fn hull(points: &[(f64, f64)]) -> Self {
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.dedup_by(|a, b| (a.0 - b.0).abs() <= VERTEX_TOL && (a.1 - b.1).abs() <= VERTEX_TOL);
        if pts.len() <= 2 {
            return Self {
                vertices: pts,
                unbounded: Vec::new(),
            };
        }
        let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
            (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
        };
        let scale = pts
            .iter()
            .map(|p| p.0.abs().max(p.1.abs()))
            .fold(1.0, f64::max);
        let eps = VERTEX_TOL * scale * scale;
        let mut lower: Vec<(f64, f64)> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= eps {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<(f64, f64)> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= eps {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self {
            vertices: lower,
            unbounded: Vec::new(),
        }
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Recession directions carried over from unbounded tails.
    pub fn unbounded_directions(&self) -> &[(f64, f64)] {
        &self.unbounded
    }

    /// Half-infinite extent upwards (an unbounded tail along `+i`).
    pub fn contains_all_above(&self) -> bool {
        self.unbounded.iter().any(|&(x, y)| x == 0.0 && y > 0.0)
    }

    pub fn min_x(&self) -> Option<f64> {
        self.vertices.iter().map(|v| v.0).min_by(f64::total_cmp)
    }

    /// Multiplies every vertex by the complex number `c`.
    pub fn rotated(&self, c: Complex64) -> Self {
        let rot = |&(x, y): &(f64, f64)| {
            let z = Complex64::new(x, y) * c;
            (z.re, z.im)
        };
        Self::hull(&self.vertices.iter().map(rot).collect::<Vec<_>>())
    }

    /// Smallest `y` with `(x0, y)` in the region; `None` when the vertical
    /// line misses it.
    pub fn omega_at(&self, x0: f64) -> Option<f64> {
        let n = self.vertices.len();
        let scale = self
            .vertices
            .iter()
            .map(|p| p.0.abs().max(p.1.abs()))
            .fold(x0.abs().max(1.0), f64::max);
        let tol = VERTEX_TOL * scale;
        let mut best: Option<f64> = None;
        let mut take = |y: f64| best = Some(best.map_or(y, |b: f64| b.min(y)));
        for i in 0..n {
            let a = self.vertices[i];
            if (a.0 - x0).abs() <= tol {
                take(a.1);
            }
            if n == 1 {
                break;
            }
            let b = self.vertices[(i + 1) % n];
            let (lo, hi) = if a.0 < b.0 { (a, b) } else { (b, a) };
            if lo.0 < x0 - tol && x0 + tol < hi.0 {
                let s = (x0 - lo.0) / (hi.0 - lo.0);
                take(lo.1 + s * (hi.1 - lo.1));
            }
        }
        best
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re", "im"])?;
        for &(x, y) in &self.vertices {
            w.write_record([fmt_f64(x), fmt_f64(y)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Closest point of the region to `p` together with convex weights over
    /// (indices into) the input points it was built from.
    fn closest_with_weights(&self, p: (f64, f64)) -> ((f64, f64), Vec<(usize, f64)>) {
        let v = &self.vertices;
        match v.len() {
            0 => ((f64::NAN, f64::NAN), Vec::new()),
            1 => (v[0], vec![(0, 1.0)]),
            _ => {
                if v.len() >= 3 {
                    // fan triangulation from vertex 0
                    for i in 1..v.len() - 1 {
                        if let Some((l0, l1, l2)) = barycentric(v[0], v[i], v[i + 1], p) {
                            return (p, vec![(0, l0), (i, l1), (i + 1, l2)]);
                        }
                    }
                }
                let mut best: Option<(f64, (f64, f64), Vec<(usize, f64)>)> = None;
                let n = v.len();
                let edges = if n == 2 { 1 } else { n };
                for i in 0..edges {
                    let j = (i + 1) % n;
                    let (a, b) = (v[i], v[j]);
                    let d = (b.0 - a.0, b.1 - a.1);
                    let len2 = d.0 * d.0 + d.1 * d.1;
                    let s = (((p.0 - a.0) * d.0 + (p.1 - a.1) * d.1) / len2).clamp(0.0, 1.0);
                    let q = (a.0 + s * d.0, a.1 + s * d.1);
                    let dist = (q.0 - p.0).hypot(q.1 - p.1);
                    if best.as_ref().is_none_or(|b| dist < b.0) {
                        best = Some((dist, q, vec![(i, 1.0 - s), (j, s)]));
                    }
                }
                let (_, q, w) = best.expect("at least one edge");
                (q, w)
            }
        }
    }
}

fn barycentric(a: (f64, f64), b: (f64, f64), c: (f64, f64), p: (f64, f64)) -> Option<(f64, f64, f64)> {
    let det = (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
    if det.abs() <= f64::MIN_POSITIVE {
        return None;
    }
    let l1 = ((p.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (p.1 - a.1)) / det;
    let l2 = ((b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1)) / det;
    let l0 = 1.0 - l1 - l2;
    let tol = -1e-14;
    (l0 >= tol && l1 >= tol && l2 >= tol).then(|| (l0.max(0.0), l1.max(0.0), l2.max(0.0)))
}

/// Convex hull of the paired limit points, read as `x + iy`.
pub fn essential_region(data: &EssentialData) -> Result<ConvexRegion, NumRangeError> {
    if data.points.is_empty() {
        return Err(NumRangeError::EmptyEssentialData);
    }
    let mut region = ConvexRegion::hull(&data.points);
    region.unbounded = data.unbounded.clone();
    Ok(region)
}

/// Smallest `y` with `iy` in the region (the axis `x = 0`).
pub fn omega(region: &ConvexRegion) -> Option<f64> {
    region.omega_at(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSlopeReport {
    /// `Σ(0) = min σ_e(A₀)`; the axis is shifted there.
    pub sigma0: f64,
    pub omega: Option<f64>,
    /// `(t, (Σ(t) − Σ(0))/t)`.
    pub samples: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub agrees: bool,
}

impl SigmaSlopeReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("sigma0 = {}\n", fmt_f64(self.sigma0)));
        match self.omega {
            Some(w) => s.push_str(&format!("omega = {}\n", fmt_f64(w))),
            None => s.push_str("omega = none (axis misses the essential region)\n"),
        }
        s.push_str(&format!("extrapolated = {}\n", fmt_f64(self.extrapolated)));
        s.push_str(&format!("agrees = {}\n", self.agrees));
        s
    }
}

/// Compares `(Σ(t) − Σ(0))/t` with `ω` of the shifted essential region.
pub fn sigma_slope_check(family: &StructuredFamily, t_grid: &[f64]) -> Result<SigmaSlopeReport, NumRangeError> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(NumRangeError::BadGrid);
    }
    let data = family.essential_points();
    let region = essential_region(&data)?;
    let sigma0 = data.sigma(0.0).ok_or(NumRangeError::EmptyEssentialData)?;
    let omega = region.omega_at(sigma0);
    let mut samples: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| (t, (data.sigma(t).unwrap_or(f64::NAN) - sigma0) / t))
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Σ is concave piecewise linear, so the ratio is exactly constant near 0;
    // a line through the smallest quarter of the grid recovers the limit.
    let k = (samples.len() / 4).max(2).min(samples.len());
    let extrapolated = if k >= 2 {
        let xs: Vec<f64> = samples[..k].iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples[..k].iter().map(|s| s.1).collect();
        fit_line(&xs, &ys).map_or(samples[0].1, |f| f.intercept)
    } else {
        samples[0].1
    };
    let agrees = omega.is_some_and(|w| (w - extrapolated).abs() <= TOL_SLOPE);
    Ok(SigmaSlopeReport {
        sigma0,
        omega,
        samples,
        extrapolated,
        agrees,
    })
}

/// The 2-D compression used by the cap and convexity constructions: an
/// orthonormal pair `b1, b2` and the affine map `r ↦ ⟨Ty,y⟩` on the Bloch
/// sphere of unit vectors in their span.
struct BlochPlane {
    b1: DVector<Complex64>,
    b2: Option<DVector<Complex64>>,
    l: [[f64; 3]; 2],
    scale: f64,
}

impl BlochPlane {
    fn new(t: &ComplexMatrix, b1: &DVector<Complex64>, other: &DVector<Complex64>) -> Self {
        let m = t.as_matrix();
        let scale = t.scale();
        let proj = other - b1 * b1.dotc(other);
        let b2 = (proj.norm() > 1e-12 * other.norm().max(1.0))
            .then(|| &proj / Complex64::new(proj.norm(), 0.0));
        let l = match &b2 {
            None => [[0.0; 3]; 2],
            Some(b2) => {
                let t11 = b1.dotc(&(m * b1));
                let t12 = b1.dotc(&(m * b2));
                let t21 = b2.dotc(&(m * b1));
                let t22 = b2.dotc(&(m * b2));
                // tr(T₂σ): σx → t12 + t21, σy → i(t12 − t21), σz → t11 − t22
                let i = Complex64::new(0.0, 1.0);
                let sx = (t12 + t21) * 0.5;
                let sy = i * (t12 - t21) * 0.5;
                let sz = (t11 - t22) * 0.5;
                [[sx.re, sy.re, sz.re], [sx.im, sy.im, sz.im]]
            }
        };
        Self { b1: b1.clone(), b2, l, scale }
    }

    fn bloch(&self, v: &DVector<Complex64>) -> [f64; 3] {
        match &self.b2 {
            None => [0.0, 0.0, 1.0],
            Some(b2) => {
                let a = self.b1.dotc(v);
                let b = b2.dotc(v);
                let n = a.norm_sqr() + b.norm_sqr();
                let ab = a.conj() * b;
                [2.0 * ab.re / n, 2.0 * ab.im / n, (a.norm_sqr() - b.norm_sqr()) / n]
            }
        }
    }

    fn vector(&self, r: [f64; 3]) -> DVector<Complex64> {
        match &self.b2 {
            None => self.b1.clone(),
            Some(b2) => {
                let phi = 0.5 * r[2].clamp(-1.0, 1.0).acos();
                let psi = r[1].atan2(r[0]);
                let y = &self.b1 * Complex64::new(phi.cos(), 0.0)
                    + b2 * Complex64::from_polar(phi.sin(), psi);
                &y / Complex64::new(y.norm(), 0.0)
            }
        }
    }

    /// A point of the unit sphere with `L r = L q`, maximizing `r_z`.
    fn solve(&self, q: [f64; 3]) -> [f64; 3] {
        let [r1, r2] = self.l;
        let n1 = norm3(r1);
        let n2 = norm3(r2);
        let big = n1.max(n2);
        if self.b2.is_none() || big <= 1e-14 * self.scale.max(f64::MIN_POSITIVE) {
            return [0.0, 0.0, 1.0];
        }
        let k = cross3(r1, r2);
        if norm3(k) > 1e-10 * n1 * n2 && n1 > 0.0 && n2 > 0.0 {
            // line q + s·k through the ball; take the sphere point with larger z
            let kk = dot3(k, k);
            let qk = dot3(q, k);
            let qq = dot3(q, q);
            let disc = (qk * qk - kk * (qq - 1.0)).max(0.0).sqrt();
            let s1 = (-qk + disc) / kk;
            let s2 = (-qk - disc) / kk;
            let p1 = add3(q, scale3(k, s1));
            let p2 = add3(q, scale3(k, s2));
            if p1[2] >= p2[2] {
                p1
            } else {
                p2
            }
        } else {
            // plane ℓ·r = ℓ·q; maximize z on its circle
            let ell = if n1 >= n2 { r1 } else { r2 };
            let ll = dot3(ell, ell);
            let c = scale3(ell, dot3(ell, q) / ll);
            let rho = (1.0 - dot3(c, c)).max(0.0).sqrt();
            let ez = [0.0, 0.0, 1.0];
            let mut dir = add3(ez, scale3(ell, -ell[2] / ll));
            if norm3(dir) <= 1e-14 {
                dir = cross3(ell, [1.0, 0.0, 0.0]);
                if norm3(dir) <= 1e-14 {
                    dir = cross3(ell, [0.0, 1.0, 0.0]);
                }
            }
            let dn = norm3(dir);
            add3(c, scale3(dir, rho / dn))
        }
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapTarget {
    pub target: Complex64,
    pub achieved: Complex64,
    pub defect: f64,
    /// `|⟨x,y⟩|²`.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapReport {
    pub epsilon: f64,
    pub targets_checked: usize,
    pub max_defect: f64,
    pub min_overlap: f64,
    pub scale: f64,
    /// Targets whose witness misses the value or the cap.
    pub failures: Vec<usize>,
    pub targets: Vec<CapTarget>,
    pub witnesses: Vec<DVector<Complex64>>,
}

impl CapReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.max_defect <= CAP_TOL * self.scale.max(f64::MIN_POSITIVE)
    }

    pub fn to_text(&self) -> String {
        format!(
            "epsilon = {}\ntargets_checked = {}\nmax_defect = {}\nthreshold = {}\nmin_overlap = {}\ncap_bound = {}\nfailures = {}\npassed = {}\n",
            fmt_f64(self.epsilon),
            self.targets_checked,
            fmt_f64(self.max_defect),
            fmt_f64(CAP_TOL * self.scale),
            fmt_f64(self.min_overlap),
            fmt_f64(1.0 - self.epsilon),
            self.failures.len(),
            self.passed()
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "target_re", "target_im", "achieved_re", "achieved_im", "defect", "overlap"])?;
        for (i, t) in self.targets.iter().enumerate() {
            w.write_record([
                i.to_string(),
                fmt_f64(t.target.re),
                fmt_f64(t.target.im),
                fmt_f64(t.achieved.re),
                fmt_f64(t.achieved.im),
                fmt_f64(t.defect),
                fmt_f64(t.overlap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds, for random targets `w = ε⟨Tv,v⟩ + (1−ε)⟨Tx,x⟩`, unit vectors
/// `y ∈ span{x, v}` with `|⟨x,y⟩|² ≥ 1−ε` and `⟨Ty,y⟩ = w`.
pub fn cap_check<R: Rng + ?Sized>(
    t: &ComplexMatrix,
    x: &DVector<Complex64>,
    epsilon: f64,
    n_targets: usize,
    rng: &mut R,
) -> Result<CapReport, NumRangeError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(NumRangeError::Epsilon(epsilon));
    }
    if !t.is_square() || x.len() != t.nrows() {
        return Err(LinalgError::DimensionMismatch {
            expected: t.nrows(),
            actual: x.len(),
        }
        .into());
    }
    let xn = x.norm();
    if (xn - 1.0).abs() > 1e-10 {
        return Err(NumRangeError::NotUnit(xn));
    }
    let n = t.nrows();
    let z = quad_form(t, x.as_slice())?;
    let mut report = CapReport {
        epsilon,
        targets_checked: 0,
        max_defect: 0.0,
        min_overlap: 1.0,
        scale: t.scale(),
        failures: Vec::new(),
        targets: Vec::with_capacity(n_targets),
        witnesses: Vec::with_capacity(n_targets),
    };
    for i in 0..n_targets {
        let v = random_unit_vector(rng, n);
        let u = quad_form(t, v.as_slice())?;
        let target = u * epsilon + z * (1.0 - epsilon);
        let plane = BlochPlane::new(t, x, &v);
        let rv = plane.bloch(&v);
        let q = add3(scale3(rv, epsilon), [0.0, 0.0, 1.0 - epsilon]);
        let y = plane.vector(plane.solve(q));
        let achieved = quad_form(t, y.as_slice())?;
        let defect = (achieved - target).norm();
        let overlap = x.dotc(&y).norm_sqr();
        if overlap < 1.0 - epsilon - 1e-10 || !defect.is_finite() || defect > CAP_TOL * report.scale {
            report.failures.push(i);
        }
        report.max_defect = report.max_defect.max(defect);
        report.min_overlap = report.min_overlap.min(overlap);
        report.targets_checked += 1;
        report.targets.push(CapTarget {
            target,
            achieved,
            defect,
            overlap,
        });
        report.witnesses.push(y);
    }
    Ok(report)
}

/// A unit `y ∈ span{x₁, x₂}` with `⟨Ty,y⟩ = s⟨Tx₁,x₁⟩ + (1−s)⟨Tx₂,x₂⟩`.
pub fn convex_combination_witness(
    t: &ComplexMatrix,
    x1: &DVector<Complex64>,
    x2: &DVector<Complex64>,
    s: f64,
) -> Result<(DVector<Complex64>, f64), NumRangeError> {
    let u1 = crate::linalg::normalized(x1).ok_or(LinalgError::ZeroVector)?;
    let u2 = crate::linalg::normalized(x2).ok_or(LinalgError::ZeroVector)?;
    let w = quad_form(t, u1.as_slice())? * s + quad_form(t, u2.as_slice())? * (1.0 - s);
    let plane = BlochPlane::new(t, &u1, &u2);
    let q = add3(scale3([0.0, 0.0, 1.0], s), scale3(plane.bloch(&u2), 1.0 - s));
    let y = plane.vector(plane.solve(q));
    let defect = (quad_form(t, y.as_slice())? - w).norm();
    Ok((y, defect))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayRow {
    pub t: f64,
    pub n: usize,
    pub target: (f64, f64),
    pub achieved: (f64, f64),
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RayStatus {
    Checked,
    /// Nothing to check; the reason is reported verbatim.
    Vacuous(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayReport {
    pub status: RayStatus,
    pub rows: Vec<RayRow>,
}

impl RayReport {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "n", "target_re", "target_im", "achieved_re", "achieved_im", "error"])?;
        for r in &self.rows {
            w.write_record([
                fmt_f64(r.t),
                r.n.to_string(),
                fmt_f64(r.target.0),
                fmt_f64(r.target.1),
                fmt_f64(r.achieved.0),
                fmt_f64(r.achieved.1),
                fmt_f64(r.error),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Errors at `t` ordered by truncation size.
    pub fn errors_at(&self, t: f64) -> Vec<f64> {
        let mut rows: Vec<&RayRow> = self.rows.iter().filter(|r| r.t == t).collect();
        rows.sort_by_key(|r| r.n);
        rows.iter().map(|r| r.error).collect()
    }
}

/// Approximates `w + t·v` by quadratic-form pairs `(⟨A₀y,y⟩, ⟨A₁y,y⟩)` of
/// unit vectors supported on the tail indices `N/2 < k ≤ N`.
pub fn ray_check(
    family: &StructuredFamily,
    w: (f64, f64),
    direction: (f64, f64),
    t_values: &[f64],
    sizes: &[usize],
) -> Result<RayReport, NumRangeError> {
    let data = family.essential_points();
    if data.points.is_empty() {
        return Ok(RayReport {
            status: RayStatus::Vacuous("essential data empty: no finite limit points".into()),
            rows: Vec::new(),
        });
    }
    let declared = data
        .unbounded
        .iter()
        .any(|&(ux, uy)| ux * direction.0 + uy * direction.1 > 0.0);
    if !declared {
        return Ok(RayReport {
            status: RayStatus::Vacuous("no unbounded direction declared".into()),
            rows: Vec::new(),
        });
    }
    let dn = direction.0.hypot(direction.1);
    let v = (direction.0 / dn, direction.1 / dn);
    let mut rows = Vec::new();
    for &n in sizes {
        let f = family.truncated(n)?;
        let a0 = f.evaluate(0.0)?.to_complex();
        let a1 = f.derivative(0.0)?.to_complex();
        let d0 = f.diagonal_at(0.0);
        let d1: Vec<f64> = f
            .diagonal_at(1.0)
            .iter()
            .zip(&d0)
            .map(|(a, b)| a - b)
            .collect();
        let tail: Vec<usize> = ((n / 2)..n).collect();
        let pts: Vec<(f64, f64)> = tail.iter().map(|&k| (d0[k], d1[k])).collect();
        let region = ConvexRegion::hull(&pts);
        for &t in t_values {
            let target = (w.0 + t * v.0, w.1 + t * v.1);
            let (_, weights) = region.closest_with_weights(target);
            let mut y = DVector::<Complex64>::zeros(n);
            for (vi, c) in weights {
                let vert = region.vertices()[vi];
                let k = tail[pts
                    .iter()
                    .position(|p| (p.0 - vert.0).abs() <= VERTEX_TOL * p.0.abs().max(1.0)
                        && (p.1 - vert.1).abs() <= VERTEX_TOL * p.1.abs().max(1.0))
                    .expect("hull vertex comes from the input")];
                y[k] += Complex64::new(c.max(0.0).sqrt(), 0.0);
            }
            let achieved = (
                quad_form(&a0, y.as_slice())?.re,
                quad_form(&a1, y.as_slice())?.re,
            );
            let error = (achieved.0 - target.0).hypot(achieved.1 - target.1);
            rows.push(RayRow {
                t,
                n,
                target,
                achieved,
                error,
            });
        }
    }
    Ok(RayReport {
        status: RayStatus::Checked,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiagonalRule, DiagonalTail};
    use crate::sampling::random_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn boundary_of_diag_is_segment() {
        let t = ComplexMatrix::diagonal(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let b = numerical_range_boundary(&t, 64).unwrap();
        for s in &b.samples {
            assert!(s.point.im.abs() < 1e-12);
            assert!((-1e-12..=1.0 + 1e-12).contains(&s.point.re));
        }
        assert!(b.support_defect() < 1e-10);
    }

    #[test]
    fn boundary_of_jordan_block_is_circle() {
        let t = ComplexMatrix::from_row_major(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let b = numerical_range_boundary(&t, 32).unwrap();
        for s in &b.samples {
            assert!((s.point.norm() - 0.5).abs() < 1e-12, "{:?}", s.point);
        }
        // brute-force check of the radius
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let best = (0..100_000)
            .map(|_| quad_form(&t, random_unit_vector(&mut rng, 2).as_slice()).unwrap().norm())
            .fold(0.0, f64::max);
        assert!(best <= 0.5 + 1e-12 && best > 0.499);
    }

    #[test]
    fn boundary_of_identity_is_a_point() {
        let b = numerical_range_boundary(&ComplexMatrix::identity(3), 8).unwrap();
        assert!(b.samples.iter().all(|s| (s.point - c(1.0, 0.0)).norm() < 1e-12));
        assert!(matches!(
            numerical_range_boundary(&ComplexMatrix::identity(3), 3),
            Err(NumRangeError::TooFewAngles(3))
        ));
    }

    #[test]
    fn boundary_is_convex_for_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_matrix(&mut rng, 6);
        let b = numerical_range_boundary(&t, 90).unwrap();
        assert!(b.support_defect() <= 1e-10 * t.scale());
        assert!(b.convexity_violation() <= 1e-8 * t.scale());
    }

    #[test]
    fn hull_and_omega_examples() {
        let single = ConvexRegion::hull(&[(0.0, 0.0)]);
        assert_eq!(single.vertices(), &[(0.0, 0.0)]);
        assert_eq!(omega(&single), Some(0.0));

        let seg = ConvexRegion::hull(&[(0.0, 1.0), (0.0, 3.0)]);
        assert_eq!(seg.vertices().len(), 2);
        assert_eq!(omega(&seg), Some(1.0));

        let tri = ConvexRegion::hull(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.2, 0.2)]);
        assert_eq!(tri.vertices().len(), 3);

        let tri = ConvexRegion::hull(&[(-1.0, 2.0), (1.0, 2.0), (1.0, 5.0)]);
        assert!((omega(&tri).unwrap() - 2.0).abs() < 1e-15);

        let off = ConvexRegion::hull(&[(1.0, 0.0), (2.0, 1.0)]);
        assert_eq!(omega(&off), None);
    }

    #[test]
    fn sigma_slope_for_two_tails() {
        let d = DiagonalTail::from_rule(DiagonalRule::Constant(0.0), vec![], 40).unwrap();
        let e = DiagonalTail::from_rule(
            DiagonalRule::Interleave {
                odd: Box::new(DiagonalRule::Constant(1.0)),
                even: Box::new(DiagonalRule::Constant(-2.0)),
            },
            vec![],
            40,
        )
        .unwrap();
        let f = StructuredFamily::new(d, Some(e), vec![]).unwrap();
        let r = sigma_slope_check(&f, &crate::numeric::logspace(1e-6, 1.0, 16)).unwrap();
        assert_eq!(r.omega, Some(-2.0));
        assert!((r.extrapolated + 2.0).abs() < 1e-6);
        assert!(r.agrees);
    }

    #[test]
    fn sigma_slope_with_unit_e_tail() {
        let d = DiagonalTail::from_rule(DiagonalRule::Reciprocal { scale: 1.0 }, vec![], 40).unwrap();
        let e = DiagonalTail::from_rule(DiagonalRule::Constant(1.0), vec![], 40).unwrap();
        let f = StructuredFamily::new(d, Some(e), vec![]).unwrap();
        let r = sigma_slope_check(&f, &[0.1, 0.2, 0.4, 0.8]).unwrap();
        assert!(r.samples.iter().all(|s| (s.1 - 1.0).abs() < 1e-15));
        assert!(r.agrees);
    }

    #[test]
    fn cap_check_identity_and_diag() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let r = cap_check(&ComplexMatrix::identity(2), &x, 0.4, 20, &mut rng).unwrap();
        assert!(r.passed());
        assert!(r.targets.iter().all(|t| (t.target - c(1.0, 0.0)).norm() < 1e-15));

        let t = ComplexMatrix::diagonal(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let r = cap_check(&t, &x, 0.5, 200, &mut rng).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert!(r.targets.iter().all(|t| t.target.re <= 0.5 + 1e-15 && t.target.re >= 0.0));
    }

    #[test]
    fn cap_check_random_4x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_matrix(&mut rng, 4);
        let x = random_unit_vector(&mut rng, 4);
        let r = cap_check(&t, &x, 0.3, 200, &mut rng).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert!(r.min_overlap >= 0.7 - 1e-10);
        for y in &r.witnesses {
            assert!((y.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_check_rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = DVector::from_vec(vec![c(2.0, 0.0)]);
        let t = ComplexMatrix::identity(1);
        assert!(matches!(cap_check(&t, &x, 0.5, 1, &mut rng), Err(NumRangeError::NotUnit(_))));
        let x = DVector::from_vec(vec![c(1.0, 0.0)]);
        assert!(matches!(cap_check(&t, &x, 1.0, 1, &mut rng), Err(NumRangeError::Epsilon(_))));
    }

    #[test]
    fn convexity_witnesses() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_matrix(&mut rng, 5);
        for _ in 0..20 {
            let x1 = random_unit_vector(&mut rng, 5);
            let x2 = random_unit_vector(&mut rng, 5);
            for s in [0.25, 0.5, 0.75] {
                let (_, defect) = convex_combination_witness(&t, &x1, &x2, s).unwrap();
                assert!(defect <= 1e-8 * t.scale(), "{defect}");
            }
        }
    }

    #[test]
    fn ray_check_mixed_tail() {
        let rule = DiagonalRule::Interleave {
            odd: Box::new(DiagonalRule::Reciprocal { scale: 1.0 }),
            even: Box::new(DiagonalRule::Linear { slope: 1.0 }),
        };
        let d = DiagonalTail::from_rule(rule, vec![], 400).unwrap();
        let f = StructuredFamily::new(d, None, vec![]).unwrap();
        let r = ray_check(&f, (0.0, 0.0), (1.0, 0.0), &[0.0, 0.5, 2.0], &[50, 100, 200, 400]).unwrap();
        assert_eq!(r.status, RayStatus::Checked);
        let at0 = r.errors_at(0.0);
        assert!(at0.windows(2).all(|w| w[1] < w[0]), "{at0:?}");
        for t in [0.5, 2.0] {
            let e = r.errors_at(t);
            assert!(e.last().unwrap() <= &1e-12, "{e:?}");
        }
    }

    #[test]
    fn ray_check_vacuous_cases() {
        let d = DiagonalTail::from_rule(DiagonalRule::ExpNegK, vec![], 40).unwrap();
        let f = StructuredFamily::new(d, None, vec![]).unwrap();
        let r = ray_check(&f, (0.0, 0.0), (1.0, 0.0), &[1.0], &[40]).unwrap();
        assert_eq!(r.status, RayStatus::Vacuous("no unbounded direction declared".into()));

        let d = DiagonalTail::from_rule(DiagonalRule::Linear { slope: 1.0 }, vec![], 40).unwrap();
        let f = StructuredFamily::new(d, None, vec![]).unwrap();
        let r = ray_check(&f, (0.0, 0.0), (1.0, 0.0), &[1.0], &[40]).unwrap();
        assert!(matches!(r.status, RayStatus::Vacuous(_)));
    }

    #[test]
    fn region_rotation_and_projection() {
        let data = EssentialData {
            points: vec![(0.0, 1.0), (2.0, -1.0), (1.0, 3.0), (0.5, 0.5)],
            unbounded: vec![],
        };
        let c = Complex64::from_polar(1.0, 0.7);
        let a = essential_region(&data.rotated(c)).unwrap();
        let b = essential_region(&data).unwrap().rotated(c);
        assert_eq!(a.vertices().len(), b.vertices().len());
        for (p, q) in a.vertices().iter().zip(b.vertices()) {
            assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
        }
        let region = essential_region(&data).unwrap();
        assert_eq!(region.min_x(), Some(0.0));
    }
}
