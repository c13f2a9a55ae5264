//! Analytic operator families in finite form.
//!
//! Two representations are supported:
//!
//! * [`PolynomialFamily`]: dense Hermitian coefficients, `A(t) = Σ tᵏ Aₖ`.
//! * [`StructuredFamily`]: a diagonal `A₀` generated by a closed-form rule,
//!   an optional diagonal t-linear part, and finitely many rank-one terms
//!   `± c(t) a a*`. The diagonal rules carry the limit points of the
//!   untruncated operator, which is what makes essential-spectrum quantities
//!   exactly computable for this class.

use num_complex::Complex64;

use crate::linalg::{HermitianMatrix, LinalgError};

pub const DEFAULT_TAIL_TOL: f64 = 1e-6;
pub const DEFAULT_TRUNCATION: usize = 400;
/// Diagonal entries smaller in magnitude than this are flushed to zero.
pub const UNDERFLOW_FLUSH: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("t = {t} lies outside the declared radius {radius}")]
    OutOfRange { t: f64, radius: f64 },
    #[error("family has no first-order term")]
    NoFirstOrderTerm,
    #[error("tail validation failed at index {index}: {message}")]
    Tail { index: usize, message: String },
    #[error("invalid diagonal rule: {0}")]
    InvalidRule(String),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

/// Closed-form generator `k ↦ d_k` for 1-based indices.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagonalRule {
    /// Explicit entries `d_1, d_2, …`; must cover the truncation.
    List(Vec<f64>),
    Constant(f64),
    /// `slope · k`.
    Linear { slope: f64 },
    /// `scale / k`.
    Reciprocal { scale: f64 },
    /// `scale · ratioᵏ`, restricted to `|ratio| < 1` or `ratio = 1`.
    Geometric { scale: f64, ratio: f64 },
    /// `e^{−k}`.
    ExpNegK,
    /// `odd` on odd indices, `even` on even indices (both evaluated at `k`).
    Interleave {
        odd: Box<DiagonalRule>,
        even: Box<DiagonalRule>,
    },
}

/// Asymptotic behaviour of the subsequence an index belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailClass {
    Limit(f64),
    /// Diverges to `+∞` (`sign = 1.0`) or `−∞` (`sign = −1.0`).
    Unbounded(f64),
    /// No analytic limit (explicit lists); resolved against declared points.
    Unresolved,
}

impl DiagonalRule {
    fn validate(&self) -> Result<(), ModelError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidRule(format!("{name} must be finite")))
            }
        };
        match self {
            DiagonalRule::List(values) => {
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(ModelError::Tail {
                        index: i + 1,
                        message: "non-finite list entry".into(),
                    });
                }
                Ok(())
            }
            DiagonalRule::Constant(v) => finite("value", *v),
            DiagonalRule::Linear { slope } => finite("slope", *slope),
            DiagonalRule::Reciprocal { scale } => finite("scale", *scale),
            DiagonalRule::Geometric { scale, ratio } => {
                finite("scale", *scale)?;
                finite("ratio", *ratio)?;
                if ratio.abs() < 1.0 || *ratio == 1.0 {
                    Ok(())
                } else {
                    Err(ModelError::InvalidRule(format!(
                        "geometric ratio {ratio} must satisfy |r| < 1 or r = 1"
                    )))
                }
            }
            DiagonalRule::ExpNegK => Ok(()),
            DiagonalRule::Interleave { odd, even } => {
                odd.validate()?;
                even.validate()
            }
        }
    }

    /// Raw rule value at 1-based index `k`; `None` past the end of a list.
    pub fn value(&self, k: usize) -> Option<f64> {
        let kf = k as f64;
        match self {
            DiagonalRule::List(values) => values.get(k - 1).copied(),
            DiagonalRule::Constant(v) => Some(*v),
            DiagonalRule::Linear { slope } => Some(slope * kf),
            DiagonalRule::Reciprocal { scale } => Some(scale / kf),
            DiagonalRule::Geometric { scale, ratio } => Some(scale * ratio.powf(kf)),
            DiagonalRule::ExpNegK => Some((-kf).exp()),
            DiagonalRule::Interleave { odd, even } => {
                if k % 2 == 1 {
                    odd.value(k)
                } else {
                    even.value(k)
                }
            }
        }
    }

    /// Analytic class of index `k`.
    pub fn class(&self, k: usize) -> TailClass {
        match self {
            DiagonalRule::List(_) => TailClass::Unresolved,
            DiagonalRule::Constant(v) => TailClass::Limit(*v),
            DiagonalRule::Linear { slope } => {
                if *slope == 0.0 {
                    TailClass::Limit(0.0)
                } else {
                    TailClass::Unbounded(slope.signum())
                }
            }
            DiagonalRule::Reciprocal { .. } | DiagonalRule::ExpNegK => TailClass::Limit(0.0),
            DiagonalRule::Geometric { scale, ratio } => {
                if *ratio == 1.0 {
                    TailClass::Limit(*scale)
                } else {
                    TailClass::Limit(0.0)
                }
            }
            DiagonalRule::Interleave { odd, even } => {
                if k % 2 == 1 {
                    odd.class(k)
                } else {
                    even.class(k)
                }
            }
        }
    }

    fn is_unbounded(&self) -> bool {
        match self {
            DiagonalRule::Linear { slope } => *slope != 0.0,
            DiagonalRule::Interleave { odd, even } => odd.is_unbounded() || even.is_unbounded(),
            _ => false,
        }
    }
}

/// A truncated diagonal generated by a rule, with the declared limit points
/// of the untruncated sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalTail {
    rule: DiagonalRule,
    head: Vec<f64>,
    limit_points: Vec<f64>,
    truncation: usize,
    tail_tol: f64,
    entries: Vec<f64>,
    flushed: Vec<usize>,
}

impl DiagonalTail {
    /// Builds and validates a tail. `head` overrides the first entries; it
    /// must stay inside the first half of the truncation. When
    /// `declared_limits` is `None` the limit points are derived from the rule
    /// (lists always need declared points).
    pub fn new(
        rule: DiagonalRule,
        head: Vec<f64>,
        declared_limits: Option<Vec<f64>>,
        truncation: usize,
        tail_tol: f64,
    ) -> Result<Self, ModelError> {
        rule.validate()?;
        if truncation < 2 {
            return Err(ModelError::InvalidRule(format!(
                "truncation {truncation} must be at least 2"
            )));
        }
        if !(tail_tol > 0.0 && tail_tol.is_finite()) {
            return Err(ModelError::InvalidRule("tail_tol must be positive".into()));
        }
        let half = truncation / 2;
        if head.len() > half {
            return Err(ModelError::Tail {
                index: head.len(),
                message: format!("head of length {} reaches into the tail (N/2 = {half})", head.len()),
            });
        }
        if let Some(i) = head.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::Tail {
                index: i + 1,
                message: "non-finite head entry".into(),
            });
        }

        let mut entries = Vec::with_capacity(truncation);
        let mut flushed = Vec::new();
        for k in 1..=truncation {
            let raw = if k <= head.len() {
                head[k - 1]
            } else {
                rule.value(k).ok_or_else(|| ModelError::Tail {
                    index: k,
                    message: format!("list rule is shorter than the truncation {truncation}"),
                })?
            };
            if !raw.is_finite() {
                return Err(ModelError::Tail {
                    index: k,
                    message: "non-finite entry".into(),
                });
            }
            if raw != 0.0 && raw.abs() < UNDERFLOW_FLUSH {
                flushed.push(k);
                entries.push(0.0);
            } else {
                entries.push(raw);
            }
        }

        // analytic limits observed on the tail
        let mut analytic: Vec<f64> = Vec::new();
        for k in (half + 1)..=truncation {
            if let TailClass::Limit(l) = rule.class(k) {
                if !analytic.iter().any(|&a| (a - l).abs() <= tail_tol) {
                    analytic.push(l);
                }
            }
        }

        let limit_points = match declared_limits {
            Some(declared) => {
                for (i, &l) in declared.iter().enumerate() {
                    if !l.is_finite() {
                        return Err(ModelError::InvalidRule(format!(
                            "limit point #{i} is not finite"
                        )));
                    }
                    let analytic_hit = analytic.iter().any(|&a| (a - l).abs() <= tail_tol);
                    let entry_hit = (1..=truncation).find(|&k| {
                        matches!(rule.class(k), TailClass::Unresolved)
                            && (entries[k - 1] - l).abs() <= tail_tol
                    });
                    if !analytic_hit && entry_hit.is_none() {
                        return Err(ModelError::Tail {
                            index: truncation,
                            message: format!("declared limit point {l} is not attained by the rule"),
                        });
                    }
                }
                for &a in &analytic {
                    if !declared.iter().any(|&l| (a - l).abs() <= tail_tol) {
                        return Err(ModelError::Tail {
                            index: truncation,
                            message: format!("rule limit {a} is missing from the declared limit points"),
                        });
                    }
                }
                declared
            }
            None => {
                let has_list = ((half + 1)..=truncation)
                    .any(|k| matches!(rule.class(k), TailClass::Unresolved));
                if has_list {
                    return Err(ModelError::InvalidRule(
                        "list rules require declared limit points".into(),
                    ));
                }
                analytic
            }
        };

        // explicit entries on the tail must sit near a declared point
        for k in (half + 1)..=truncation {
            if matches!(rule.class(k), TailClass::Unresolved) {
                let d = entries[k - 1];
                if !limit_points.iter().any(|&l| (d - l).abs() <= tail_tol) {
                    return Err(ModelError::Tail {
                        index: k,
                        message: format!("entry {d} is farther than {tail_tol} from every limit point"),
                    });
                }
            }
        }

        Ok(Self {
            rule,
            head,
            limit_points,
            truncation,
            tail_tol,
            entries,
            flushed,
        })
    }

    /// Convenience constructor with derived limits and default tolerance.
    pub fn from_rule(rule: DiagonalRule, head: Vec<f64>, truncation: usize) -> Result<Self, ModelError> {
        Self::new(rule, head, None, truncation, DEFAULT_TAIL_TOL)
    }

    pub fn rule(&self) -> &DiagonalRule {
        &self.rule
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn limit_points(&self) -> &[f64] {
        &self.limit_points
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// 1-based indices whose entries were flushed to zero.
    pub fn flushed_indices(&self) -> &[usize] {
        &self.flushed
    }

    /// Entry at 1-based index `k`.
    pub fn entry(&self, k: usize) -> f64 {
        self.entries[k - 1]
    }

    pub fn is_unbounded(&self) -> bool {
        self.rule.is_unbounded()
    }

    /// Class of a tail index with lists resolved to the nearest declared point.
    pub fn resolved_class(&self, k: usize) -> TailClass {
        if k <= self.head.len() {
            return TailClass::Unresolved;
        }
        match self.rule.class(k) {
            TailClass::Unresolved => {
                let d = self.entry(k);
                let nearest = self
                    .limit_points
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - d).abs().total_cmp(&(b - d).abs()));
                nearest.map_or(TailClass::Unresolved, TailClass::Limit)
            }
            c => c,
        }
    }

    /// Same rule and head at a different truncation.
    pub fn retruncated(&self, truncation: usize) -> Result<Self, ModelError> {
        Self::new(
            self.rule.clone(),
            self.head.clone(),
            Some(self.limit_points.clone()),
            truncation,
            self.tail_tol,
        )
    }
}

/// Polynomial coupling `c(t) = Σ c_j tʲ` of a rank-one term.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    coefficients: Vec<f64>,
}

impl Coupling {
    pub fn new(coefficients: Vec<f64>) -> Result<Self, ModelError> {
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::InvalidFamily(
                "coupling needs finite coefficients".into(),
            ));
        }
        Ok(Self { coefficients })
    }

    /// `tᵏ`.
    pub fn monomial(k: usize) -> Self {
        let mut coefficients = vec![0.0; k + 1];
        coefficients[k] = 1.0;
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn value(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * t + k as f64 * c)
    }

    /// `Some(k)` when the coupling is exactly `tᵏ`.
    pub fn as_monomial(&self) -> Option<usize> {
        let nonzero: Vec<usize> = (0..self.coefficients.len())
            .filter(|&k| self.coefficients[k] != 0.0)
            .collect();
        match nonzero.as_slice() {
            [k] if self.coefficients[*k] == 1.0 => Some(*k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `sign · c(t) · a a*`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneTerm {
    pub vector: Vec<Complex64>,
    pub coupling: Coupling,
    pub sign: Sign,
}

/// Paired limit points `(lim d_k, lim e_k)` of the diagonal data, plus the
/// directions along which the diagonal pairs escape to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct EssentialData {
    pub points: Vec<(f64, f64)>,
    pub unbounded: Vec<(f64, f64)>,
}

impl EssentialData {
    /// `min σ_e` of `A(t)`: the smallest `x + t·y` over the points.
    pub fn sigma(&self, t: f64) -> Option<f64> {
        self.points
            .iter()
            .map(|&(x, y)| x + t * y)
            .min_by(f64::total_cmp)
    }

    /// Multiplies every planar point `x + iy` by the complex number `c`.
    pub fn rotated(&self, c: Complex64) -> Self {
        let rot = |&(x, y): &(f64, f64)| {
            let z = Complex64::new(x, y) * c;
            (z.re, z.im)
        };
        Self {
            points: self.points.iter().map(rot).collect(),
            unbounded: self.unbounded.iter().map(rot).collect(),
        }
    }
}

/// Diagonal-plus-finite-rank family with declared tail data.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredFamily {
    base: DiagonalTail,
    a1_diagonal: Option<DiagonalTail>,
    rank_one: Vec<RankOneTerm>,
}

impl StructuredFamily {
    pub fn new(
        base: DiagonalTail,
        a1_diagonal: Option<DiagonalTail>,
        rank_one: Vec<RankOneTerm>,
    ) -> Result<Self, ModelError> {
        let n = base.truncation();
        if let Some(e) = &a1_diagonal {
            if e.truncation() != n {
                return Err(ModelError::InvalidFamily(format!(
                    "a1 diagonal truncation {} differs from dim {n}",
                    e.truncation()
                )));
            }
        }
        for (i, term) in rank_one.iter().enumerate() {
            if term.vector.len() != n {
                return Err(ModelError::InvalidFamily(format!(
                    "rank-one vector #{i} has length {}, expected {n}",
                    term.vector.len()
                )));
            }
            if term.vector.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(ModelError::InvalidFamily(format!(
                    "rank-one vector #{i} has non-finite entries"
                )));
            }
        }
        Ok(Self {
            base,
            a1_diagonal,
            rank_one,
        })
    }

    pub fn dim(&self) -> usize {
        self.base.truncation()
    }

    pub fn base(&self) -> &DiagonalTail {
        &self.base
    }

    pub fn a1_diagonal(&self) -> Option<&DiagonalTail> {
        self.a1_diagonal.as_ref()
    }

    pub fn rank_one_terms(&self) -> &[RankOneTerm] {
        &self.rank_one
    }

    fn e(&self, k: usize) -> f64 {
        self.a1_diagonal.as_ref().map_or(0.0, |e| e.entry(k))
    }

    /// Diagonal of `A(t)` without the rank-one terms: `d_k + t e_k`.
    pub fn diagonal_at(&self, t: f64) -> Vec<f64> {
        (1..=self.dim()).map(|k| self.base.entry(k) + t * self.e(k)).collect()
    }

    pub fn evaluate(&self, t: f64) -> Result<HermitianMatrix, ModelError> {
        let mut m = HermitianMatrix::from_real_diagonal(&self.diagonal_at(t))?;
        for term in &self.rank_one {
            let c = term.sign.factor() * term.coupling.value(t);
            if c != 0.0 {
                m.add_rank_one(c, &term.vector)?;
            }
        }
        Ok(m)
    }

    /// `A′(t) = diag(e) + Σ sign·c′(t)·aa*`.
    pub fn derivative(&self, t: f64) -> Result<HermitianMatrix, ModelError> {
        let e: Vec<f64> = (1..=self.dim()).map(|k| self.e(k)).collect();
        let mut m = HermitianMatrix::from_real_diagonal(&e)?;
        for term in &self.rank_one {
            let c = term.sign.factor() * term.coupling.derivative(t);
            if c != 0.0 {
                m.add_rank_one(c, &term.vector)?;
            }
        }
        Ok(m)
    }

    /// The exact t-linear coefficient; errors when neither a diagonal
    /// t-linear part nor a coupling with `c′(0) ≠ 0` exists.
    pub fn a1(&self) -> Result<HermitianMatrix, ModelError> {
        let has_linear = self.a1_diagonal.is_some()
            || self.rank_one.iter().any(|r| r.coupling.derivative(0.0) != 0.0);
        if !has_linear {
            return Err(ModelError::NoFirstOrderTerm);
        }
        self.derivative(0.0)
    }

    /// Paired limit points of `(d_k, e_k)` over the tail `N/2 < k ≤ N`.
    /// Rank-one terms are compact and never enter.
    pub fn essential_points(&self) -> EssentialData {
        let n = self.dim();
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut unbounded: Vec<(f64, f64)> = Vec::new();
        let e_class = |k: usize| match &self.a1_diagonal {
            Some(e) => e.resolved_class(k),
            None => TailClass::Limit(0.0),
        };
        for k in (n / 2 + 1)..=n {
            match (self.base.resolved_class(k), e_class(k)) {
                (TailClass::Limit(x), TailClass::Limit(y)) => {
                    if !points
                        .iter()
                        .any(|&(px, py)| (px - x).abs() <= 1e-12 && (py - y).abs() <= 1e-12)
                    {
                        points.push((x, y));
                    }
                }
                (cx, cy) => {
                    let dx = match cx {
                        TailClass::Unbounded(s) => s,
                        _ => 0.0,
                    };
                    let dy = match cy {
                        TailClass::Unbounded(s) => s,
                        _ => 0.0,
                    };
                    if dx != 0.0 || dy != 0.0 {
                        let norm = dx.hypot(dy);
                        let dir = (dx / norm, dy / norm);
                        if !unbounded.contains(&dir) {
                            unbounded.push(dir);
                        }
                    }
                }
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        EssentialData { points, unbounded }
    }

    /// `min σ_e(A(t))`; `None` when the essential data has no finite points.
    pub fn sigma(&self, t: f64) -> Option<f64> {
        self.essential_points().sigma(t)
    }

    /// The same family restricted to the leading `n` coordinates.
    pub fn truncated(&self, n: usize) -> Result<Self, ModelError> {
        let base = self.base.retruncated(n)?;
        let a1_diagonal = match &self.a1_diagonal {
            Some(e) => Some(e.retruncated(n)?),
            None => None,
        };
        let rank_one = self
            .rank_one
            .iter()
            .map(|r| {
                let mut vector = r.vector.clone();
                vector.resize(n, Complex64::new(0.0, 0.0));
                RankOneTerm {
                    vector,
                    coupling: r.coupling.clone(),
                    sign: r.sign,
                }
            })
            .collect();
        Self::new(base, a1_diagonal, rank_one)
    }

    /// True for `H − t·aa*` with a single linear coupling and no diagonal
    /// t-linear part: the minimal eigenvalue then solves a secular equation.
    pub fn is_diagonal_minus_rank_one(&self) -> bool {
        self.a1_diagonal.is_none()
            && self.rank_one.len() == 1
            && self.rank_one[0].sign == Sign::Minus
            && self.rank_one[0].coupling.as_monomial() == Some(1)
    }
}

/// Dense polynomial family `A(t) = Σ tᵏ Aₖ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFamily {
    coefficients: Vec<HermitianMatrix>,
    radius: Option<f64>,
}

impl PolynomialFamily {
    pub fn new(coefficients: Vec<HermitianMatrix>, radius: Option<f64>) -> Result<Self, ModelError> {
        let first = coefficients
            .first()
            .ok_or_else(|| ModelError::InvalidFamily("at least A0 is required".into()))?;
        let n = first.dim();
        for (k, c) in coefficients.iter().enumerate() {
            if c.dim() != n {
                return Err(ModelError::InvalidFamily(format!(
                    "coefficient A{k} has dim {}, expected {n}",
                    c.dim()
                )));
            }
        }
        if let Some(r) = radius {
            if !(r > 0.0) {
                return Err(ModelError::InvalidFamily(format!("radius {r} must be positive")));
            }
        }
        Ok(Self {
            coefficients,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.coefficients[0].dim()
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[HermitianMatrix] {
        &self.coefficients
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    fn check_range(&self, t: f64) -> Result<(), ModelError> {
        match self.radius {
            Some(radius) if t.abs() >= radius => Err(ModelError::OutOfRange { t, radius }),
            _ => Ok(()),
        }
    }

    /// Horner evaluation.
    pub fn evaluate(&self, t: f64) -> Result<HermitianMatrix, ModelError> {
        self.check_range(t)?;
        let mut acc = self.coefficients[self.degree()].clone();
        for c in self.coefficients.iter().rev().skip(1) {
            acc = acc.scaled(t);
            acc.add_scaled(1.0, c)?;
        }
        Ok(acc)
    }

    /// `A′(t) = Σ k tᵏ⁻¹ Aₖ`.
    pub fn derivative(&self, t: f64) -> Result<HermitianMatrix, ModelError> {
        self.check_range(t)?;
        let mut acc = HermitianMatrix::zeros(self.dim());
        for k in (1..=self.degree()).rev() {
            acc = acc.scaled(t);
            acc.add_scaled(k as f64, &self.coefficients[k])?;
        }
        Ok(acc)
    }

    pub fn a1(&self) -> Result<HermitianMatrix, ModelError> {
        self.coefficients
            .get(1)
            .cloned()
            .ok_or(ModelError::NoFirstOrderTerm)
    }

    /// Coefficient-wise sum; the shorter family is padded with zeros.
    pub fn try_add(&self, other: &Self) -> Result<Self, ModelError> {
        if self.dim() != other.dim() {
            return Err(ModelError::InvalidFamily("dimension mismatch".into()));
        }
        let len = self.coefficients.len().max(other.coefficients.len());
        let zero = HermitianMatrix::zeros(self.dim());
        let coefficients = (0..len)
            .map(|k| {
                let a = self.coefficients.get(k).unwrap_or(&zero);
                let b = other.coefficients.get(k).unwrap_or(&zero);
                a.try_add(b)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let radius = match (self.radius, other.radius) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Self::new(coefficients, radius)
    }
}

/// Either representation of an analytic family.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Polynomial(PolynomialFamily),
    Structured(StructuredFamily),
}

impl Family {
    pub fn dim(&self) -> usize {
        match self {
            Family::Polynomial(p) => p.dim(),
            Family::Structured(s) => s.dim(),
        }
    }

    pub fn evaluate(&self, t: f64) -> Result<HermitianMatrix, ModelError> {
        match self {
            Family::Polynomial(p) => p.evaluate(t),
            Family::Structured(s) => s.evaluate(t),
        }
    }

    pub fn derivative(&self, t: f64) -> Result<HermitianMatrix, ModelError> {
        match self {
            Family::Polynomial(p) => p.derivative(t),
            Family::Structured(s) => s.derivative(t),
        }
    }

    /// The t-linear coefficient `A₁`.
    pub fn a1(&self) -> Result<HermitianMatrix, ModelError> {
        match self {
            Family::Polynomial(p) => p.a1(),
            Family::Structured(s) => s.a1(),
        }
    }

    pub fn as_structured(&self) -> Option<&StructuredFamily> {
        match self {
            Family::Structured(s) => Some(s),
            Family::Polynomial(_) => None,
        }
    }

    /// `min σ_e(A(t))` when the family carries tail data.
    pub fn sigma(&self, t: f64) -> Option<f64> {
        self.as_structured().and_then(|s| s.sigma(t))
    }
}

impl From<PolynomialFamily> for Family {
    fn from(p: PolynomialFamily) -> Self {
        Family::Polynomial(p)
    }
}

impl From<StructuredFamily> for Family {
    fn from(s: StructuredFamily) -> Self {
        Family::Structured(s)
    }
}

/// Dense column vector from a real slice.
pub fn real_vector(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp_tail(n: usize) -> DiagonalTail {
        DiagonalTail::new(DiagonalRule::ExpNegK, vec![0.0], Some(vec![0.0]), n, DEFAULT_TAIL_TOL)
            .unwrap()
    }

    fn unit(n: usize, k: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[k] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn constant_polynomial_family() {
        let a0 = HermitianMatrix::from_real_diagonal(&[1.0, 2.0]).unwrap();
        let f = PolynomialFamily::new(vec![a0.clone()], None).unwrap();
        assert_eq!(f.evaluate(5.0).unwrap(), a0);
    }

    #[test]
    fn radius_is_enforced() {
        let a0 = HermitianMatrix::from_real_diagonal(&[1.0]).unwrap();
        let f = PolynomialFamily::new(vec![a0], Some(0.5)).unwrap();
        assert!(matches!(f.evaluate(0.5), Err(ModelError::OutOfRange { .. })));
        assert!(f.evaluate(0.49).is_ok());
    }

    #[test]
    fn structured_direct_construction() {
        let n = 6;
        let f = StructuredFamily::new(
            exp_tail(n),
            None,
            vec![RankOneTerm {
                vector: unit(n, 0),
                coupling: Coupling::monomial(1),
                sign: Sign::Minus,
            }],
        )
        .unwrap();
        let m = f.evaluate(0.3).unwrap();
        let mut expected = vec![0.0];
        expected.extend((2..=n).map(|k| (-(k as f64)).exp()));
        expected[0] -= 0.3;
        let want = HermitianMatrix::from_real_diagonal(&expected).unwrap();
        assert!((m.as_matrix() - want.as_matrix()).norm() < 1e-16);
    }

    #[test]
    fn essential_points_examples() {
        let f = StructuredFamily::new(exp_tail(40), None, vec![]).unwrap();
        assert_eq!(f.essential_points().points, vec![(0.0, 0.0)]);

        let d = DiagonalTail::from_rule(DiagonalRule::Reciprocal { scale: 1.0 }, vec![], 40).unwrap();
        let e = DiagonalTail::from_rule(DiagonalRule::Constant(1.0), vec![], 40).unwrap();
        let f = StructuredFamily::new(d, Some(e), vec![]).unwrap();
        assert_eq!(f.essential_points().points, vec![(0.0, 1.0)]);

        let alt = DiagonalRule::Interleave {
            odd: Box::new(DiagonalRule::ExpNegK),
            even: Box::new(DiagonalRule::Geometric { scale: 1.0, ratio: 1.0 }),
        };
        let d = DiagonalTail::from_rule(alt, vec![], 40).unwrap();
        let f = StructuredFamily::new(d, None, vec![]).unwrap();
        assert_eq!(f.essential_points().points, vec![(0.0, 0.0), (1.0, 0.0)]);
    }

    #[test]
    fn rank_one_terms_do_not_move_essential_data() {
        let n = 30;
        let plain = StructuredFamily::new(exp_tail(n), None, vec![]).unwrap();
        let with = StructuredFamily::new(
            exp_tail(n),
            None,
            vec![RankOneTerm {
                vector: real_vector(&vec![0.3; n]),
                coupling: Coupling::new(vec![1.0, -2.0, 0.5]).unwrap(),
                sign: Sign::Plus,
            }],
        )
        .unwrap();
        assert_eq!(plain.essential_points(), with.essential_points());
    }

    #[test]
    fn a1_of_structured_families() {
        let n = 5;
        let a = real_vector(&[1.0, 0.0, 2.0, 0.0, 0.0]);
        let f = StructuredFamily::new(
            exp_tail(n),
            None,
            vec![RankOneTerm {
                vector: a.clone(),
                coupling: Coupling::monomial(1),
                sign: Sign::Minus,
            }],
        )
        .unwrap();
        let mut want = HermitianMatrix::zeros(n);
        want.add_rank_one(-1.0, &a).unwrap();
        assert_eq!(f.a1().unwrap(), want);

        let quad = StructuredFamily::new(
            exp_tail(n),
            None,
            vec![RankOneTerm {
                vector: a,
                coupling: Coupling::monomial(2),
                sign: Sign::Minus,
            }],
        )
        .unwrap();
        assert_eq!(quad.a1(), Err(ModelError::NoFirstOrderTerm));
    }

    #[test]
    fn degree_zero_polynomial_has_no_a1() {
        let f = PolynomialFamily::new(vec![HermitianMatrix::zeros(2)], None).unwrap();
        assert_eq!(f.a1(), Err(ModelError::NoFirstOrderTerm));
    }

    #[test]
    fn list_tail_must_approach_declared_points() {
        let mut values = vec![5.0; 10];
        values[8] = 0.5;
        let err = DiagonalTail::new(
            DiagonalRule::List(values),
            vec![],
            Some(vec![5.0]),
            10,
            DEFAULT_TAIL_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Tail { index: 9, .. }));
    }

    #[test]
    fn declared_points_must_match_rule() {
        let err = DiagonalTail::new(
            DiagonalRule::ExpNegK,
            vec![],
            Some(vec![1.0]),
            20,
            DEFAULT_TAIL_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Tail { .. }));
    }

    #[test]
    fn underflow_is_flushed_and_recorded() {
        let t = DiagonalTail::from_rule(DiagonalRule::ExpNegK, vec![0.0], 800).unwrap();
        assert_eq!(t.entry(690), (-690.0f64).exp());
        assert_eq!(t.entry(700), 0.0);
        assert_eq!(t.flushed_indices().first(), Some(&691));
    }

    #[test]
    fn evaluate_is_linear_in_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = PolynomialFamily::new(
            (0..3).map(|_| random_hermitian(&mut rng, 4)).collect(),
            None,
        )
        .unwrap();
        let g = PolynomialFamily::new(
            (0..2).map(|_| random_hermitian(&mut rng, 4)).collect(),
            None,
        )
        .unwrap();
        let sum = f.try_add(&g).unwrap();
        for t in [-0.7, 0.0, 0.3, 1.9] {
            let lhs = sum.evaluate(t).unwrap();
            let rhs = f.evaluate(t).unwrap().try_add(&g.evaluate(t).unwrap()).unwrap();
            assert!((lhs.as_matrix() - rhs.as_matrix()).norm() <= 1e-13 * rhs.scale().max(1.0));
        }
    }

    #[test]
    fn central_difference_converges_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = PolynomialFamily::new(
            (0..4).map(|_| random_hermitian(&mut rng, 5)).collect(),
            None,
        )
        .unwrap();
        let exact = f.a1().unwrap();
        let mut errors = Vec::new();
        let mut h = 0.1;
        for _ in 0..5 {
            let fd = (f.evaluate(h).unwrap().as_matrix() - f.evaluate(-h).unwrap().as_matrix())
                / Complex64::new(2.0 * h, 0.0);
            errors.push((fd - exact.as_matrix()).norm());
            h /= 2.0;
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio} errors {errors:?}");
        }
    }

    #[test]
    fn coupling_arithmetic() {
        let c = Coupling::new(vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(c.value(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(c.derivative(2.0), -2.0 + 12.0);
        assert_eq!(Coupling::monomial(2).as_monomial(), Some(2));
        assert_eq!(c.as_monomial(), None);
    }

    #[test]
    fn unbounded_rules_report_directions() {
        let d = DiagonalTail::from_rule(DiagonalRule::Linear { slope: 1.0 }, vec![], 20).unwrap();
        let f = StructuredFamily::new(d, None, vec![]).unwrap();
        let data = f.essential_points();
        assert!(data.points.is_empty());
        assert_eq!(data.unbounded, vec![(1.0, 0.0)]);
        assert_eq!(f.sigma(0.5), None);
    }
}
