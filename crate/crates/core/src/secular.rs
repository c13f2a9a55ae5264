//! Minimal eigenvalue of `diag(d) − t·aa*` through the secular function
//! `f(λ) = Σ w_k / (d_k − λ)` with `w_k = |a_k|²`, and the sign-crossing
//! machinery for the two interleaved weight models `a` and `b`.

use std::io::Write;

use crate::model::{ModelError, StructuredFamily, UNDERFLOW_FLUSH};
use crate::numeric::{fmt_f64, CompensatedSum};

/// Largest scan parameter with `e^{−m²} ≥ 1e-300`.
pub const MAX_PROBE_M: u32 = 26;
/// Weight truncation used by the presets: large enough that the omitted
/// tail (`≈ 4^{−24}`) stays below the slack of every probe bound.
pub const DEFAULT_N_MAX: u32 = 24;
/// Relative width at which bisection hands over to Newton.
const BISECT_WIDTH: f64 = 1e-3;
const NEWTON_MAX_ITER: usize = 200;
const LOCATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SecularError {
    #[error("lambda {lambda} is not below min(d) = {min_d}")]
    Domain { lambda: f64, min_d: f64 },
    #[error("invalid secular model: {0}")]
    InvalidModel(String),
    #[error("coupling t = {0} must be positive and finite")]
    InvalidCoupling(f64),
    #[error("root is not bracketed on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("probe m = {m} is outside the representable range (odd, 5 ≤ m ≤ 26)")]
    ProbeRange { m: u32 },
    #[error("n_max must be between 1 and 62, got {0}")]
    NMax(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `diag(d) − t·aa*` in secular form. Weights are stored sparsely as
/// `(index, w)` pairs with 0-based indices in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularModel {
    d: Vec<f64>,
    weights: Vec<(usize, f64)>,
    min_d: f64,
}

impl SecularModel {
    /// Dense constructor; zero weights are dropped.
    pub fn new(d: Vec<f64>, w: Vec<f64>) -> Result<Self, SecularError> {
        if d.len() != w.len() {
            return Err(SecularError::InvalidModel(format!(
                "d has length {}, w has length {}",
                d.len(),
                w.len()
            )));
        }
        let weights = w
            .into_iter()
            .enumerate()
            .filter(|&(_, wk)| wk != 0.0)
            .collect();
        Self::from_sparse(d, weights)
    }

    pub fn from_sparse(d: Vec<f64>, mut weights: Vec<(usize, f64)>) -> Result<Self, SecularError> {
        if d.is_empty() {
            return Err(SecularError::InvalidModel("empty diagonal".into()));
        }
        if let Some(k) = d.iter().position(|v| !v.is_finite()) {
            return Err(SecularError::InvalidModel(format!("d[{k}] is not finite")));
        }
        weights.sort_by_key(|&(k, _)| k);
        for w in weights.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SecularError::InvalidModel(format!("duplicate weight index {}", w[0].0)));
            }
        }
        for &(k, wk) in &weights {
            if k >= d.len() {
                return Err(SecularError::InvalidModel(format!("weight index {k} out of range")));
            }
            if !(wk >= 0.0 && wk.is_finite()) {
                return Err(SecularError::InvalidModel(format!("weight {k} must be finite and ≥ 0")));
            }
        }
        weights.retain(|&(_, wk)| wk > 0.0);
        if weights.is_empty() {
            return Err(SecularError::InvalidModel("all weights vanish".into()));
        }
        let min_d = d.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { d, weights, min_d })
    }

    /// `H − t·aa*` family with a single linear coupling.
    pub fn from_family(family: &StructuredFamily) -> Result<Self, SecularError> {
        if !family.is_diagonal_minus_rank_one() {
            return Err(SecularError::InvalidModel(
                "family is not of the form diag(d) − t·aa*".into(),
            ));
        }
        let a = &family.rank_one_terms()[0].vector;
        let weights = a
            .iter()
            .enumerate()
            .map(|(k, z)| (k, z.norm_sqr()))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        Self::from_sparse(family.diagonal_at(0.0), weights)
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn min_d(&self) -> f64 {
        self.min_d
    }

    pub fn sparse_weights(&self) -> &[(usize, f64)] {
        &self.weights
    }

    /// Dense weight vector.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.d.len()];
        for &(k, wk) in &self.weights {
            w[k] = wk;
        }
        w
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().map(|&(_, w)| w).collect::<CompensatedSum>().value()
    }

    /// Weight sitting on the smallest diagonal entry (summed over ties).
    pub fn weight_at_min(&self) -> f64 {
        self.weights
            .iter()
            .filter(|&&(k, _)| self.d[k] == self.min_d)
            .map(|&(_, w)| w)
            .sum()
    }

    /// Same diagonal, weights multiplied by `s`.
    pub fn scaled_weights(&self, s: f64) -> Result<Self, SecularError> {
        Self::from_sparse(
            self.d.clone(),
            self.weights.iter().map(|&(k, w)| (k, w * s)).collect(),
        )
    }

    fn check_domain(&self, lambda: f64) -> Result<(), SecularError> {
        if lambda < self.min_d {
            Ok(())
        } else {
            Err(SecularError::Domain {
                lambda,
                min_d: self.min_d,
            })
        }
    }

    /// `f(λ) = Σ w_k/(d_k − λ)`, ascending `k`, compensated.
    pub fn f_eval(&self, lambda: f64) -> Result<f64, SecularError> {
        self.check_domain(lambda)?;
        Ok(self
            .weights
            .iter()
            .map(|&(k, w)| w / (self.d[k] - lambda))
            .collect::<CompensatedSum>()
            .value())
    }

    /// `f′(λ) = Σ w_k/(d_k − λ)²`.
    pub fn f_prime(&self, lambda: f64) -> Result<f64, SecularError> {
        self.check_domain(lambda)?;
        Ok(self
            .weights
            .iter()
            .map(|&(k, w)| {
                let r = self.d[k] - lambda;
                w / (r * r)
            })
            .collect::<CompensatedSum>()
            .value())
    }

    /// The unique `λ < min(d)` with `f(λ) = 1/t`: the minimal eigenvalue of
    /// `diag(d) − t·aa*`.
    pub fn lambda_min(&self, t: f64) -> Result<f64, SecularError> {
        self.solve(t).map(|r| r.lambda)
    }

    pub fn solve(&self, t: f64) -> Result<SecularRoot, SecularError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(SecularError::InvalidCoupling(t));
        }
        let w0 = self.weight_at_min();
        if w0 <= 0.0 {
            return Err(SecularError::InvalidModel(
                "no weight on the smallest diagonal entry; the root is not guaranteed".into(),
            ));
        }
        let target = 1.0 / t;
        // f(δ − Wt) ≤ 1/t ≤ f(δ − w₀t)
        let mut lo = self.min_d - self.total_weight() * t;
        let mut hi = self.min_d - w0 * t;
        let f_lo = self.f_eval(lo)?;
        let f_hi = self.f_eval(hi)?;
        if f_lo > target * (1.0 + 1e-14) || f_hi < target * (1.0 - 1e-14) {
            return Err(SecularError::Bracket { lo, hi });
        }
        let mut iterations = 0;
        while (hi - lo) > BISECT_WIDTH * (hi - self.min_d).abs() {
            let mid = 0.5 * (lo + hi);
            if self.f_eval(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        // f is increasing and convex on (−∞, δ): Newton from the right end
        // decreases monotonically onto the root.
        let mut x = hi;
        for _ in 0..NEWTON_MAX_ITER {
            iterations += 1;
            let fx = self.f_eval(x)? - target;
            if fx == 0.0 {
                break;
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - fx / self.f_prime(x)?;
            if !(next >= lo && next <= hi) {
                next = 0.5 * (lo + hi);
            }
            let tiny = 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
            if (next - x).abs() <= tiny || hi - lo <= tiny {
                x = next;
                break;
            }
            x = next;
        }
        let residual = (self.f_eval(x)? - target).abs();
        Ok(SecularRoot {
            lambda: x,
            residual,
            iterations,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularRoot {
    pub lambda: f64,
    /// `|f(λ) − 1/t|`.
    pub residual: f64,
    pub iterations: usize,
}

/// The two interleaved weight sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example62Kind {
    A,
    B,
}

impl Example62Kind {
    pub fn name(self) -> &'static str {
        match self {
            Example62Kind::A => "a",
            Example62Kind::B => "b",
        }
    }
}

impl std::str::FromStr for Example62Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" => Ok(Example62Kind::A),
            "b" => Ok(Example62Kind::B),
            other => Err(format!("unknown weight kind `{other}`")),
        }
    }
}

/// Nonzero weights with 1-based index `k ≤ max_index`:
/// `a`: 1 at k=1, 3/4ⁿ at k=(4n)²;
/// `b`: 1 at k=1, 1/2 at k=2, 3/(2·4ⁿ) at k=(4n+2)².
pub fn example62_sparse_weights(kind: Example62Kind, max_index: usize) -> Vec<(usize, f64)> {
    let mut out = vec![(1, 1.0)];
    if kind == Example62Kind::B && max_index >= 2 {
        out.push((2, 0.5));
    }
    for n in 1.. {
        let k = match kind {
            Example62Kind::A => (4 * n) * (4 * n),
            Example62Kind::B => (4 * n + 2) * (4 * n + 2),
        };
        if k > max_index {
            break;
        }
        let w = match kind {
            Example62Kind::A => 3.0 * 0.25f64.powi(n as i32),
            Example62Kind::B => 1.5 * 0.25f64.powi(n as i32),
        };
        out.push((k, w));
    }
    out
}

/// `d₁ = 0`, `d_k = e^{−k}` for `k ≥ 2`, flushed below `1e-300`.
pub fn example62_diagonal(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            if k == 1 {
                0.0
            } else {
                let v = (-(k as f64)).exp();
                if v < UNDERFLOW_FLUSH {
                    0.0
                } else {
                    v
                }
            }
        })
        .collect()
}

/// Exact `Σ_{k≥2} w_k` of the truncated model as `(numerator, denominator)`
/// over the common denominator `2·4^{n_max}`.
pub fn example62_tail_sum_exact(kind: Example62Kind, n_max: u32) -> Result<(u128, u128), SecularError> {
    if !(1..=62).contains(&n_max) {
        return Err(SecularError::NMax(n_max));
    }
    let den = 2u128 << (2 * n_max);
    let mut num = match kind {
        Example62Kind::A => 0u128,
        Example62Kind::B => den / 2,
    };
    for n in 1..=n_max {
        let share = 1u128 << (2 * (n_max - n)); // 4^{n_max − n}
        num += match kind {
            Example62Kind::A => 6 * share,
            Example62Kind::B => 3 * share,
        };
    }
    Ok((num, den))
}

/// Model with the worked-example weights up to index `(4·n_max + 2)²`.
pub fn example62_weights(kind: Example62Kind, n_max: u32) -> Result<SecularModel, SecularError> {
    if !(1..=62).contains(&n_max) {
        return Err(SecularError::NMax(n_max));
    }
    let n = (4 * n_max as usize + 2).pow(2);
    let weights = example62_sparse_weights(kind, n)
        .into_iter()
        .map(|(k, w)| (k - 1, w))
        .collect();
    SecularModel::from_sparse(example62_diagonal(n), weights)
}

/// One probe of the crossing scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingProbe {
    pub m: u32,
    pub lambda: f64,
    pub f_a: f64,
    pub f_b: f64,
    /// Sign of `f_a − f_b`: −1, 0 or +1.
    pub sign: i8,
    pub bound_a_ok: bool,
    pub bound_b_ok: bool,
}

/// Evaluates `f_a − f_b` at `λ = −e^{−m²}` and checks the explicit bounds.
///
/// At `m = 4n+1`: `f_a < e^{m²}(1 + 2^{−m} + (1−2^{−m})4^{−n})` and
/// `f_b > e^{m²}(1 + (1−2^{−m})·2·4^{−n})`.
/// At `m = 4n+3` the roles swap:
/// `f_b < e^{m²}(1 + 2^{−m}(1 − 1/(2·4ⁿ)) + 1/(2·4ⁿ))` and
/// `f_a > e^{m²}(1 + (1−2^{−m})4^{−n})`.
pub fn crossing_scan(
    model_a: &SecularModel,
    model_b: &SecularModel,
    m_values: &[u32],
) -> Result<Vec<CrossingProbe>, SecularError> {
    m_values
        .iter()
        .map(|&m| {
            if m < 5 || m % 2 == 0 || m > MAX_PROBE_M {
                return Err(SecularError::ProbeRange { m });
            }
            let scale = ((m * m) as f64).exp();
            let lambda = -(-((m * m) as f64)).exp();
            let f_a = model_a.f_eval(lambda)?;
            let f_b = model_b.f_eval(lambda)?;
            let g = f_a - f_b;
            let sign = if g > 0.0 {
                1
            } else if g < 0.0 {
                -1
            } else {
                0
            };
            let two_m = 0.5f64.powi(m as i32);
            let n = (m / 4) as i32;
            let four_n = 0.25f64.powi(n);
            let (bound_a_ok, bound_b_ok) = if m % 4 == 1 {
                (
                    f_a < scale * (1.0 + two_m + (1.0 - two_m) * four_n),
                    f_b > scale * (1.0 + (1.0 - two_m) * 2.0 * four_n),
                )
            } else {
                let half = 0.5 * four_n;
                (
                    f_a > scale * (1.0 + (1.0 - two_m) * four_n),
                    f_b < scale * (1.0 + two_m * (1.0 - half) + half),
                )
            };
            Ok(CrossingProbe {
                m,
                lambda,
                f_a,
                f_b,
                sign,
                bound_a_ok,
                bound_b_ok,
            })
        })
        .collect()
}

pub fn write_scan_csv<W: Write>(probes: &[CrossingProbe], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "lambda_probe", "f_a", "f_b", "sign", "bound_a_ok", "bound_b_ok"])?;
    for p in probes {
        w.write_record([
            p.m.to_string(),
            fmt_f64(p.lambda),
            fmt_f64(p.f_a),
            fmt_f64(p.f_b),
            p.sign.to_string(),
            p.bound_a_ok.to_string(),
            p.bound_b_ok.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A located crossing of the two minimal-eigenvalue curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingLocation {
    pub lambda_star: f64,
    pub t_star: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// `|λ_a(t*) − λ_b(t*)| / |λ*|`.
    pub agreement: f64,
}

/// Bisection for a root of `f_a − f_b` on a bracket of negative λ values,
/// carried out in `ln(−λ)` so the relative tolerance is uniform.
pub fn crossing_locate(
    model_a: &SecularModel,
    model_b: &SecularModel,
    bracket: (f64, f64),
) -> Result<CrossingLocation, SecularError> {
    let (l1, l2) = bracket;
    let bound = model_a.min_d().min(model_b.min_d());
    if !(l1 < bound && l2 < bound && l1 < 0.0 && l2 < 0.0) {
        return Err(SecularError::Bracket { lo: l1, hi: l2 });
    }
    let g = |x: f64| -> Result<f64, SecularError> {
        let lambda = -(-x).exp();
        Ok(model_a.f_eval(lambda)? - model_b.f_eval(lambda)?)
    };
    let mut xa = -(-l1).ln();
    let mut xb = -(-l2).ln();
    if xa > xb {
        std::mem::swap(&mut xa, &mut xb);
    }
    let ga = g(xa)?;
    let gb = g(xb)?;
    if ga == 0.0 || gb == 0.0 || ga.signum() == gb.signum() {
        return Err(SecularError::Bracket { lo: l1, hi: l2 });
    }
    let positive_left = ga > 0.0;
    while xb - xa > LOCATE_TOL {
        let mid = 0.5 * (xa + xb);
        let gm = g(mid)?;
        if gm == 0.0 {
            xa = mid;
            xb = mid;
            break;
        }
        if (gm > 0.0) == positive_left {
            xa = mid;
        } else {
            xb = mid;
        }
    }
    let lambda_star = -(-0.5 * (xa + xb)).exp();
    let t_star = 1.0 / model_a.f_eval(lambda_star)?;
    let lambda_a = model_a.lambda_min(t_star)?;
    let lambda_b = model_b.lambda_min(t_star)?;
    Ok(CrossingLocation {
        lambda_star,
        t_star,
        lambda_a,
        lambda_b,
        agreement: (lambda_a - lambda_b).abs() / lambda_star.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, HermitianMatrix};
    use crate::model::real_vector;

    fn dense_min(model: &SecularModel, t: f64) -> Vec<f64> {
        let mut m = HermitianMatrix::from_real_diagonal(model.d()).unwrap();
        let a: Vec<f64> = model.weights().iter().map(|w| w.sqrt()).collect();
        m.add_rank_one(-t, &real_vector(&a)).unwrap();
        hermitian_eigenvalues(&m).unwrap()
    }

    fn truncated_a(n: usize) -> SecularModel {
        let w = example62_sparse_weights(Example62Kind::A, n)
            .into_iter()
            .map(|(k, w)| (k - 1, w))
            .collect();
        SecularModel::from_sparse(example62_diagonal(n), w).unwrap()
    }

    #[test]
    fn f_eval_small_examples() {
        let m = SecularModel::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(m.f_eval(-0.5).unwrap(), 2.0);
        let m = SecularModel::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(m.f_eval(-1.0).unwrap(), 1.5);
        assert!(matches!(m.f_eval(0.0), Err(SecularError::Domain { .. })));
    }

    #[test]
    fn f_eval_matches_extended_precision() {
        let a = example62_weights(Example62Kind::A, DEFAULT_N_MAX).unwrap();
        let v = a.f_eval(-(-25.0f64).exp()).unwrap();
        // 60-digit reference
        let want = 90012787932.2490857073304;
        assert!(v > 25.0f64.exp());
        assert!(((v - want) / want).abs() < 1e-14, "{v}");
    }

    #[test]
    fn single_term_root_is_exact() {
        let m = SecularModel::new(vec![0.0], vec![1.0]).unwrap();
        for t in [1e-8, 0.3, 2.0] {
            assert!((m.lambda_min(t).unwrap() + t).abs() <= 1e-15 * t);
        }
    }

    #[test]
    fn weights_match_definitions() {
        let a = example62_weights(Example62Kind::A, 2).unwrap();
        assert_eq!(a.sparse_weights(), &[(0, 1.0), (15, 0.75), (63, 0.1875)]);
        let b = example62_weights(Example62Kind::B, 1).unwrap();
        assert_eq!(b.sparse_weights(), &[(0, 1.0), (1, 0.5), (35, 0.375)]);
        assert_eq!(b.len(), 36);
    }

    #[test]
    fn partial_sums_are_exact() {
        for n_max in 1..=30 {
            let (num, den) = example62_tail_sum_exact(Example62Kind::A, n_max).unwrap();
            assert_eq!(den - num, 2, "a tail at n_max {n_max}");
            let (num, den) = example62_tail_sum_exact(Example62Kind::B, n_max).unwrap();
            assert_eq!(den - num, 1, "b tail at n_max {n_max}");
        }
        let a = example62_weights(Example62Kind::A, 20).unwrap();
        assert!((a.total_weight() - 2.0).abs() < 1e-11);
    }

    #[test]
    fn dense_oracle_at_n200() {
        let model = truncated_a(200);
        for t in [1e-3, 1e-2, 0.1, 0.5] {
            let lam = model.lambda_min(t).unwrap();
            let eig = dense_min(&model, t);
            assert!(((lam - eig[0]) / eig[0]).abs() <= 1e-10, "t={t}: {lam} vs {}", eig[0]);
            let root = model.solve(t).unwrap();
            assert!(root.residual <= 1e-12 / t);
        }
    }

    #[test]
    fn slope_tends_to_minus_leading_weight() {
        let model = truncated_a(400);
        // |λ| must sit far below e^{-400} for the leading weight to dominate
        let t = 1e-200;
        let ratio = model.lambda_min(t).unwrap() / t;
        assert!((ratio + 1.0).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn scan_signs_alternate() {
        let a = example62_weights(Example62Kind::A, DEFAULT_N_MAX).unwrap();
        let b = example62_weights(Example62Kind::B, DEFAULT_N_MAX).unwrap();
        let probes = crossing_scan(&a, &b, &[5, 7, 9, 11, 13]).unwrap();
        let signs: Vec<i8> = probes.iter().map(|p| p.sign).collect();
        assert_eq!(signs, vec![-1, 1, -1, 1, -1]);
        assert!(probes.iter().all(|p| p.bound_a_ok && p.bound_b_ok));
        assert!(matches!(
            crossing_scan(&a, &b, &[27]),
            Err(SecularError::ProbeRange { m: 27 })
        ));
    }

    #[test]
    fn crossings_match_reference() {
        let a = example62_weights(Example62Kind::A, DEFAULT_N_MAX).unwrap();
        let b = example62_weights(Example62Kind::B, DEFAULT_N_MAX).unwrap();
        let refs = [
            ((-25.0f64, -49.0f64), -1.1597614258751545453e-16, 9.2780914012661157481e-17),
            ((-49.0, -81.0), -8.0190544527684738954e-29, 7.1280484024600557791e-29),
        ];
        for ((lo, hi), lam, t) in refs {
            let c = crossing_locate(&a, &b, (-lo.exp(), -hi.exp())).unwrap();
            assert!(((c.lambda_star - lam) / lam).abs() < 1e-9, "{c:?}");
            assert!(((c.t_star - t) / t).abs() < 1e-9, "{c:?}");
            assert!(c.agreement <= 1e-10, "{c:?}");
        }
        let err = crossing_locate(&a, &b, (-(-23.0f64).exp(), -(-24.0f64).exp()));
        assert!(matches!(err, Err(SecularError::Bracket { .. })));
    }

    #[test]
    fn scan_csv_header() {
        let a = example62_weights(Example62Kind::A, 4).unwrap();
        let b = example62_weights(Example62Kind::B, 4).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&crossing_scan(&a, &b, &[5]).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("m,lambda_probe,f_a,f_b,sign,bound_a_ok,bound_b_ok\n5,"));
    }
}
