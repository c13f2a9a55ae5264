use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use essential_absorption::casebook::{volterra_matrix, volterra_theta};
use essential_absorption::document::{parse_family, serialize_family};
use essential_absorption::linalg::{hermitian_eigenvalues, ComplexMatrix, HermitianMatrix};
use essential_absorption::model::{
    Coupling, DiagonalRule, DiagonalTail, Family, PolynomialFamily, RankOneTerm, Sign, StructuredFamily,
};
use essential_absorption::numrange::numerical_range_boundary;
use essential_absorption::perturbation::{b0_compression, estimate_slope, kernel_projection};
use essential_absorption::sampling::{random_hermitian, random_unitary};
use essential_absorption::secular::SecularModel;

fn secular_model() -> impl Strategy<Value = SecularModel> {
    prop::collection::vec((0.0f64..10.0, 0.01f64..5.0), 1..12).prop_map(|pairs| {
        let (d, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        SecularModel::new(d, w).unwrap()
    })
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

fn hermitian(seed: u64, n: usize) -> HermitianMatrix {
    random_hermitian(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

fn conjugate(u: &DMatrix<Complex64>, h: &HermitianMatrix) -> HermitianMatrix {
    let m = u * h.as_matrix() * u.adjoint();
    HermitianMatrix::new(ComplexMatrix::from_dmatrix(m).unwrap()).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn secular_function_increases_below_the_diagonal(model in secular_model(), a in 0.01f64..5.0, b in 0.01f64..5.0) {
        let lo = model.min_d() - a - b;
        let hi = model.min_d() - a.min(b);
        prop_assert!(model.f_eval(lo).unwrap() < model.f_eval(hi).unwrap());
        prop_assert!(model.f_prime(hi).unwrap() > 0.0);
    }

    #[test]
    fn secular_weight_scaling_rescales_coupling(model in secular_model(), s in 0.1f64..10.0, t in 0.01f64..10.0) {
        let scaled = model.scaled_weights(s).unwrap();
        let l1 = scaled.lambda_min(t).unwrap();
        let l2 = model.lambda_min(s * t).unwrap();
        prop_assert!((l1 - l2).abs() <= 1e-10 * (1.0 + l2.abs()), "{l1} vs {l2}");
    }

    #[test]
    fn secular_root_matches_dense_minimum(model in secular_model(), t in 0.01f64..5.0) {
        let n = model.len();
        let w = model.weights();
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(model.d()));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] -= t * (w[i] * w[j]).sqrt();
            }
        }
        let dense = hermitian_eigenvalues(&HermitianMatrix::from_real_symmetric(&m).unwrap()).unwrap()[0];
        let root = model.lambda_min(t).unwrap();
        prop_assert!((dense - root).abs() <= 1e-9 * (1.0 + m.norm()), "{dense} vs {root}");
    }

    #[test]
    fn eigenvalues_invariant_under_permutation(m in symmetric(6), perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let p = DMatrix::from_fn(6, 6, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
        let pm = &p * &m * p.transpose();
        let a = hermitian_eigenvalues(&HermitianMatrix::from_real_symmetric(&m).unwrap()).unwrap();
        let b = hermitian_eigenvalues(&HermitianMatrix::from_real_symmetric(&pm).unwrap()).unwrap();
        prop_assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn compression_is_basis_independent(seed in any::<u64>(), kdim in 1usize..4, n in 4usize..8) {
        let mut diag = vec![0.0; kdim];
        diag.extend((kdim..n).map(|k| 1.0 + k as f64));
        let a0 = HermitianMatrix::from_real_diagonal(&diag).unwrap();
        let a1 = hermitian(seed, n);
        let u = random_unitary(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a), n);

        let p = kernel_projection(&a0, 0.0, 1e-8).unwrap();
        let pu = kernel_projection(&conjugate(&u, &a0), 0.0, 1e-8).unwrap();
        prop_assert_eq!(p.dim(), kdim);
        prop_assert_eq!(pu.dim(), kdim);
        let mu = b0_compression(&p, &a1).unwrap().mu;
        let mu_u = b0_compression(&pu, &conjugate(&u, &a1)).unwrap().mu;
        prop_assert!(close(&mu, &mu_u, 1e-9), "{mu:?} vs {mu_u:?}");
    }

    #[test]
    fn polynomial_evaluation_is_linear_in_coefficients(seed in any::<u64>(), t in -2.0f64..2.0) {
        let c: Vec<HermitianMatrix> = (0..3).map(|i| hermitian(seed.wrapping_add(i), 4)).collect();
        let fam = PolynomialFamily::new(c.clone(), None).unwrap();
        let got = fam.evaluate(t).unwrap();
        let want = c[0].as_matrix() + c[1].as_matrix() * Complex64::from(t) + c[2].as_matrix() * Complex64::from(t * t);
        prop_assert!((got.as_matrix() - want).norm() <= 1e-12 * (1.0 + got.scale()));
    }

    #[test]
    fn rank_one_terms_do_not_move_essential_points(
        n in 8usize..40,
        v in prop::collection::vec(-3.0f64..3.0, 40),
        power in 0usize..3,
    ) {
        let base = DiagonalTail::from_rule(
            DiagonalRule::Interleave {
                odd: Box::new(DiagonalRule::Reciprocal { scale: 1.0 }),
                even: Box::new(DiagonalRule::Constant(2.0)),
            },
            vec![],
            n,
        ).unwrap();
        let e = DiagonalTail::from_rule(DiagonalRule::Constant(-1.0), vec![], n).unwrap();
        let plain = StructuredFamily::new(base.clone(), Some(e.clone()), vec![]).unwrap();
        let term = RankOneTerm {
            vector: v[..n].iter().map(|&x| Complex64::from(x)).collect(),
            coupling: Coupling::monomial(power),
            sign: Sign::Minus,
        };
        let perturbed = StructuredFamily::new(base, Some(e), vec![term]).unwrap();
        prop_assert_eq!(plain.essential_points(), perturbed.essential_points());
    }

    #[test]
    fn rotated_real_part_is_linear_in_the_angle(seed in any::<u64>(), theta in -4.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = essential_absorption::sampling::random_matrix(&mut rng, 5);
        let r = t.rotated_real_part(theta).unwrap();
        let want = t.real_part().unwrap().as_matrix() * Complex64::from(theta.cos())
            + t.imag_part().unwrap().as_matrix() * Complex64::from(theta.sin());
        prop_assert!((r.as_matrix() - want).norm() <= 1e-12 * (1.0 + t.scale()));
    }

    #[test]
    fn slope_is_exact_on_quadratic_branches(beta in -5.0f64..5.0, c in -5.0f64..5.0, sigma in -1.0f64..1.0) {
        let pts: Vec<(f64, f64)> = essential_absorption::numeric::logspace(1e-6, 1e-2, 24)
            .into_iter()
            .map(|s| (s, sigma + beta * s + c * s * s))
            .collect();
        let est = estimate_slope(&pts, 0.0, sigma).unwrap();
        prop_assert!((est.beta - beta).abs() <= 1e-8 * (1.0 + beta.abs() + c.abs()), "{} vs {beta}", est.beta);
    }

    #[test]
    fn volterra_half_turn_negates(theta in -3.0f64..3.0, n in 8usize..40) {
        let disc = volterra_matrix(n).unwrap();
        let a = volterra_theta(&disc, theta);
        let b = volterra_theta(&disc, theta + std::f64::consts::PI);
        prop_assert!((a.as_matrix() + b.as_matrix()).norm() <= 1e-12 * (1.0 + a.scale()));
    }

    #[test]
    fn polynomial_documents_round_trip(seed in any::<u64>(), degree in 0usize..3, radius in prop::option::of(0.1f64..10.0)) {
        let c: Vec<HermitianMatrix> = (0..=degree as u64).map(|i| hermitian(seed.wrapping_add(i), 3)).collect();
        let fam = Family::from(PolynomialFamily::new(c, radius).unwrap());
        let back = parse_family(&serialize_family(&fam)).unwrap();
        prop_assert_eq!(back, fam);
    }

    #[test]
    fn structured_documents_round_trip(
        n in 4usize..30,
        scale in 0.1f64..4.0,
        v in prop::collection::vec(-2.0f64..2.0, 30),
        sparse in any::<bool>(),
    ) {
        let base = DiagonalTail::from_rule(DiagonalRule::Reciprocal { scale }, vec![], n).unwrap();
        let vector: Vec<Complex64> = (0..n)
            .map(|k| if sparse && k > 1 { Complex64::from(0.0) } else { Complex64::new(v[k], v[29 - k]) })
            .collect();
        let term = RankOneTerm { vector, coupling: Coupling::monomial(1), sign: Sign::Minus };
        let fam = Family::from(StructuredFamily::new(base, None, vec![term]).unwrap());
        let back = parse_family(&serialize_family(&fam)).unwrap();
        prop_assert_eq!(back, fam);
    }

    #[test]
    fn hermitian_numerical_range_is_the_spectral_segment(m in symmetric(5)) {
        let h = HermitianMatrix::from_real_symmetric(&m).unwrap();
        let eig = hermitian_eigenvalues(&h).unwrap();
        let b = numerical_range_boundary(&h.to_complex(), 64).unwrap();
        let tol = 1e-10 * (1.0 + h.scale());
        for s in &b.samples {
            prop_assert!(s.point.im.abs() <= tol);
            prop_assert!(s.point.re >= eig[0] - tol && s.point.re <= eig[4] + tol);
        }
        let re: Vec<f64> = b.samples.iter().map(|s| s.point.re).collect();
        prop_assert!((re.iter().cloned().fold(f64::INFINITY, f64::min) - eig[0]).abs() <= tol);
        prop_assert!((re.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - eig[4]).abs() <= tol);
    }
}
