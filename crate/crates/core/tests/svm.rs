mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::qp::{oracle_decision, qp_oracle};
use crisis_triage::actionability::{
    classify_one, dual_objective, kernel_matrix, train_svm, train_svm_with_report, SvmHyperparams,
    SvmModel,
};

#[test]
fn smo_matches_brute_force_qp() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let settings = [(20.0, 3.0), (1.0, 3.0), (0.5, 1.0), (5.0, 10.0), (50.0, 0.5)];
    let mut compared = 0;
    for case in 0..40 {
        let (x, y) = common::qp::random_instance(&mut rng);
        let (c, gamma) = settings[case % settings.len()];
        let hp = SvmHyperparams {
            c,
            gamma,
            ..SvmHyperparams::default()
        };
        let (model, report) = train_svm_with_report(&x, &y, &hp, case as u64, false).unwrap();
        let oracle = qp_oracle(&x, &y, c, gamma);
        assert!(
            (report.objective - oracle.objective).abs() < 1e-3,
            "case {case}: solver {} vs oracle {}",
            report.objective,
            oracle.objective
        );
        for (i, p) in x.iter().enumerate() {
            let f = oracle_decision(&oracle, &x, &y, gamma, p);
            if f.abs() < 1e-3 {
                continue;
            }
            let (label, _) = classify_one(&model, p).unwrap();
            assert_eq!(label, if f >= 0.0 { 1 } else { -1 }, "case {case}, point {i}");
        }
        compared += 1;
    }
    assert!(compared >= 20);
}

#[test]
fn xor_is_fit_exactly() {
    let (x, y) = common::qp::xor_data();
    let model = train_svm(&x, &y, &SvmHyperparams::default(), 1).unwrap();
    assert!(model.converged);
    for (p, t) in x.iter().zip(&y) {
        assert_eq!(classify_one(&model, p).unwrap().0 as f64, *t);
    }
    // The fitted surface also separates a coarse grid by quadrant.
    for (px, py) in [(0.1, 0.1), (0.9, 0.9), (0.1, 0.9), (0.9, 0.1)] {
        let expect = if (px < 0.5) != (py < 0.5) { 1 } else { -1 };
        assert_eq!(classify_one(&model, &[px, py]).unwrap().0, expect);
    }
}

#[test]
fn objective_never_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..5 {
        let x: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|p| if p[0] + 0.3 * rng.gen_range(-1.0..1.0) > 0.5 { 1.0 } else { -1.0 }).collect();
        let (_, report) = train_svm_with_report(&x, &y, &SvmHyperparams::default(), seed, true).unwrap();
        assert!(!report.objective_trace.is_empty());
        let mut prev = 0.0;
        for v in &report.objective_trace {
            assert!(*v >= prev - 1e-12, "objective fell from {prev} to {v}");
            prev = *v;
        }
        let k = kernel_matrix(&x, 3.0);
        assert!((dual_objective(&report.alphas, &y, &k) - report.objective).abs() < 1e-9);
    }
}

#[test]
fn training_is_seed_deterministic() {
    let (x, y) = common::qp::xor_data();
    let a = train_svm(&x, &y, &SvmHyperparams::default(), 3).unwrap();
    let b = train_svm(&x, &y, &SvmHyperparams::default(), 3).unwrap();
    assert_eq!(a, b);
}

fn check_model_invariants(model: &SvmModel, report_alphas: &[f64], y: &[f64], c: f64) {
    for a in report_alphas {
        assert!(*a >= 0.0 && *a <= c + 1e-9);
    }
    let s: f64 = report_alphas.iter().zip(y).map(|(a, y)| a * y).sum();
    assert!(s.abs() < 1e-6, "sum alpha*y = {s}");
    assert!(!model.support_vectors.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_matrix_properties(points in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 1..12), gamma in 0.01f64..10.0) {
        let n = points.len();
        let k = kernel_matrix(&points, gamma);
        for i in 0..n {
            prop_assert_eq!(k[i * n + i], 1.0);
            for j in 0..n {
                prop_assert_eq!(k[i * n + j], k[j * n + i]);
                prop_assert!(k[i * n + j] > 0.0);
                prop_assert!(k[i * n + j] <= 1.0);
            }
        }
    }

    #[test]
    fn multipliers_are_feasible(seed in any::<u64>(), n in 4usize..30, c in 0.1f64..50.0, gamma in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let mut y: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let hp = SvmHyperparams { c, gamma, ..SvmHyperparams::default() };
        let (model, report) = train_svm_with_report(&x, &y, &hp, seed, false).unwrap();
        check_model_invariants(&model, &report.alphas, &y, c);
    }
}
