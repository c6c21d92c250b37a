use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use parampass::dataset::{load_dataset, rms_error, FitSplit, RmsMode};
use parampass::descriptor::{build_descriptor, eval_descriptor_tf};
use parampass::enforcement::{
    build_constraints, build_cost, enforce, solve_qp, CostWeights, DecisionLayout, EnforceConfig, QpConfig,
};
use parampass::fixtures;
use parampass::model::{Laplace, ParamModel};
use parampass::oracle::sweep_thetas;
use parampass::passivity::{adaptive_check, build_shh_pencil, evaluate_sample, finite_pencil_eigs, CheckConfig};

fn arb_model() -> impl Strategy<Value = ParamModel> {
    (0u64..500, 1usize..=2, 0usize..=2, 1usize..=2, 1usize..=3, 0.8f64..1.4).prop_map(
        |(seed, ports, n_real, n_complex, ell, peak)| fixtures::random_model(seed, ports, n_real, n_complex, ell, peak),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn descriptor_matches_rational_form(m in arb_model(), t in 0.0f64..1.0, re in -0.5f64..2.0, im in -10.0f64..10.0) {
        let s = Complex64::new(re, im);
        let h = m.eval_transfer(s, t).unwrap();
        let r = eval_descriptor_tf(&build_descriptor(&m, t), Laplace::Finite(s)).unwrap();
        prop_assert!((r - &h).norm() <= 1e-10 * h.norm().max(1e-12));
    }

    #[test]
    fn spectrum_is_hamiltonian_symmetric(m in arb_model(), t in 0.0f64..1.0) {
        let sm = finite_pencil_eigs(&build_shh_pencil(&build_descriptor(&m, t)), 1e-8, m.poles().max_magnitude()).unwrap();
        prop_assert!(sm.n_infinite >= 2 * m.ports());
        for l in &sm.finite_eigs {
            for img in [-*l, l.conj()] {
                let d = sm.finite_eigs.iter().map(|x| (x - img).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(d <= 1e-8 * sm.rho);
            }
        }
    }

    #[test]
    fn psi_zero_iff_crossings(m in arb_model(), t in 0.0f64..1.0) {
        let s = evaluate_sample(&m, t, &CheckConfig::default()).unwrap();
        if !s.dc_touch {
            prop_assert_eq!(s.psi == 0.0, !s.imag_freqs.is_empty());
        }
        for b in &s.bands {
            prop_assert!(b.omega_low < b.omega_high);
            if let Some(w) = b.worst {
                prop_assert!(w.sigma > 1.0);
                prop_assert!(w.sigma >= b.peak_sigma);
            }
        }
    }

    #[test]
    fn crossings_match_dense_sweep(m in arb_model(), t in 0.0f64..1.0) {
        let chi = evaluate_sample(&m, t, &CheckConfig::default()).unwrap().imag_freqs;
        let col = &sweep_thetas(&m, &[t], 4096, 10.0).unwrap().columns[0];
        for w in &chi {
            prop_assert!(col.crossings.iter().any(|c| (w - c.omega).abs() <= c.cell_high - c.cell_low));
        }
        for c in &col.crossings {
            prop_assert!(chi.iter().any(|w| (w - c.omega).abs() <= c.cell_high - c.cell_low));
        }
    }

    #[test]
    fn sample_sets_are_sorted_and_violations_consistent(m in arb_model()) {
        let r = adaptive_check(&m, &CheckConfig::default()).unwrap();
        for w in r.samples.windows(2) {
            prop_assert!(w[0].theta < w[1].theta);
        }
        let n_np: usize = r.samples.iter().map(|s| s.bands.iter().filter(|b| !b.passive).count()).sum();
        prop_assert_eq!(n_np, r.violations.len());
        prop_assert!(r.passes_used >= 1 && r.passes_used <= 10);
    }

    #[test]
    fn qp_returns_zero_iff_constraints_inactive(m in arb_model(), shift in -0.5f64..0.5) {
        let freqs: Vec<f64> = (0..20).map(|k| 0.05 * k as f64).collect();
        let data = fixtures::dataset_from_model(&m, &freqs, &[0.0, 0.5, 1.0]);
        let lay = DecisionLayout::new(&m);
        let cost = build_cost(&m, &data, &[0, 1, 2], &CostWeights::Uniform, &lay).unwrap();
        let r = parampass::oracle::dense_sweep(&m, 300, 5, 10.0).unwrap();
        let v = parampass::passivity::Violation { theta: r.argmax_theta, omega: r.argmax_omega, sigma: r.max_sigma, asymptotic: false };
        let mut rows = build_constraints(&m, &v, &lay, 0.0).unwrap();
        if rows.is_empty() {
            return Ok(());
        }
        for row in rows.iter_mut() {
            row.rhs += shift;
        }
        let sol = solve_qp(&cost, &rows, &QpConfig::default()).unwrap();
        let inactive = rows.iter().all(|r| r.rhs >= 0.0);
        prop_assert_eq!(sol.x == DVector::zeros(lay.len()), inactive);
        prop_assert!(sol.objective >= 0.0);
        for row in &rows {
            prop_assert!(row.p.dot(&sol.x) - row.rhs <= 1e-9);
        }
    }
}

#[test]
fn dataset_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixtures::random_model(3, 2, 1, 2, 2, 0.9);
    let freqs: Vec<f64> = (0..30).map(|k| 0.01 * (k as f64).powf(1.3)).collect();
    let d = fixtures::perturb_dataset(&fixtures::dataset_from_model(&m, &freqs, &[0.0, 0.37, 1.0]), 5, 0.1);
    let path = dir.path().join("set.json");
    d.save(&path).unwrap();
    let back = load_dataset(&path).unwrap();
    back.save(dir.path().join("again.json")).unwrap();
    let again = load_dataset(dir.path().join("again.json")).unwrap();
    assert_eq!(back, d);
    assert_eq!(again, d);
}

#[test]
fn enforcement_preserves_denominator_and_poles() {
    let f = fixtures::shallow_two_port(2);
    let out = enforce(&f.model, &f.data, &FitSplit::all(9), &CheckConfig::default(), &EnforceConfig::default()).unwrap();
    assert!(out.converged);
    assert_eq!(out.model.den_coeffs(), f.model.den_coeffs());
    assert_eq!(out.model.poles(), f.model.poles());
    assert_eq!(out.model.param_basis(), f.model.param_basis());
    let rows = out.log.len();
    assert_eq!(rows, out.iterations + 1);
    assert!(out.log[rows - 1].n_violations == 0);
    assert!(out.log.windows(2).all(|w| w[1].cost_value >= 0.0 && w[0].n_violations > 0));
}

#[test]
fn enforcement_keeps_generator_accuracy() {
    let f = fixtures::shallow_two_port(3);
    let all: Vec<usize> = (0..9).collect();
    let out = enforce(&f.model, &f.data, &FitSplit::alternating(9), &CheckConfig::default(), &EnforceConfig::default())
        .unwrap();
    assert!(out.converged);
    let before = rms_error(&f.model, &f.data, &all, RmsMode::Relative).unwrap().worst;
    let after = rms_error(&out.model, &f.data, &all, RmsMode::Relative).unwrap().worst;
    assert!(after <= 1.1 * before, "{before} -> {after}");
}

#[test]
fn asymptotic_violation_is_enforced() {
    // Constant direct term 1.2 on top of a passive low-pass.
    let base = fixtures::single_pole(0.3);
    let mut num = base.num_coeffs().to_vec();
    num[0] = DMatrix::from_element(1, 1, 0.8);
    let m = base.with_numerator(num).unwrap();
    let r = adaptive_check(&m, &CheckConfig::default()).unwrap();
    assert!(!r.is_passive());
    let freqs: Vec<f64> = (0..30).map(|k| 0.1 * k as f64).collect();
    let d = fixtures::dataset_from_model(&m, &freqs, &[0.0, 0.5, 1.0]);
    let out = enforce(&m, &d, &FitSplit::all(3), &CheckConfig::default(), &EnforceConfig::default()).unwrap();
    assert!(out.converged);
    let peak = parampass::oracle::dense_sweep(&out.model, 1024, 5, 100.0).unwrap().max_sigma;
    assert!(peak <= 1.0 + 1e-6, "{peak}");
}
