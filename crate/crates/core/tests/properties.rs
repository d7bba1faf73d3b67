use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use sensbound::bounds::{bode_bound, pj_bound, BoundInputs, BoundVariant};
use sensbound::indices::{extract_indices, sweep, SensitivityIndices};
use sensbound::integral::{
    poisson_check, poisson_integral, poisson_integral_half_line, QuadratureConfig,
};
use sensbound::lti::{
    perturb, poly_roots, Factor, FactoredPlant, PerturbationSpec, Polynomial, TransferFunction,
};
use sensbound::shaping::{
    all_pass_kappa, make_sensitivity, modified_sensitivity, ShapingConfig, SingularPoint,
    SingularStrategy,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real roots and conjugate pairs, separated so the polynomial stays well conditioned.
fn root_set() -> impl Strategy<Value = Vec<Complex64>> {
    (
        prop::collection::vec(-3.0f64..3.0, 0..4),
        prop::collection::vec((-2.0f64..2.0, 0.3f64..2.0), 0..2),
    )
        .prop_map(|(reals, pairs)| {
            let mut out: Vec<Complex64> = Vec::new();
            for (k, r) in reals.into_iter().enumerate() {
                out.push(c(r + 0.7 * k as f64, 0.0));
            }
            for (re, im) in pairs {
                out.push(c(re, im));
                out.push(c(re, -im));
            }
            out
        })
        .prop_filter("separated", |v| {
            v.iter()
                .enumerate()
                .all(|(i, a)| v.iter().skip(i + 1).all(|b| (a - b).norm() > 0.25))
        })
}

fn rhp_set() -> impl Strategy<Value = Vec<Complex64>> {
    (
        prop::collection::vec(0.05f64..5.0, 0..3),
        prop::option::of((0.05f64..3.0, 0.1f64..4.0)),
    )
        .prop_map(|(reals, pair)| {
            let mut out: Vec<Complex64> = reals.into_iter().map(|r| c(r, 0.0)).collect();
            if let Some((re, im)) = pair {
                out.push(c(re, im));
                out.push(c(re, -im));
            }
            out
        })
}

/// Strictly proper random transfer function with a delay.
fn proper_tf() -> impl Strategy<Value = TransferFunction> {
    (
        prop::collection::vec(-2.0f64..2.0, 1..3),
        prop::collection::vec(0.2f64..3.0, 3),
        0.0f64..2.0,
    )
        .prop_map(|(num, den, td)| {
            TransferFunction::new(
                Polynomial::new(num).unwrap(),
                Polynomial::new(den).unwrap(),
                td,
            )
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frequency_response_is_conjugate_symmetric(g in proper_tf(), w in 0.01f64..50.0) {
        let pos = g.eval_s(c(0.0, w)).unwrap();
        let neg = g.eval_s(c(0.0, -w)).unwrap();
        prop_assert!((pos.conj() - neg).norm() <= 1e-12 * (1.0 + pos.norm()));
    }

    #[test]
    fn roots_are_recovered(roots in root_set()) {
        prop_assume!(!roots.is_empty());
        let p = Polynomial::from_roots(&roots);
        let found = poly_roots(&p, 1e-9).unwrap().roots;
        prop_assert_eq!(found.len(), roots.len());
        for r in &roots {
            let best = found.iter().map(|f| (f - r).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best < 1e-8 * (1.0 + r.norm()), "root {} missed by {}", r, best);
        }
    }

    #[test]
    fn series_magnitudes_multiply(a in proper_tf(), b in proper_tf(), w in 0.01f64..20.0) {
        let ab = a.series(&b).eval(w).unwrap().norm();
        let prod = a.eval(w).unwrap().norm() * b.eval(w).unwrap().norm();
        prop_assert!((ab - prod).abs() <= 1e-10 * (1.0 + prod));
    }

    #[test]
    fn all_pass_has_unit_magnitude(
        alpha in rhp_set(),
        beta in rhp_set(),
        omegas in prop::collection::vec(-1e3f64..1e3, 1000),
    ) {
        let k = all_pass_kappa(&alpha, &beta).unwrap();
        for w in omegas {
            prop_assert!((k.eval(w).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_is_normalized(cst in -0.9f64..5.0, sigma in 0.1f64..10.0, eta in -5.0f64..5.0) {
        prop_assume!(cst.abs() > 1e-3);
        // G = c gives |g| = 1/|1 + c| everywhere
        let m = make_sensitivity(TransferFunction::gain(cst), &ShapingConfig::default()).unwrap();
        let sp = SingularPoint::explicit(sigma, eta).unwrap();
        let q = poisson_integral(&m, &sp, &QuadratureConfig::default()).unwrap();
        let expect = -PI * (1.0 + cst).abs().ln();
        prop_assert!((q.value - expect).abs() < 1e-6, "{} vs {}", q.value, expect);
    }

    #[test]
    fn log_magnitude_is_even(g in proper_tf(), w in 0.01f64..30.0) {
        let gain = 0.5 / (1.0 + g.eval(0.0).unwrap().norm());
        let g = g.series(&TransferFunction::gain(gain));
        let m = make_sensitivity(g, &ShapingConfig::default()).unwrap();
        let l = m.eval_s(c(0.0, w)).unwrap().norm().ln();
        let r = m.eval_s(c(0.0, -w)).unwrap().norm().ln();
        prop_assert!((l - r).abs() < 1e-9);
    }

    #[test]
    fn half_line_matches_full_line(k in 0.1f64..0.9, tau in 0.2f64..3.0, td in 0.0f64..2.0, sigma in 0.2f64..5.0) {
        let g = TransferFunction::from_coeffs(&[k], &[1.0, tau], td).unwrap();
        let m = make_sensitivity(g, &ShapingConfig::default()).unwrap();
        let sp = SingularPoint::explicit(sigma, 0.0).unwrap();
        let cfg = QuadratureConfig::default();
        let full = poisson_integral(&m, &sp, &cfg).unwrap();
        let half = poisson_integral_half_line(&m, &sp, &cfg).unwrap();
        let budget = 2.0 * cfg.abs_tol + full.tail_bound + half.tail_bound;
        prop_assert!((full.value - half.value).abs() < budget);
    }

    #[test]
    fn poisson_identity_on_small_gain_loops(k in 0.05f64..0.9, tau in 0.1f64..5.0, td in 0.0f64..3.0, sigma in 0.1f64..5.0) {
        let g = TransferFunction::from_coeffs(&[k], &[1.0, tau], td).unwrap();
        let m = make_sensitivity(g, &ShapingConfig::default()).unwrap();
        let sp = SingularPoint::explicit(sigma, 0.0).unwrap();
        let r = poisson_check(&m, &sp, &QuadratureConfig::default()).unwrap();
        prop_assert!(r.residual.abs() < 1e-4, "{:?}", r);
    }

    #[test]
    fn modified_sensitivity_keeps_magnitude(k in 1.2f64..3.0, p in 0.1f64..0.8, w in 0.01f64..50.0) {
        // k/(s - p) with k > p is closed-loop stable
        let g = TransferFunction::from_coeffs(&[k], &[-p, 1.0], 0.0).unwrap();
        let m = make_sensitivity(g, &ShapingConfig::default()).unwrap();
        let mm = modified_sensitivity(&m).unwrap();
        let a = m.eval(w).unwrap().norm();
        let b = mm.eval(w).unwrap().norm();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn weighted_bound_grows_with_attenuation(rho1 in 0.05f64..0.99, rho2 in 0.05f64..0.99, wc in 0.1f64..3.0, sigma in 0.5f64..5.0) {
        let mk = |rho: f64| BoundInputs {
            indices: SensitivityIndices::new(wc, rho, 3.0, 2.0 * wc).unwrap(),
            sp: SingularPoint::new(sigma, 0.0, SingularStrategy::OpenLoopNmpZero).unwrap(),
            alpha: vec![],
            beta: vec![],
            g_at_sp: 1.0,
            a: 0.0,
            omega_l: Some(100.0 * wc),
        };
        let (lo, hi) = if rho1 < rho2 { (rho1, rho2) } else { (rho2, rho1) };
        let b_lo = pj_bound(&mk(lo), BoundVariant::PjAtNmpZero).unwrap().bound_nats;
        let b_hi = pj_bound(&mk(hi), BoundVariant::PjAtNmpZero).unwrap().bound_nats;
        prop_assert!(b_lo >= b_hi);
        let u_lo = bode_bound(&mk(lo), BoundVariant::Bode).unwrap().bound_nats;
        let u_hi = bode_bound(&mk(hi), BoundVariant::Bode).unwrap().bound_nats;
        prop_assert!(u_lo >= u_hi);
    }

    #[test]
    fn zero_perturbation_is_identity(gain in -3.0f64..3.0, tau in 0.1f64..5.0, td in 0.0f64..2.0) {
        prop_assume!(gain.abs() > 1e-3);
        let p = FactoredPlant { gain, zeros: vec![], poles: vec![Factor::lag(tau)], dead_time: td };
        let q = perturb(&p, &PerturbationSpec::uniform(0.0).unwrap()).unwrap();
        prop_assert_eq!(p, q);
    }
}

#[test]
fn peak_refinement_converges() {
    let g = TransferFunction::from_coeffs(&[1.0], &[0.0, 1.0], 1.0).unwrap();
    let m = make_sensitivity(g, &ShapingConfig::default()).unwrap();
    let mut prev: Option<f64> = None;
    for n in [250, 1000, 4000] {
        let s = sweep(&m, 1e-3, 1e2, n).unwrap();
        let ix = extract_indices(&m, &s).unwrap();
        if let Some(p) = prev {
            assert!((ix.s_max - p).abs() < 1e-8 * p, "{n}: {} vs {p}", ix.s_max);
        }
        prev = Some(ix.s_max);
    }
}
