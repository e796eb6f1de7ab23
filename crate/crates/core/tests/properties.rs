use proptest::prelude::*;
use torlab_core::empirical::DiscreteMeasure;
use torlab_core::harness::fit_loglog_slope;
use torlab_core::spectral::wrap_unit;
use torlab_core::theory::{
    bernstein_bound, psi_second_moment_symmetric, spectral_sum_torus, variance_const_drift, DeviationParams,
};
use torlab_core::wasserstein::{spectral_h_proxy, wp_discrete};
use torlab_core::{spectral_coefficients, EmpiricalSpectrum, ProcessParams, SpectralModel, Start, Trajectory};

fn grid_measure(d: usize, n: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], n.pow(d as u32)).prop_map(move |mut w| {
        if w.iter().all(|&v| v == 0.0) {
            w[0] = 1.0;
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        DiscreteMeasure::new(d, n, w).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn coefficients_respect_sup_norm(points in prop::collection::vec(prop::array::uniform2(0.0..1.0f64), 2..40)) {
        let model = SpectralModel::build(2, 40).unwrap();
        let n = points.len() - 1;
        let params = ProcessParams::new(1.0, vec![0.0; 2], n as f64, 1.0, Start::Point(points[0].to_vec())).unwrap();
        let flat: Vec<f64> = points.iter().flatten().copied().collect();
        let traj = Trajectory::from_positions(params, flat, 0).unwrap();
        let spec = spectral_coefficients(&traj, &model, 40).unwrap();
        for a in spec.coeffs() {
            prop_assert!(a.abs() <= model.sup_norm() + 1e-12);
        }
    }

    #[test]
    fn metric_axioms(a in grid_measure(2, 4), b in grid_measure(2, 4), c in grid_measure(2, 4), p in 1.0..3.0f64) {
        let ab = wp_discrete(&a, &b, p).unwrap().value;
        let ba = wp_discrete(&b, &a, p).unwrap().value;
        let bc = wp_discrete(&b, &c, p).unwrap().value;
        let ac = wp_discrete(&a, &c, p).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(wp_discrete(&a, &a, p).unwrap().value == 0.0);
        if a != b {
            prop_assert!(ab > 0.0);
        }
    }

    #[test]
    fn wp_is_monotone_in_p(a in grid_measure(1, 12), b in grid_measure(1, 12), p in 1.0..2.0f64, q in 2.0..4.0f64) {
        let wp = wp_discrete(&a, &b, p).unwrap().value;
        let wq = wp_discrete(&a, &b, q).unwrap().value;
        prop_assert!(wp <= wq + 1e-12);
    }

    #[test]
    fn proxy_decreases_in_eps(coeffs in prop::collection::vec(-1.4..1.4f64, 30), e1 in 1e-4..0.1f64, f in 1.01..10.0f64) {
        let model = SpectralModel::build(2, 30).unwrap();
        let spec = EmpiricalSpectrum::from_coeffs(&model, coeffs, 1.0).unwrap();
        let lo = spectral_h_proxy(&model, &spec, e1 * f).unwrap();
        let hi = spectral_h_proxy(&model, &spec, e1).unwrap();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn spectral_sum_decreases(eps in 1e-3..0.1f64, f in 1.1..4.0f64, s in 0.0..2.0f64, ds in 0.1..1.0f64) {
        let base = spectral_sum_torus(2, eps, s).unwrap();
        prop_assert!(spectral_sum_torus(2, eps * f, s).unwrap() < base);
        prop_assert!(spectral_sum_torus(2, eps, s + ds).unwrap() < base);
    }

    #[test]
    fn psi_moment_increases_to_its_limit(n in 1u32..50, alpha in 0.05..1.0f64, t in 0.1..100.0f64, f in 1.01..5.0f64) {
        let lambda = 4.0 * std::f64::consts::PI.powi(2) * n as f64;
        let a = psi_second_moment_symmetric(lambda, alpha, t).unwrap();
        let b = psi_second_moment_symmetric(lambda, alpha, t * f).unwrap();
        prop_assert!(a <= b);
        let limit = 2.0 * lambda.powf(-alpha);
        prop_assert!(limit - a <= 2.0 / (t * lambda.powf(2.0 * alpha)) + 1e-14 * limit);
        prop_assert!(a <= limit);
    }

    #[test]
    fn drift_variance_identity(k in prop::array::uniform3(-6i32..6), alpha in 0.05..1.0f64, z in prop::array::uniform3(-3.0..3.0f64)) {
        prop_assume!(k.iter().any(|&c| c != 0));
        let (sigma, rhs) = variance_const_drift(&k, alpha, &z).unwrap();
        prop_assert!((sigma - rhs).abs() < 1e-12);
    }

    #[test]
    fn wrap_lands_in_unit_interval(x in -1e6..1e6f64) {
        let y = wrap_unit(x);
        prop_assert!((0.0..1.0).contains(&y));
        let d = (x - y) - (x - y).round();
        prop_assert!(d.abs() < 1e-6);
    }

    #[test]
    fn bernstein_bound_decreases(sigma in 0.01..2.0f64, m in 0.1..5.0f64, gamma in 1e-6..10.0f64, t in 1.0..1e3f64, xi in 0.01..2.0f64) {
        let params = DeviationParams::new(sigma, m, gamma, 1.0).unwrap();
        let a = bernstein_bound(t, xi, &params).unwrap();
        let b = bernstein_bound(t, xi * 1.5, &params).unwrap();
        let c = bernstein_bound(t * 1.5, xi, &params).unwrap();
        prop_assert!(b <= a && c <= a && a <= 2.0);
    }

    #[test]
    fn fit_recovers_power_laws(slope in -2.0..-0.1f64, c in 0.01..10.0f64, rel_se in 0.01..0.2f64) {
        let pts: Vec<(f64, f64, f64)> = (6..12)
            .map(|k| {
                let t = f64::powi(2.0, k);
                let v = c * t.powf(slope);
                (t, v, rel_se * v)
            })
            .collect();
        let fit = fit_loglog_slope(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
    }
}
