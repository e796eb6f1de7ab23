use std::f64::consts::PI;

use torlab_core::quadrature::gauss_legendre;
use torlab_core::theory::{
    expected_spectral_proxy, gamma_rate, heat_trace_weyl_check, psi_second_moment_const_drift,
    psi_second_moment_symmetric, regime, spectral_sum, spectral_sum_torus, variance_const_drift, Regime,
};
use torlab_core::{LatticeShells, SpectralModel};

/// `Σ_{k≠0, |k_c| <= r} f(4π²|k|²)` by walking the lattice box.
fn box_sum(d: usize, r: i64, f: impl Fn(f64) -> f64) -> f64 {
    let mut k = vec![-r; d];
    let mut total = 0.0;
    loop {
        let n: i64 = k.iter().map(|c| c * c).sum();
        if n > 0 {
            total += f(4.0 * PI * PI * n as f64);
        }
        let mut c = 0;
        loop {
            if c == d {
                return total;
            }
            k[c] += 1;
            if k[c] <= r {
                break;
            }
            k[c] = -r;
            c += 1;
        }
    }
}

/// `∫_0^b f` by composite Gauss–Legendre.
fn integrate(b: f64, pieces: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(20);
    let h = b / pieces as f64;
    (0..pieces)
        .map(|p| x.iter().zip(&w).map(|(u, wt)| wt * f(h * (p as f64 + u))).sum::<f64>() * h)
        .sum()
}

#[test]
fn spectral_sums_match_lattice_box() {
    for (d, eps, s, r) in [(1, 0.01, 1.0, 40), (2, 0.005, 1.0, 30), (3, 0.01, 1.5, 12), (3, 0.01, 0.0, 12)] {
        let fast = spectral_sum_torus(d, eps, s).unwrap();
        let slow = box_sum(d, r, |l| (-2.0 * l * eps).exp() * l.powf(-s));
        assert!((fast - slow).abs() < 1e-7 * slow.max(1.0), "d={d} eps={eps} s={s}: {fast} vs {slow}");
    }
}

#[test]
fn spectral_sum_refuses_short_spectra() {
    let model = SpectralModel::build(2, 10).unwrap();
    assert!(spectral_sum(&model, 1e-4, 1.0).is_err());
    let shells = LatticeShells::new(2, 2000).unwrap();
    assert!(spectral_sum(&shells, 1e-3, 1.0).is_ok());
}

#[test]
fn heat_trace_decays_and_tracks_weyl() {
    let shells = LatticeShells::for_gaussian_tail(3, 1e-3, 1e-10).unwrap();
    let (trace, weyl) = heat_trace_weyl_check(&shells, 1e-3).unwrap();
    assert!((trace / weyl - 1.0).abs() < 0.02);
    let small = LatticeShells::new(3, 50).unwrap();
    let (far, _) = heat_trace_weyl_check(&small, 5.0).unwrap();
    assert!(far < 1e-80);
    assert!(heat_trace_weyl_check(&LatticeShells::new(2, 50).unwrap(), 1.0).is_err());
}

#[test]
fn symmetric_second_moment_is_a_double_integral() {
    // E|ψ(T)|² = (2/T) ∫_0^T (T - u) e^{-λ^α u} du for a unit-variance mode.
    for (lambda, alpha, t) in [(4.0 * PI * PI, 0.5, 10.0), (16.0 * PI * PI, 1.0, 3.0), (4.0 * PI * PI, 0.8, 0.5)] {
        let la = f64::powf(lambda, alpha);
        let num = 2.0 / t * integrate(t, 400, |u| (t - u) * (-la * u).exp());
        let closed = psi_second_moment_symmetric(lambda, alpha, t).unwrap();
        assert!((num - closed).abs() < 1e-10 * closed, "{num} vs {closed}");
    }
}

#[test]
fn drift_second_moment_is_a_double_integral() {
    // Under drift the correlation is e^{-λ^α u} cos(θu).
    for (lambda, theta, alpha, t) in [(4.0 * PI * PI, 2.0 * PI * 0.3, 0.8, 10.0), (8.0 * PI * PI, 5.0, 0.6, 4.0)] {
        let la = f64::powf(lambda, alpha);
        let num = 2.0 / t * integrate(t, 800, |u| (t - u) * (-la * u).exp() * (theta * u).cos());
        let closed = psi_second_moment_const_drift(lambda, theta, alpha, t).unwrap();
        assert!((num - closed).abs() < 1e-10 * closed.abs().max(1e-3), "{num} vs {closed}");
    }
}

#[test]
fn drift_variance_is_the_laplace_integral() {
    let (sigma, rhs) = variance_const_drift(&[1, -2], 0.7, &[0.3, 0.1]).unwrap();
    let lambda = 4.0 * PI * PI * 5.0;
    let theta = 2.0 * PI * (0.3 - 0.2);
    let la = f64::powf(lambda, 0.7);
    let num = integrate(60.0 / la, 2000, |u| (-la * u).exp() * (theta * u).cos());
    assert!((sigma - num).abs() < 1e-10);
    assert!((sigma - rhs).abs() < 1e-12);
}

#[test]
fn expected_proxy_matches_box_sum() {
    let (alpha, t, eps) = (0.5, 100.0, 0.01);
    let fast = expected_spectral_proxy(alpha, &[0.0, 0.0], t, eps).unwrap();
    let slow = box_sum(2, 20, |l| {
        (-2.0 * l * eps).exp() / l * psi_second_moment_symmetric(l, alpha, t).unwrap() / t
    });
    assert!((fast - slow).abs() < 1e-12 * slow.max(1.0));
    // A drift only rotates the correlation, so it can only lower the moment.
    let drifted = expected_spectral_proxy(0.8, &[0.3, 0.0], t, eps).unwrap();
    let plain = expected_spectral_proxy(0.8, &[0.0, 0.0], t, eps).unwrap();
    assert!(drifted <= plain);
}

#[test]
fn regimes_and_rates() {
    assert_eq!(regime(0.5, 1).unwrap().regime, Regime::Subcritical);
    assert_eq!(regime(0.5, 3).unwrap().regime, Regime::Critical);
    let sup = regime(0.5, 4).unwrap();
    assert_eq!(sup.regime, Regime::Supercritical);
    assert!((sup.exponent + 1.0 / 3.0).abs() < 1e-15);
    let t: f64 = 1024.0;
    assert!((gamma_rate(0.5, 3, t).unwrap() - (t.ln() / t).sqrt()).abs() < 1e-15);
    assert!(gamma_rate(0.5, 1, 1.0).is_err());
}
