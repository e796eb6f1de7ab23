//! Transport distances on the unit torus and the negative-Sobolev surrogate.

mod circle;
mod entropic;
mod network_simplex;

pub use circle::{w1_circle, CircleMeasure};
pub use entropic::wp_entropic;
pub use network_simplex::{solve_transport, CertificateAudit, FlowCertificate};

use crate::empirical::{check_eps, DiscreteMeasure, EmpiricalSpectrum};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{periodic_trapezoid, TensorGrid};
use crate::spectral::SpectralModel;

/// Largest grid the exact solver accepts.
pub const EXACT_CELL_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMethod {
    Circular,
    Network,
    SpectralProxy,
    /// Entropic regularization; approximate, never used for acceptance.
    EntropicApprox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    /// The distance itself (not raised to `p`).
    pub value: f64,
    pub p: f64,
    pub method: TransportMethod,
    pub certificate: Option<FlowCertificate>,
}

/// Flat geodesic distance on `[0,1)^d`.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = (a - b).abs();
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Exact circular `W_1`.
pub fn w1_circle_exact(mu: &CircleMeasure, nu: &CircleMeasure) -> TransportResult {
    TransportResult {
        value: w1_circle(mu, nu).0,
        p: 1.0,
        method: TransportMethod::Circular,
        certificate: None,
    }
}

/// Circular `W_1` between two grid measures in `d = 1`.
pub fn w1_circle_grid(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportResult> {
    Ok(w1_circle_exact(&CircleMeasure::from_grid(mu)?, &CircleMeasure::from_grid(nu)?))
}

fn check_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64, cap: usize) -> Result<()> {
    if !mu.same_grid(nu) {
        return invalid("measures live on different grids");
    }
    if !(p >= 1.0) || !p.is_finite() {
        return invalid(format!("transport exponent must be >= 1, got {p}"));
    }
    if mu.cells() > cap {
        return Err(Error::CapExceeded {
            what: "grid cells for the exact solver (use wp_entropic for an approximate value)",
            requested: mu.cells(),
            cap,
        });
    }
    Ok(())
}

/// Exact `W_p` between grid measures by network simplex on the support.
///
/// Ground cost is the torus distance between cell centers raised to `p`.
pub fn wp_discrete(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<TransportResult> {
    check_pair(mu, nu, p, EXACT_CELL_CAP)?;
    let src: Vec<usize> = (0..mu.cells()).filter(|&i| mu.weights()[i] > 0.0).collect();
    let dst: Vec<usize> = (0..nu.cells()).filter(|&j| nu.weights()[j] > 0.0).collect();
    let centers: Vec<Vec<f64>> = (0..mu.cells()).map(|c| mu.cell_center(c)).collect();
    let supply: Vec<f64> = src.iter().map(|&i| mu.weights()[i]).collect();
    let demand: Vec<f64> = dst.iter().map(|&j| nu.weights()[j]).collect();
    let mut cost = Vec::with_capacity(src.len() * dst.len());
    for &i in &src {
        for &j in &dst {
            cost.push(torus_distance(&centers[i], &centers[j]).powf(p));
        }
    }
    let mut cert = solve_transport(&supply, &demand, &cost)?;
    // report the certificate in grid-cell indices
    for f in cert.flows.iter_mut() {
        f.0 = src[f.0];
        f.1 = dst[f.1];
    }
    let mut u = vec![f64::NAN; mu.cells()];
    let mut v = vec![f64::NAN; nu.cells()];
    for (k, &i) in src.iter().enumerate() {
        u[i] = cert.u[k];
    }
    for (k, &j) in dst.iter().enumerate() {
        v[j] = cert.v[k];
    }
    cert.u = u;
    cert.v = v;
    Ok(TransportResult {
        value: cert.cost.max(0.0).powf(1.0 / p),
        p,
        method: TransportMethod::Network,
        certificate: Some(cert),
    })
}

/// `Σ_{i<=N} e^{-2λ_i ε} a_i² / λ_i = ‖∇(-L)^{-1}(f_{T,ε} - 1)‖²` (truncated).
pub fn spectral_h_proxy(model: &SpectralModel, spectrum: &EmpiricalSpectrum, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    spectrum.check_model(model)?;
    Ok(spectrum
        .coeffs()
        .iter()
        .zip(model.modes())
        .map(|(a, m)| (-2.0 * m.lambda * eps).exp() * a * a / m.lambda)
        .sum())
}

/// Proxy packaged as a transport result; `value` is the square root.
pub fn spectral_proxy_distance(model: &SpectralModel, spectrum: &EmpiricalSpectrum, eps: f64) -> Result<TransportResult> {
    Ok(TransportResult {
        value: spectral_h_proxy(model, spectrum, eps)?.sqrt(),
        p: 2.0,
        method: TransportMethod::SpectralProxy,
        certificate: None,
    })
}

/// Largest `|k_c|` among the retained modes of a spectrum.
fn max_frequency(model: &SpectralModel, n: usize) -> usize {
    model.modes()[..n]
        .iter()
        .flat_map(|m| m.k.iter().map(|c| c.unsigned_abs() as usize))
        .max()
        .unwrap_or(0)
}

/// Gradient field `∇(-L)^{-1}(f_{T,ε} - 1)` evaluated on a periodic grid,
/// one callback per node with the node weight.
fn for_each_gradient(
    model: &SpectralModel,
    spectrum: &EmpiricalSpectrum,
    eps: f64,
    nodes: usize,
    mut f: impl FnMut(&[f64], &[f64], f64),
) -> Result<()> {
    let coef = spectrum.mollified_coeffs(model, eps)?;
    let modes = &model.modes()[..coef.len()];
    let d = model.dim();
    let grid = TensorGrid::new(d, periodic_trapezoid(nodes));
    let mut g = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    grid.for_each(|x, w| {
        g.iter_mut().for_each(|c| *c = 0.0);
        for (c, m) in coef.iter().zip(modes) {
            m.grad(x, &mut tmp);
            let s = c / m.lambda;
            for (gi, ti) in g.iter_mut().zip(&tmp) {
                *gi += s * ti;
            }
        }
        f(x, &g, w);
    });
    Ok(())
}

/// `p^p ∫ |∇(-L)^{-1}(f_{T,ε} - 1)|^p dμ` by tensor quadrature.
///
/// The periodic rule uses `quad_nodes` points per axis (default: enough to
/// integrate `|∇·|^p` exactly for even integer `p`).
pub fn w2_upper_bound_functional(
    model: &SpectralModel,
    spectrum: &EmpiricalSpectrum,
    eps: f64,
    p: f64,
    quad_nodes: Option<usize>,
) -> Result<f64> {
    if !(p >= 2.0) || !p.is_finite() {
        return invalid(format!("exponent must be >= 2, got {p}"));
    }
    let kmax = max_frequency(model, spectrum.truncation());
    let nodes = quad_nodes.unwrap_or((p.ceil() as usize) * kmax + 1).max(4);
    let mut integral = 0.0;
    for_each_gradient(model, spectrum, eps, nodes, |_, g, w| {
        let norm_sq: f64 = g.iter().map(|c| c * c).sum();
        integral += w * norm_sq.powf(0.5 * p);
    })?;
    Ok(p.powf(p) * integral)
}

/// Diagnostic `∫ |∇(-L)^{-1}(f-1)|² / M(f) dμ`, `M(a) = (a-1)/log a`, with
/// the mollified density clipped below at `1e-6`. Not used for acceptance.
pub fn w2_logmean_functional(
    model: &SpectralModel,
    spectrum: &EmpiricalSpectrum,
    eps: f64,
    quad_nodes: Option<usize>,
) -> Result<f64> {
    let kmax = max_frequency(model, spectrum.truncation());
    let nodes = quad_nodes.unwrap_or(2 * kmax + 1).max(4);
    let coef = spectrum.mollified_coeffs(model, eps)?;
    let modes = &model.modes()[..coef.len()];
    let mut integral = 0.0;
    for_each_gradient(model, spectrum, eps, nodes, |x, g, w| {
        let f = (1.0 + coef.iter().zip(modes).map(|(c, m)| c * m.eval(x)).sum::<f64>()).max(1e-6);
        let logmean = if (f - 1.0).abs() < 1e-9 { 1.0 } else { (f - 1.0) / f.ln() };
        let norm_sq: f64 = g.iter().map(|c| c * c).sum();
        integral += w * norm_sq / logmean;
    })?;
    Ok(integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn torus_distance_wraps() {
        assert_abs_diff_eq!(torus_distance(&[0.1], &[0.9]), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(torus_distance(&[0.0, 0.0], &[0.5, 0.5]), 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn discrete_identical_and_single_route() {
        let mu = DiscreteMeasure::uniform(2, 4).unwrap();
        let r = wp_discrete(&mu, &mu, 2.0).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-12);
        let a = DiscreteMeasure::point_mass(1, 10, 0).unwrap();
        let b = DiscreteMeasure::point_mass(1, 10, 3).unwrap();
        let r = wp_discrete(&a, &b, 2.0).unwrap();
        assert_abs_diff_eq!(r.value, 0.3, epsilon = 1e-12);
        assert_eq!(r.method, TransportMethod::Network);
    }

    #[test]
    fn discrete_rejects_mismatch_and_cap() {
        let a = DiscreteMeasure::uniform(1, 8).unwrap();
        let b = DiscreteMeasure::uniform(1, 16).unwrap();
        assert!(wp_discrete(&a, &b, 1.0).is_err());
        assert!(wp_discrete(&a, &a, 0.5).is_err());
        let big = DiscreteMeasure::uniform(1, 5000).unwrap();
        assert!(matches!(wp_discrete(&big, &big, 1.0), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn proxy_edge_cases() {
        let model = SpectralModel::build(1, 6).unwrap();
        let zero = EmpiricalSpectrum::from_coeffs(&model, vec![0.0; 6], 10.0).unwrap();
        assert_eq!(spectral_h_proxy(&model, &zero, 0.01).unwrap(), 0.0);
        assert!(spectral_h_proxy(&model, &zero, 0.0).is_err());
        assert_eq!(w2_upper_bound_functional(&model, &zero, 0.01, 2.0, None).unwrap(), 0.0);
        assert!(w2_upper_bound_functional(&model, &zero, 0.01, 1.5, None).is_err());

        let c = 0.7;
        let mut coeffs = vec![0.0; 6];
        coeffs[0] = c;
        let one = EmpiricalSpectrum::from_coeffs(&model, coeffs, 10.0).unwrap();
        let l = 4.0 * PI * PI;
        let eps = 0.003;
        assert_abs_diff_eq!(
            spectral_h_proxy(&model, &one, eps).unwrap(),
            c * c * (-2.0 * l * eps).exp() / l,
            epsilon = 1e-15
        );
    }

    #[test]
    fn single_mode_fourth_power_closed_form() {
        // (√2·2π·λ⁻¹e^{-λε}a)^4 ∫ sin^4 = A^4 · 3/8
        let model = SpectralModel::build(1, 2).unwrap();
        let a = 0.9;
        let eps = 0.002;
        let s = EmpiricalSpectrum::from_coeffs(&model, vec![a, 0.0], 5.0).unwrap();
        let l = 4.0 * PI * PI;
        let amp = 2f64.sqrt() * 2.0 * PI / l * (-l * eps).exp() * a;
        let expected = 4f64.powi(4) * amp.powi(4) * 3.0 / 8.0;
        let got = w2_upper_bound_functional(&model, &s, eps, 4.0, None).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-8 * expected.max(1.0));
    }

    #[test]
    fn logmean_diagnostic_is_finite() {
        let model = SpectralModel::build(1, 8).unwrap();
        let s = EmpiricalSpectrum::point_mass(&model, &[0.2], 1.0).unwrap();
        let v = w2_logmean_functional(&model, &s, 0.01, None).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
}
