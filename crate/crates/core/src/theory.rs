//! Closed forms and spectral sums: rates, ε-schedules, variance constants,
//! the Bernstein tail bound, heat-trace and log-renormalization asymptotes.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{periodic_trapezoid, TensorGrid};
use crate::spectral::{lattice_gaussian_tail, Eigenvalues, LatticeShells};

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Required bound on the neglected part of a spectral sum.
pub const SPECTRAL_SUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePrediction {
    pub regime: Regime,
    /// Slope of `log γ` against `log T`.
    pub exponent: f64,
    /// Power of `log T` multiplying `T^exponent`.
    pub log_power: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("alpha must lie in (0,1], got {alpha}"));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return invalid("dimension must be positive");
    }
    Ok(())
}

/// Sign of `d - 2(1+α)`, with exact ties recognised up to rounding.
fn critical_sign(alpha: f64, d: usize) -> std::cmp::Ordering {
    let gap = d as f64 - 2.0 * (1.0 + alpha);
    if gap.abs() < 1e-12 {
        std::cmp::Ordering::Equal
    } else if gap < 0.0 {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

pub fn regime(alpha: f64, d: usize) -> Result<RatePrediction> {
    check_alpha(alpha)?;
    check_d(d)?;
    use std::cmp::Ordering::*;
    Ok(match critical_sign(alpha, d) {
        Less => RatePrediction {
            regime: Regime::Subcritical,
            exponent: -0.5,
            log_power: 0.0,
        },
        Equal => RatePrediction {
            regime: Regime::Critical,
            exponent: -0.5,
            log_power: 0.5,
        },
        Greater => RatePrediction {
            regime: Regime::Supercritical,
            exponent: -1.0 / (d as f64 - 2.0 * alpha),
            log_power: 0.0,
        },
    })
}

/// `γ_{α,d}(T)`.
pub fn gamma_rate(alpha: f64, d: usize, t: f64) -> Result<f64> {
    if !(t > 1.0) {
        return invalid(format!("horizon must exceed 1, got {t}"));
    }
    let r = regime(alpha, d)?;
    Ok(t.powf(r.exponent) * t.ln().powf(r.log_power))
}

/// Mollification time: `1/T` up to the critical dimension, `T^{-2/(d-2α)}` above.
pub fn epsilon_schedule(alpha: f64, d: usize, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_d(d)?;
    if !(t > 0.0) {
        return invalid(format!("horizon must be positive, got {t}"));
    }
    Ok(match critical_sign(alpha, d) {
        std::cmp::Ordering::Greater => t.powf(-2.0 / (d as f64 - 2.0 * alpha)),
        _ => 1.0 / t,
    })
}

/// `ε = log^γ T / T`.
pub fn epsilon_log_power(t: f64, gamma: f64) -> Result<f64> {
    if !(t > 1.0) {
        return invalid(format!("horizon must exceed 1, got {t}"));
    }
    Ok(t.ln().powf(gamma) / t)
}

/// `σ²(φ) = 2λ^{-α}` for an eigenfunction with eigenvalue `λ`.
pub fn sigma_sq_eigenfunction(lambda: f64, alpha: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return invalid(format!("eigenvalue must be positive, got {lambda}"));
    }
    Ok(2.0 * lambda.powf(-alpha))
}

/// `E|ψ_i(T)|²` under stationary start without drift.
pub fn psi_second_moment_symmetric(lambda: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(t > 0.0) {
        return invalid("eigenvalue and horizon must be positive");
    }
    let la = lambda.powf(alpha);
    Ok(2.0 / la + 2.0 / (t * la * la) * (-la * t).exp_m1())
}

/// `E|ψ(T)|²` for a mode `k` under constant drift, averaged over the cos/sin
/// pair: `2 Re[1/z - (1 - e^{-zT})/(T z²)]` with `z = λ^α - iθ`.
/// Reduces to [`psi_second_moment_symmetric`] at `θ = 0`.
pub fn psi_second_moment_const_drift(lambda: f64, theta: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(t > 0.0) {
        return invalid("eigenvalue and horizon must be positive");
    }
    if theta == 0.0 {
        return psi_second_moment_symmetric(lambda, alpha, t);
    }
    let a = lambda.powf(alpha);
    let b = -theta;
    // 1/z
    let r2 = a * a + b * b;
    let inv = (a / r2, -b / r2);
    // 1/z²
    let inv2 = (inv.0 * inv.0 - inv.1 * inv.1, 2.0 * inv.0 * inv.1);
    // 1 - e^{-zT}
    let decay = (-a * t).exp();
    let one_minus = (1.0 - decay * (b * t).cos(), decay * (b * t).sin());
    let prod_re = one_minus.0 * inv2.0 - one_minus.1 * inv2.1;
    Ok(2.0 * (inv.0 - prod_re / t))
}

/// `(Σ(φ), λ^{-α} - λ^{-2α}Σ(Zφ))` for the mode with frequency `k` under
/// constant drift `Z`. The two coincide.
pub fn variance_const_drift(k: &[i32], alpha: f64, z: &[f64]) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if k.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: k.len(),
            found: z.len(),
        });
    }
    if k.iter().all(|&c| c == 0) {
        return invalid("frequency must be nonzero");
    }
    let norm_sq: f64 = k.iter().map(|&c| (c as f64).powi(2)).sum();
    let lambda = FOUR_PI_SQ * norm_sq;
    let theta = 2.0 * PI * k.iter().zip(z).map(|(&c, zc)| c as f64 * zc).sum::<f64>();
    let la = lambda.powf(alpha);
    let denom = la * la + theta * theta;
    let sigma = la / denom;
    // Σ(Zφ) = θ² Σ(φ)
    let rhs = 1.0 / la - theta * theta * sigma / (la * la);
    Ok((sigma, rhs))
}

/// Quadrature-supplied `L^p(μ)` norms of a test function.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpNorms {
    pub l1: Option<f64>,
    /// `‖g‖_{L^{d/(2α)}}`.
    pub critical: Option<f64>,
    /// `(p, ‖g‖_{L^p})` on the grid of [`critical_p_grid`].
    pub grid: Vec<(f64, f64)>,
}

/// `{(1 + 2^{-j})/α : j = 0..20} ∪ {2,4,8,16}`, keeping `p > 1/α`.
pub fn critical_p_grid(alpha: f64) -> Vec<f64> {
    let mut ps: Vec<f64> = (0..=20).map(|j| (1.0 + 0.5f64.powi(j)) / alpha).collect();
    ps.extend([2.0, 4.0, 8.0, 16.0].into_iter().filter(|&p| p > 1.0 / alpha));
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    ps
}

impl LpNorms {
    /// All norms [`m_functional`] may need, by periodic tensor quadrature
    /// with `nodes` points per axis.
    pub fn by_quadrature(d: usize, alpha: f64, nodes: usize, g: impl Fn(&[f64]) -> f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_d(d)?;
        let grid = TensorGrid::new(d, periodic_trapezoid(nodes));
        let mut values = Vec::with_capacity(grid.len());
        grid.for_each(|x, w| values.push((g(x).abs(), w)));
        let norm = |p: f64| values.iter().map(|(v, w)| w * v.powf(p)).sum::<f64>().powf(1.0 / p);
        Ok(LpNorms {
            l1: Some(norm(1.0)),
            critical: Some(norm(d as f64 / (2.0 * alpha))),
            grid: critical_p_grid(alpha).into_iter().map(|p| (p, norm(p))).collect(),
        })
    }
}

/// `m(g)`; at `d = 2α` the infimum is taken over the supplied grid, which
/// gives an upper bound on the true infimum.
pub fn m_functional(norms: &LpNorms, alpha: f64, d: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_d(d)?;
    let two_alpha = 2.0 * alpha;
    let df = d as f64;
    if (df - two_alpha).abs() < 1e-12 {
        let best = norms
            .grid
            .iter()
            .filter(|(p, _)| alpha * p > 1.0)
            .map(|&(p, n)| (p / (alpha * p - 1.0)).powi(2) * n)
            .fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            Ok(best)
        } else {
            invalid("missing L^p norms with p > 1/alpha")
        }
    } else if df < two_alpha {
        norms.l1.ok_or_else(|| Error::InvalidArgument("missing L^1 norm".into()))
    } else {
        norms
            .critical
            .ok_or_else(|| Error::InvalidArgument("missing L^{d/(2 alpha)} norm".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationParams {
    pub sigma_sq: f64,
    pub m: f64,
    pub gamma: f64,
    pub h_norm: f64,
}

impl DeviationParams {
    pub fn new(sigma_sq: f64, m: f64, gamma: f64, h_norm: f64) -> Result<Self> {
        if !(sigma_sq >= 0.0 && m >= 0.0 && gamma > 0.0 && h_norm >= 1.0) {
            return invalid("need σ² >= 0, m >= 0, γ > 0 and ‖h‖ >= 1");
        }
        Ok(DeviationParams {
            sigma_sq,
            m,
            gamma,
            h_norm,
        })
    }
}

/// `2‖h‖ exp(-Tξ² / (2σ² + γmξ))`, returned even when it exceeds 1.
pub fn bernstein_bound(t: f64, xi: f64, params: &DeviationParams) -> Result<f64> {
    if !(t > 0.0) || !(xi > 0.0) {
        return invalid("horizon and threshold must be positive");
    }
    let denom = 2.0 * params.sigma_sq + params.gamma * params.m * xi;
    let expo = if denom > 0.0 { -t * xi * xi / denom } else { f64::NEG_INFINITY };
    Ok(2.0 * params.h_norm * expo.exp())
}

/// `Σ mult·e^{-2λε}λ^{-s}` over the listed spectrum, refusing when the
/// neglected tail could exceed [`SPECTRAL_SUM_TOL`].
pub fn spectral_sum(spec: &impl Eigenvalues, eps: f64, s: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    if !(s >= 0.0) {
        return invalid(format!("exponent must be nonnegative, got {s}"));
    }
    let n = spec.first_missing_shell();
    let tail = (FOUR_PI_SQ * n as f64).powf(-s) * lattice_gaussian_tail(spec.dim(), n, 2.0 * FOUR_PI_SQ * eps);
    if tail > SPECTRAL_SUM_TOL {
        return Err(Error::Truncation {
            estimate: tail,
            tolerance: SPECTRAL_SUM_TOL,
        });
    }
    Ok(spec
        .eigenvalues()
        .iter()
        .map(|&(l, c)| c * (-2.0 * l * eps).exp() * l.powf(-s))
        .sum())
}

/// Spectral sum on the unit torus with enough shells for the tolerance.
pub fn spectral_sum_torus(d: usize, eps: f64, s: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    spectral_sum(&LatticeShells::for_gaussian_tail(d, 2.0 * eps, SPECTRAL_SUM_TOL)?, eps, s)
}

/// `(Σ e^{-λε}, Vol·(4πε)^{-3/2})` for a three-dimensional spectrum.
pub fn heat_trace_weyl_check(spec: &impl Eigenvalues, eps: f64) -> Result<(f64, f64)> {
    if spec.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: spec.dim(),
        });
    }
    if !(eps > 0.0) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    let n = spec.first_missing_shell();
    let tail = lattice_gaussian_tail(3, n, FOUR_PI_SQ * eps);
    if tail > SPECTRAL_SUM_TOL {
        return Err(Error::Truncation {
            estimate: tail,
            tolerance: SPECTRAL_SUM_TOL,
        });
    }
    let trace = spec.eigenvalues().iter().map(|&(l, c)| c * (-l * eps).exp()).sum();
    Ok((trace, (4.0 * PI * eps).powf(-1.5)))
}

/// `E[Σ_i e^{-2λ_iε} a_i²/λ_i]` under stationary start, from
/// `E[a_i²] = E|ψ_i(T)|²/T`. Every mode is kept until the Gaussian factor
/// leaves less than `1e-14` behind.
pub fn expected_spectral_proxy(alpha: f64, drift: &[f64], t: f64, eps: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(eps > 0.0) || !(t > 0.0) {
        return invalid("horizon and eps must be positive");
    }
    let d = drift.len();
    let shells = LatticeShells::for_gaussian_tail(d, 2.0 * eps, 1e-14)?;
    if drift.iter().all(|&z| z == 0.0) {
        let mut sum = 0.0;
        for (l, c) in shells.shells() {
            sum += c * (-2.0 * l * eps).exp() / l * psi_second_moment_symmetric(l, alpha, t)? / t;
        }
        return Ok(sum);
    }
    let model = crate::spectral::SpectralModel::with_shells(d, shells.max_norm_sq())?;
    let mut sum = 0.0;
    for m in model.modes() {
        let theta = 2.0 * PI * m.k[..d].iter().zip(drift).map(|(&c, z)| c as f64 * z).sum::<f64>();
        sum += (-2.0 * m.lambda * eps).exp() / m.lambda * psi_second_moment_const_drift(m.lambda, theta, alpha, t)? / t;
    }
    Ok(sum)
}

/// `(vol/2π²)·log(√(1+1/2ε) + √(1/2ε))`.
pub fn renorm_log_prediction(vol: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    let u = 0.5 / eps;
    Ok(vol / (2.0 * PI * PI) * ((1.0 + u).sqrt() + u.sqrt()).ln())
}

/// `Vol(T³)/(2π²)`.
pub const RENORM_CONSTANT: f64 = 1.0 / (2.0 * PI * PI);

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rate_branches() {
        assert_relative_eq!(gamma_rate(0.5, 1, 100.0).unwrap(), 0.1, max_relative = 1e-14);
        let e4 = 4f64.exp();
        assert_relative_eq!(gamma_rate(0.5, 3, e4).unwrap(), 2.0 * (-2f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(gamma_rate(0.5, 4, 1000.0).unwrap(), 0.1, max_relative = 1e-12);
        assert!(gamma_rate(0.5, 1, 1.0).is_err());
        assert_eq!(regime(1.0, 4).unwrap().regime, Regime::Critical);
        assert_eq!(regime(0.5, 3).unwrap().log_power, 0.5);
        assert_eq!(regime(0.5, 1).unwrap().exponent, -0.5);
    }

    #[test]
    fn critical_rate_dominates_neighbours() {
        for &t in &[3.0f64, 10.0, 1e3, 1e6] {
            let crit = t.powf(-0.5) * t.ln().sqrt();
            assert!(crit >= t.powf(-0.5));
            assert!(crit >= t.powf(-1.0 / (3.0 - 1.0)));
        }
    }

    #[test]
    fn eps_schedule_examples() {
        assert_relative_eq!(epsilon_schedule(0.5, 1, 100.0).unwrap(), 0.01);
        assert_relative_eq!(epsilon_schedule(0.5, 4, 1000.0).unwrap(), 0.01, max_relative = 1e-12);
        assert_relative_eq!(epsilon_schedule(1.0, 4, 37.0).unwrap(), 1.0 / 37.0);
    }

    #[test]
    fn psi_moment_examples() {
        assert_relative_eq!(psi_second_moment_symmetric(1.0, 0.5, 1.0).unwrap(), 2.0 / 1f64.exp(), max_relative = 1e-14);
        let big = psi_second_moment_symmetric(3.0, 0.7, 1e9).unwrap();
        assert_relative_eq!(big, sigma_sq_eigenfunction(3.0, 0.7).unwrap(), max_relative = 1e-8);
        assert!(psi_second_moment_symmetric(3.0, 0.7, 1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn sigma_examples() {
        assert_relative_eq!(sigma_sq_eigenfunction(FOUR_PI_SQ, 0.5).unwrap(), 1.0 / PI, max_relative = 1e-14);
        assert!(sigma_sq_eigenfunction(0.0, 0.5).is_err());
    }

    #[test]
    fn drift_variance_example() {
        let (s, r) = variance_const_drift(&[1], 1.0, &[1.0]).unwrap();
        assert_relative_eq!(s, 1.0 / (FOUR_PI_SQ + 1.0), max_relative = 1e-13);
        assert_relative_eq!(s, r, max_relative = 1e-12);
        let (s0, _) = variance_const_drift(&[1, 2], 0.5, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(s0, (FOUR_PI_SQ * 5.0).powf(-0.5), max_relative = 1e-14);
        assert!(variance_const_drift(&[0], 0.5, &[1.0]).is_err());
    }

    #[test]
    fn drift_moment_by_direct_integration() {
        // 2/T ∫_0^T (T-s) e^{-as} cos(θs) ds by Gauss-Legendre
        let (lambda, theta, alpha, t) = (FOUR_PI_SQ * 2.0, 3.1, 0.8, 7.0);
        let a = lambda.powf(alpha);
        let (x, w) = crate::quadrature::gauss_legendre(400);
        let direct: f64 = x
            .iter()
            .zip(&w)
            .map(|(u, wi)| {
                let s = u * t;
                wi * t * (t - s) * (-a * s).exp() * (theta * s).cos()
            })
            .sum::<f64>()
            * 2.0
            / t;
        let got = psi_second_moment_const_drift(lambda, theta, alpha, t).unwrap();
        assert_relative_eq!(got, direct, max_relative = 1e-10);
        assert_relative_eq!(
            psi_second_moment_const_drift(lambda, 0.0, alpha, t).unwrap(),
            psi_second_moment_symmetric(lambda, alpha, t).unwrap()
        );
    }

    #[test]
    fn bernstein_examples() {
        let p = DeviationParams::new(1.0, 0.0, 3.0, 1.0).unwrap();
        assert_relative_eq!(bernstein_bound(100.0, 1.0, &p).unwrap(), 2.0 * (-50f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(bernstein_bound(1.0, 1e-9, &p).unwrap(), 2.0, max_relative = 1e-12);
        let a = bernstein_bound(10.0, 0.5, &p).unwrap() / 2.0;
        let b = bernstein_bound(20.0, 0.5, &p).unwrap() / 2.0;
        assert_relative_eq!(b, a * a, max_relative = 1e-12);
        assert!(bernstein_bound(0.0, 1.0, &p).is_err());
    }

    #[test]
    fn m_functional_branches() {
        let zero = LpNorms::by_quadrature(3, 0.5, 8, |_| 0.0).unwrap();
        assert_eq!(m_functional(&zero, 0.5, 3).unwrap(), 0.0);
        // d = 2α branch is bounded by the p = 4 member of the grid
        let phi = |x: &[f64]| 2f64.sqrt() * (2.0 * PI * x[0]).cos();
        let n = LpNorms::by_quadrature(1, 0.5, 64, phi).unwrap();
        let l4 = n.grid.iter().find(|(p, _)| *p == 4.0).unwrap().1;
        assert!(m_functional(&n, 0.5, 1).unwrap() <= 16.0 * l4 + 1e-15);
        assert!(m_functional(&LpNorms::default(), 0.5, 3).is_err());
        assert!(m_functional(&LpNorms::default(), 0.5, 1).is_err());
    }

    #[test]
    fn spectral_sum_refuses_short_lists() {
        let shells = LatticeShells::new(3, 4).unwrap();
        assert!(matches!(spectral_sum(&shells, 1e-4, 1.5), Err(Error::Truncation { .. })));
        assert!(spectral_sum(&shells, 0.0, 1.5).is_err());
    }

    #[test]
    fn spectral_sum_zero_order_is_trace() {
        let shells = LatticeShells::new(1, 400).unwrap();
        let eps = 0.01;
        let direct: f64 = (1..=20).map(|k| 2.0 * (-2.0 * FOUR_PI_SQ * (k * k) as f64 * eps).exp()).sum();
        assert_relative_eq!(spectral_sum(&shells, eps, 0.0).unwrap(), direct, max_relative = 1e-12);
        assert!(spectral_sum_torus(1, 50.0, 1.0).unwrap() < 1e-300);
    }

    #[test]
    fn renorm_prediction_examples() {
        assert_relative_eq!(renorm_log_prediction(1.0, 0.5).unwrap(), (2f64.sqrt() + 1.0).ln() / (2.0 * PI * PI), max_relative = 1e-14);
        let eps: f64 = 1e-12;
        let lead = (1.0 / eps).ln() / (4.0 * PI * PI);
        assert!((renorm_log_prediction(1.0, eps).unwrap() / lead - 1.0).abs() < 0.03);
        assert!(renorm_log_prediction(1.0, 0.0).is_err());
    }

    #[test]
    fn weyl_example() {
        let shells = LatticeShells::for_gaussian_tail(3, 1e-2, 1e-9).unwrap();
        let (trace, weyl) = heat_trace_weyl_check(&shells, 1e-2).unwrap();
        assert_relative_eq!(weyl, (0.04 * PI).powf(-1.5), max_relative = 1e-14);
        assert!(trace > 0.0);
        let one = LatticeShells::new(1, 10).unwrap();
        assert!(heat_trace_weyl_check(&one, 1e-2).is_err());
    }
}
