//! Horizon sweep of a distance estimator against the invariant measure.

use serde::Serialize;

use super::{eps_for, fit_loglog_slope, mean_stderr, par_replicas, step_for};
use super::{Estimator, ExperimentConfig, ExperimentKind, ProxyMode, SlopeFit};
use crate::empirical::{CoefficientAccumulator, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::simulator::{PathStream, ProcessParams};
use crate::spectral::SpectralModel;
use crate::theory::{expected_spectral_proxy, regime, RatePrediction, Regime};
use crate::wasserstein::{spectral_h_proxy, w1_circle, wp_discrete, CircleMeasure};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub t: f64,
    /// Mean distance; for the spectral proxy, the square root of the mean proxy.
    pub mean: f64,
    pub stderr: f64,
    pub n_replicas: usize,
    pub estimator: Estimator,
    pub eps: Option<f64>,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub fit: SlopeFit,
    pub prediction: RatePrediction,
    /// Predicted local slope over the grid (includes the log correction at
    /// the critical dimension).
    pub expected_slope: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// `(T, mean²·T/log T)`; the primary diagnostic at the critical dimension.
    pub critical_ratio: Vec<(f64, f64)>,
}

/// Modes kept by the Monte-Carlo proxy: everything up to `λ = 8/ε`, so the
/// first dropped weight is below `e^{-16}`.
pub fn proxy_model(d: usize, eps: f64, truncation: Option<usize>) -> Result<SpectralModel> {
    match truncation {
        Some(n) => SpectralModel::build(d, n),
        None => SpectralModel::covering(d, 8.0 / eps),
    }
}

pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateReport> {
    cfg.validate()?;
    if cfg.kind != ExperimentKind::Rate {
        return Err(Error::Config("not a rate configuration".into()));
    }
    if cfg.t_grid.len() < 3 {
        return Err(Error::InvalidArgument("need >= 3 grid points for regression".into()));
    }
    let prediction = regime(cfg.alpha, cfg.dim)?;
    let threads = cfg.resolved_threads();
    let drift = cfg.drift_vector();
    let mut rows = Vec::with_capacity(cfg.t_grid.len());
    for (ti, &t) in cfg.t_grid.iter().enumerate() {
        let eps = match cfg.estimator {
            Estimator::SpectralProxy => Some(eps_for(cfg, t)?),
            _ => None,
        };
        let step = step_for(cfg, eps);
        if cfg.estimator == Estimator::SpectralProxy && cfg.proxy_mode == ProxyMode::Identity {
            let m = expected_spectral_proxy(cfg.alpha, &drift, t, eps.unwrap())?;
            rows.push(RateRow {
                t,
                mean: m.sqrt(),
                stderr: 0.0,
                n_replicas: 0,
                estimator: cfg.estimator,
                eps,
                step,
            });
            continue;
        }
        let params = ProcessParams::new(cfg.alpha, drift.clone(), t, step, cfg.start.clone())?;
        let key = StreamKey::new(cfg.seed).with_tag(ti as u64);
        let values = match cfg.estimator {
            Estimator::Circular => par_replicas(threads, cfg.replicas, |r| {
                let mut rng = key.replica(r as u64);
                let mut path = PathStream::new(&params, &mut rng)?;
                let mut pts = Vec::with_capacity(params.step_count());
                while let Some(x) = path.advance() {
                    pts.push(x[0]);
                }
                Ok(w1_circle(&CircleMeasure::empirical(&pts)?, &CircleMeasure::uniform()).0)
            })?,
            Estimator::DiscreteOt => {
                let uniform = DiscreteMeasure::uniform(cfg.dim, cfg.grid_n)?;
                par_replicas(threads, cfg.replicas, |r| {
                    let mut rng = key.replica(r as u64);
                    let binned = bin_stream(&params, &mut rng, cfg.grid_n)?;
                    Ok(wp_discrete(&binned, &uniform, cfg.p)?.value)
                })?
            }
            Estimator::SpectralProxy => {
                let eps = eps.unwrap();
                let model = proxy_model(cfg.dim, eps, cfg.truncation)?;
                par_replicas(threads, cfg.replicas, |r| {
                    let mut rng = key.replica(r as u64);
                    let spectrum = accumulate_stream(&params, &mut rng, &model)?;
                    spectral_h_proxy(&model, &spectrum, eps)
                })?
            }
        };
        let (mean, se) = mean_stderr(&values);
        let (mean, se) = if cfg.estimator == Estimator::SpectralProxy {
            let root = mean.sqrt();
            (root, if root > 0.0 { se / (2.0 * root) } else { 0.0 })
        } else {
            (mean, se)
        };
        rows.push(RateRow {
            t,
            mean,
            stderr: se,
            n_replicas: cfg.replicas,
            estimator: cfg.estimator,
            eps: eps.filter(|_| cfg.estimator == Estimator::SpectralProxy),
            step,
        });
    }
    let pts: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.t, r.mean, r.stderr)).collect();
    let fit = fit_loglog_slope(&pts)?;
    let log_mid = cfg.t_grid.iter().map(|t| t.ln()).sum::<f64>() / cfg.t_grid.len() as f64;
    let expected_slope = prediction.exponent + prediction.log_power / log_mid;
    let tolerance = cfg.tol.unwrap_or(match prediction.regime {
        Regime::Supercritical => 0.10,
        _ => 0.08,
    });
    let critical_ratio = rows
        .iter()
        .filter(|r| r.t > 1.0)
        .map(|r| (r.t, r.mean * r.mean * r.t / r.t.ln()))
        .collect();
    Ok(RateReport {
        pass: (fit.slope - expected_slope).abs() <= tolerance,
        rows,
        fit,
        prediction,
        expected_slope,
        tolerance,
        critical_ratio,
    })
}

/// Grid histogram of the path at `t_1..t_n`.
pub(crate) fn bin_stream<R: rand::Rng + ?Sized>(params: &ProcessParams, rng: &mut R, grid_n: usize) -> Result<DiscreteMeasure> {
    let d = params.dim();
    let cells = grid_n.pow(d as u32);
    let mut counts = vec![0u64; cells];
    let mut path = PathStream::new(params, rng)?;
    let mut n = 0u64;
    while let Some(x) = path.advance() {
        counts[crate::empirical::cell_index(grid_n, x)] += 1;
        n += 1;
    }
    let w = counts.iter().map(|&c| c as f64 / n as f64).collect();
    DiscreteMeasure::new(d, grid_n, w)
}

pub(crate) fn accumulate_stream<R: rand::Rng + ?Sized>(
    params: &ProcessParams,
    rng: &mut R,
    model: &SpectralModel,
) -> Result<crate::empirical::EmpiricalSpectrum> {
    let mut acc = CoefficientAccumulator::new(model, model.truncation())?;
    let mut path = PathStream::new(params, rng)?;
    while let Some(x) = path.advance() {
        acc.push(x);
    }
    Ok(acc.finish(params.effective_horizon()))
}
