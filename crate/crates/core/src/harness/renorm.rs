//! Log-renormalized squared distance in the critical case `(α, d) = (1/2, 3)`.

use serde::Serialize;

use super::rate::{accumulate_stream, bin_stream, proxy_model};
use super::{eps_for, mean_stderr, par_replicas, step_for};
use super::{ExperimentConfig, ExperimentKind, ProxyMode};
use crate::empirical::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::simulator::ProcessParams;
use crate::theory::{expected_spectral_proxy, RENORM_CONSTANT};
use crate::wasserstein::{spectral_h_proxy, wp_discrete};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenormRow {
    pub t: f64,
    /// `T·E[proxy]/log T`.
    pub ratio: f64,
    pub stderr: f64,
    pub eps: f64,
}

/// Exact grid transport at the smallest horizon, for orientation only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtCrossCheck {
    pub t: f64,
    pub grid_n: usize,
    pub replicas: usize,
    pub mean_w2_sq: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenormReport {
    pub rows: Vec<RenormRow>,
    pub target: f64,
    /// `|r(T_max) - c| < |r(T_min) - c|`.
    pub closer_at_end: bool,
    /// `|r(T_max) - c| / c`.
    pub relative_gap_at_end: f64,
    pub within_30pct: bool,
    /// Fraction of consecutive pairs along which `r` moves toward the target.
    pub approach_fraction: f64,
    pub ot_check: Option<OtCrossCheck>,
    pub pass: bool,
}

pub fn run_renorm_experiment(cfg: &ExperimentConfig) -> Result<RenormReport> {
    cfg.validate()?;
    if cfg.kind != ExperimentKind::Renorm {
        return Err(Error::Config("not a renorm configuration".into()));
    }
    if (cfg.alpha - 0.5).abs() > 1e-12 || cfg.dim != 3 || cfg.has_drift() {
        return Err(Error::Config("renormalization study needs alpha = 1/2, dim = 3 and zero drift".into()));
    }
    if cfg.t_grid.len() < 2 || cfg.t_grid[0] <= 1.0 {
        return Err(Error::Config("renormalization needs at least two horizons above 1".into()));
    }
    let threads = cfg.resolved_threads();
    let drift = cfg.drift_vector();
    let mut rows = Vec::with_capacity(cfg.t_grid.len());
    for (ti, &t) in cfg.t_grid.iter().enumerate() {
        let eps = eps_for(cfg, t)?;
        let scale = t / t.ln();
        let (mean, se) = match cfg.proxy_mode {
            ProxyMode::Identity => (expected_spectral_proxy(cfg.alpha, &drift, t, eps)?, 0.0),
            ProxyMode::MonteCarlo => {
                let model = proxy_model(cfg.dim, eps, cfg.truncation)?;
                let params = ProcessParams::new(cfg.alpha, drift.clone(), t, step_for(cfg, Some(eps)), cfg.start.clone())?;
                let key = StreamKey::new(cfg.seed).with_tag(ti as u64);
                let values = par_replicas(threads, cfg.replicas, |r| {
                    let mut rng = key.replica(r as u64);
                    spectral_h_proxy(&model, &accumulate_stream(&params, &mut rng, &model)?, eps)
                })?;
                mean_stderr(&values)
            }
        };
        rows.push(RenormRow {
            t,
            ratio: scale * mean,
            stderr: scale * se,
            eps,
        });
    }

    let ot_check = if cfg.ot_check_replicas > 0 {
        let t = cfg.t_grid[0];
        let params = ProcessParams::new(cfg.alpha, drift.clone(), t, step_for(cfg, None), cfg.start.clone())?;
        let key = StreamKey::new(cfg.seed).with_tag(u64::MAX);
        let uniform = DiscreteMeasure::uniform(cfg.dim, cfg.grid_n)?;
        let values = par_replicas(threads, cfg.ot_check_replicas, |r| {
            let mut rng = key.replica(r as u64);
            let binned = bin_stream(&params, &mut rng, cfg.grid_n)?;
            Ok(wp_discrete(&binned, &uniform, 2.0)?.value.powi(2))
        })?;
        let (m, _) = mean_stderr(&values);
        Some(OtCrossCheck {
            t,
            grid_n: cfg.grid_n,
            replicas: cfg.ot_check_replicas,
            mean_w2_sq: m,
            ratio: m * t / t.ln(),
        })
    } else {
        None
    };

    let c = RENORM_CONSTANT;
    let first = rows.first().unwrap().ratio;
    let last = rows.last().unwrap().ratio;
    let closer_at_end = (last - c).abs() < (first - c).abs();
    let relative_gap_at_end = (last - c).abs() / c;
    let within_30pct = relative_gap_at_end < 0.30;
    let approach = rows
        .windows(2)
        .filter(|w| (w[1].ratio - c).abs() < (w[0].ratio - c).abs())
        .count();
    Ok(RenormReport {
        approach_fraction: approach as f64 / (rows.len() - 1) as f64,
        pass: closer_at_end && within_30pct,
        rows,
        target: c,
        closer_at_end,
        relative_gap_at_end,
        within_30pct,
        ot_check,
    })
}
