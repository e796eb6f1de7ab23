//! Experiment orchestration: horizon sweeps, regression, renormalization
//! trend, tail-bound dominance and the deterministic identity table.
//!
//! Replicas run on a rayon pool; each replica owns a counter-based stream
//! and results are collected in replica order, so outputs do not depend on
//! the worker count.

mod config;
mod deviation;
mod fit;
mod output;
mod rate;
mod renorm;
mod selftest;

pub use config::{parse_tgrid, EpsPolicy, Estimator, ExperimentConfig, ExperimentKind, ProxyMode, StepPolicy, THREADS_ENV};
pub use deviation::{run_deviation_experiment, DeviationReport, DeviationRow, DeviationTable, GaussianCheck};
pub use fit::{fit_loglog_slope, weighted_line, SlopeFit};
pub use output::{csv_float, summary_path, write_csv, write_summary, Summary};
pub use rate::{run_rate_experiment, RateReport, RateRow};
pub use renorm::{run_renorm_experiment, OtCrossCheck, RenormReport, RenormRow};
pub use selftest::{run_selftest, SelftestReport, SelftestRow};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::theory::{epsilon_log_power, epsilon_schedule};

/// Runs `f(r)` for `r in 0..n` on a pool of `threads` workers and returns
/// the results in index order.
pub fn par_replicas<T, F>(threads: Option<usize>, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// Sample mean and its standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mollification time at horizon `t` under the configured policy.
pub fn eps_for(cfg: &ExperimentConfig, t: f64) -> Result<f64> {
    match cfg.eps {
        EpsPolicy::Schedule => epsilon_schedule(cfg.alpha, cfg.dim, t),
        EpsPolicy::LogPower(g) => epsilon_log_power(t, g),
        EpsPolicy::Fixed(e) => Ok(e),
    }
}

/// Path step: fixed, or `0.01` shrunk to `ε/4` when the estimator mollifies.
pub fn step_for(cfg: &ExperimentConfig, eps: Option<f64>) -> f64 {
    match (cfg.step, eps) {
        (StepPolicy::Fixed(s), _) => s,
        (StepPolicy::Auto, Some(e)) => (0.25 * e).min(0.01),
        (StepPolicy::Auto, None) => 0.01,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicas_come_back_in_order() {
        let a = par_replicas(Some(1), 50, |r| Ok(r * r)).unwrap();
        let b = par_replicas(Some(3), 50, |r| Ok(r * r)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
    }

    #[test]
    fn mean_and_error() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn auto_step() {
        let cfg = ExperimentConfig::defaults(ExperimentKind::Rate);
        assert_eq!(step_for(&cfg, None), 0.01);
        assert_eq!(step_for(&cfg, Some(0.02)), 0.005);
        assert_eq!(step_for(&cfg, Some(1.0)), 0.01);
    }
}
