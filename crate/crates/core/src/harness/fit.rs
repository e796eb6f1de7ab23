//! Log-log regression.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Least squares of `log value` on `log T`.
///
/// Weights are `(value/stderr)²`; if any standard error is zero the fit is
/// unweighted. The slope error is scaled by the residual variance, so an
/// exact power law returns an error near zero.
pub fn fit_loglog_slope(points: &[(f64, f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return invalid("need >= 3 grid points for regression");
    }
    if points.iter().any(|&(t, v, s)| !(t > 0.0) || !(v > 0.0) || !(s >= 0.0)) {
        return invalid("regression needs positive T and values, nonnegative errors");
    }
    let unweighted = points.iter().any(|p| p.2 == 0.0);
    let rows: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(t, v, s)| {
            let w = if unweighted { 1.0 } else { (v / s).powi(2) };
            (t.ln(), v.ln(), w)
        })
        .collect();
    Ok(weighted_line(&rows))
}

/// Weighted least-squares line through `(x, y, w)`.
pub fn weighted_line(rows: &[(f64, f64, f64)]) -> SlopeFit {
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let mx = rows.iter().map(|r| r.2 * r.0).sum::<f64>() / sw;
    let my = rows.iter().map(|r| r.2 * r.1).sum::<f64>() / sw;
    let sxx: f64 = rows.iter().map(|r| r.2 * (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| r.2 * (r.0 - mx) * (r.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = rows
        .iter()
        .map(|r| r.2 * (r.1 - intercept - slope * r.0).powi(2))
        .sum();
    let dof = (rows.len() as f64 - 2.0).max(1.0);
    SlopeFit {
        slope,
        intercept,
        slope_stderr: (rss / dof / sxx).sqrt(),
    }
}
