//! Experiment configuration: defaults per kind, `key=value` files and
//! per-key overrides (the CLI feeds its flags through [`ExperimentConfig::set`]).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulator::Start;

/// Environment variable consulted for the worker count when none is given.
pub const THREADS_ENV: &str = "TORLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rate,
    Renorm,
    Deviation,
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Circular,
    DiscreteOt,
    SpectralProxy,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Circular => "circular",
            Estimator::DiscreteOt => "discrete_ot",
            Estimator::SpectralProxy => "spectral_proxy",
        }
    }
}

/// How the mollification time ε depends on the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsPolicy {
    /// `1/T` up to the critical dimension, `T^{-2/(d-2α)}` above it.
    Schedule,
    /// `log^γ T / T`.
    LogPower(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepPolicy {
    /// `0.01`, or `min(0.01, ε/4)` when the estimator mollifies.
    Auto,
    Fixed(f64),
}

/// Source of `E[proxy]` for the spectral estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxyMode {
    /// Average over simulated replicas.
    MonteCarlo,
    /// Closed-form second moments of the coefficients (stationary start).
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub alpha: f64,
    pub dim: usize,
    /// Empty means zero drift.
    pub drift: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    pub step: StepPolicy,
    pub estimator: Estimator,
    pub grid_n: usize,
    /// Number of retained eigenpairs; `None` picks one from ε.
    pub truncation: Option<usize>,
    pub eps: EpsPolicy,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub proxy_mode: ProxyMode,
    /// Transport exponent for the discrete estimator.
    pub p: f64,
    /// Slope tolerance; `None` picks the regime default.
    pub tol: Option<f64>,
    /// Eigenfunction index of the deviation test function.
    pub mode_index: usize,
    /// Replicas of the exact grid transport cross-check in the renorm study.
    pub ot_check_replicas: usize,
    #[serde(skip)]
    pub start: Start,
}

fn dyadic(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k as i32)).collect()
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind,
            alpha: 0.5,
            dim: 1,
            drift: Vec::new(),
            t_grid: dyadic(6, 14),
            replicas: 200,
            step: StepPolicy::Auto,
            estimator: Estimator::Circular,
            grid_n: 256,
            truncation: None,
            eps: EpsPolicy::Schedule,
            seed: 1,
            out: None,
            threads: None,
            proxy_mode: ProxyMode::MonteCarlo,
            p: 1.0,
            tol: None,
            mode_index: 1,
            ot_check_replicas: 2,
            start: Start::Stationary,
        };
        match kind {
            ExperimentKind::Renorm => ExperimentConfig {
                dim: 3,
                t_grid: dyadic(8, 14),
                estimator: Estimator::SpectralProxy,
                grid_n: 16,
                eps: EpsPolicy::LogPower(4.0),
                p: 2.0,
                ..base
            },
            ExperimentKind::Deviation => ExperimentConfig {
                t_grid: vec![50.0, 200.0],
                replicas: 10_000,
                ..base
            },
            _ => base,
        }
    }

    /// Reads `key=value` lines; `#` starts a comment, blank lines are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_str(&text)
    }

    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Sets one option from its textual form. Keys use the flag names
    /// without dashes (`grid-n` and `grid_n` are both accepted).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        match key.as_str() {
            "kind" => {
                self.kind = match value {
                    "rate" => ExperimentKind::Rate,
                    "renorm" => ExperimentKind::Renorm,
                    "deviation" => ExperimentKind::Deviation,
                    "selftest" => ExperimentKind::Selftest,
                    _ => return Err(Error::Config(format!("unknown kind {value:?}"))),
                }
            }
            "alpha" => self.alpha = num(&key, value)?,
            "dim" | "d" => self.dim = num(&key, value)?,
            "drift" => self.drift = list(&key, value)?,
            "tgrid" | "t_grid" => self.t_grid = parse_tgrid(value)?,
            "replicas" => self.replicas = num(&key, value)?,
            "step" => {
                self.step = if value == "auto" {
                    StepPolicy::Auto
                } else {
                    StepPolicy::Fixed(num(&key, value)?)
                }
            }
            "estimator" => {
                self.estimator = match value {
                    "circular" => Estimator::Circular,
                    "discrete_ot" | "discrete-ot" => Estimator::DiscreteOt,
                    "spectral_proxy" | "spectral-proxy" => Estimator::SpectralProxy,
                    _ => return Err(Error::Config(format!("unknown estimator {value:?}"))),
                }
            }
            "grid_n" => self.grid_n = num(&key, value)?,
            "truncation" => {
                self.truncation = if value == "auto" { None } else { Some(num(&key, value)?) }
            }
            "eps" => self.eps = parse_eps(value)?,
            "seed" => self.seed = num(&key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "threads" => self.threads = Some(num(&key, value)?),
            "proxy_mode" => {
                self.proxy_mode = match value {
                    "montecarlo" | "monte_carlo" => ProxyMode::MonteCarlo,
                    "identity" => ProxyMode::Identity,
                    _ => return Err(Error::Config(format!("unknown proxy mode {value:?}"))),
                }
            }
            "p" => self.p = num(&key, value)?,
            "tol" => self.tol = Some(num(&key, value)?),
            "mode" | "mode_index" => self.mode_index = num(&key, value)?,
            "ot_check_replicas" => self.ot_check_replicas = num(&key, value)?,
            "start" => {
                self.start = if value == "stationary" {
                    Start::Stationary
                } else {
                    Start::Point(list(&key, value)?)
                }
            }
            _ => return Err(Error::Config(format!("unknown option {key:?}"))),
        }
        Ok(())
    }

    /// Drift padded to `dim` zeros when unset.
    pub fn drift_vector(&self) -> Vec<f64> {
        if self.drift.is_empty() {
            vec![0.0; self.dim]
        } else {
            self.drift.clone()
        }
    }

    pub fn has_drift(&self) -> bool {
        self.drift.iter().any(|&z| z != 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0,1], got {}", self.alpha));
        }
        if !(1..=crate::spectral::MAX_DIM).contains(&self.dim) {
            return bad(format!("dim must lie in 1..={}, got {}", crate::spectral::MAX_DIM, self.dim));
        }
        if !self.drift.is_empty() && self.drift.len() != self.dim {
            return bad(format!("drift has {} components for dim {}", self.drift.len(), self.dim));
        }
        if self.has_drift() && !(self.alpha > 0.5) {
            return bad(format!("nonzero drift needs alpha in (1/2,1], got {}", self.alpha));
        }
        if self.kind == ExperimentKind::Selftest {
            return Ok(());
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t > 0.0)) {
            return bad("horizons must be positive".into());
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("horizon grid must be strictly increasing".into());
        }
        let need_mc = !(self.estimator == Estimator::SpectralProxy && self.proxy_mode == ProxyMode::Identity)
            || self.kind == ExperimentKind::Deviation;
        if need_mc && self.replicas < 2 {
            return bad(format!("need at least 2 replicas, got {}", self.replicas));
        }
        if self.estimator == Estimator::Circular && self.dim != 1 && self.kind == ExperimentKind::Rate {
            return bad(format!("circular estimator requires dim 1, got {}", self.dim));
        }
        if self.estimator == Estimator::DiscreteOt && self.grid_n.checked_pow(self.dim as u32).is_none_or(|c| c > crate::wasserstein::EXACT_CELL_CAP) {
            return bad(format!("grid_n^dim exceeds {} cells", crate::wasserstein::EXACT_CELL_CAP));
        }
        if let StepPolicy::Fixed(s) = self.step {
            if !(s > 0.0) {
                return bad(format!("step must be positive, got {s}"));
            }
        }
        match self.eps {
            EpsPolicy::Fixed(e) if !(e > 0.0) => return bad(format!("eps must be positive, got {e}")),
            EpsPolicy::LogPower(g) if !(g >= 0.0) => return bad(format!("log power must be nonnegative, got {g}")),
            _ => {}
        }
        if !(self.p >= 1.0) {
            return bad(format!("transport exponent must be >= 1, got {}", self.p));
        }
        if self.proxy_mode == ProxyMode::Identity && self.start != Start::Stationary {
            return bad("identity proxy mode needs a stationary start".into());
        }
        if let Start::Point(x) = &self.start {
            if x.len() != self.dim {
                return bad(format!("start point has {} components for dim {}", x.len(), self.dim));
            }
        }
        Ok(())
    }

    /// Explicit `threads`, else the environment variable, else rayon's default.
    pub fn resolved_threads(&self) -> Option<usize> {
        self.threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key}={value:?}")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|s| parse_number(s.trim()).ok_or_else(|| Error::Config(format!("cannot parse {key}={value:?}")))).collect()
}

/// Plain floats or powers written `b^k`.
fn parse_number(s: &str) -> Option<f64> {
    if let Some((b, k)) = s.split_once('^') {
        let b: f64 = b.trim().parse().ok()?;
        let k: f64 = k.trim().parse().ok()?;
        Some(b.powf(k))
    } else {
        s.parse().ok()
    }
}

/// `a:b:dyadic` (doubling from `a` while `<= b`) or a comma list.
pub fn parse_tgrid(value: &str) -> Result<Vec<f64>> {
    let err = || Error::Config(format!("cannot parse T grid {value:?}"));
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [a, b, "dyadic"] => {
            let a = parse_number(a.trim()).ok_or_else(err)?;
            let b = parse_number(b.trim()).ok_or_else(err)?;
            if !(a > 0.0) || b < a {
                return Err(err());
            }
            let mut out = Vec::new();
            let mut t = a;
            while t <= b * (1.0 + 1e-12) {
                out.push(t);
                t *= 2.0;
            }
            Ok(out)
        }
        [single] => single.split(',').map(|s| parse_number(s.trim()).ok_or_else(err)).collect(),
        _ => Err(err()),
    }
}

fn parse_eps(value: &str) -> Result<EpsPolicy> {
    let err = || Error::Config(format!("cannot parse eps policy {value:?}"));
    if value == "schedule" || value == "paper_schedule" {
        return Ok(EpsPolicy::Schedule);
    }
    if let Some(g) = value.strip_prefix("logpow:") {
        return Ok(EpsPolicy::LogPower(g.parse().map_err(|_| err())?));
    }
    let v = value.strip_prefix("fixed:").unwrap_or(value);
    Ok(EpsPolicy::Fixed(parse_number(v).ok_or_else(err)?))
}
