use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use torlab_core::harness::{
    run_deviation_experiment, run_rate_experiment, run_renorm_experiment, run_selftest, summary_path, write_summary, Summary,
    ExperimentConfig, ExperimentKind,
};

/// Experiments on subordinated diffusions over flat tori.
#[derive(Parser)]
#[command(name = "torlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep horizons and fit the log-log slope of the distance to equilibrium.
    Rate(Opts),
    /// Track T·E[W2²]/log T against its limit in the critical case.
    Renorm(Opts),
    /// Compare empirical tails with the Bernstein-type bound.
    Deviation(Opts),
    /// Check closed-form identities and solver agreement.
    Selftest {
        /// Write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct Opts {
    /// key=value file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    /// Comma-separated drift components.
    #[arg(long, allow_hyphen_values = true)]
    drift: Option<String>,
    /// `a:b:dyadic` or a comma list.
    #[arg(long)]
    tgrid: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    /// circular, discrete_ot or spectral_proxy.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    grid_n: Option<String>,
    /// `schedule`, `logpow:γ` or a fixed value.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// CSV path; a `.summary.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<String>,
    /// Worker count (falls back to TORLAB_THREADS).
    #[arg(long)]
    threads: Option<String>,
    /// `auto` or a fixed path step.
    #[arg(long)]
    step: Option<String>,
    /// montecarlo or identity.
    #[arg(long)]
    proxy_mode: Option<String>,
    /// Transport exponent for discrete_ot.
    #[arg(long)]
    p: Option<String>,
    /// Slope tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// Retained eigenpairs (`auto` or a count).
    #[arg(long)]
    truncation: Option<String>,
    /// Eigenfunction index for the deviation test function.
    #[arg(long)]
    mode: Option<String>,
    /// `stationary` or comma-separated coordinates.
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    ot_check_replicas: Option<String>,
}

impl Opts {
    fn into_config(self, kind: ExperimentKind) -> torlab_core::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::defaults(kind);
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let pairs = [
            ("alpha", self.alpha),
            ("dim", self.dim),
            ("drift", self.drift),
            ("tgrid", self.tgrid),
            ("replicas", self.replicas),
            ("estimator", self.estimator),
            ("grid_n", self.grid_n),
            ("eps", self.eps),
            ("seed", self.seed),
            ("out", self.out),
            ("threads", self.threads),
            ("step", self.step),
            ("proxy_mode", self.proxy_mode),
            ("p", self.p),
            ("tol", self.tol),
            ("truncation", self.truncation),
            ("mode", self.mode),
            ("start", self.start),
            ("ot_check_replicas", self.ot_check_replicas),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(cli: Cli) -> torlab_core::Result<bool> {
    match cli.command {
        Command::Selftest { out } => {
            let report = run_selftest();
            print!("{}", report.table());
            if let Some(path) = out {
                report.write_csv(&path)?;
                write_summary(&summary_path(&path), &report)?;
            }
            Ok(report.pass)
        }
        Command::Rate(opts) => {
            let cfg = opts.into_config(ExperimentKind::Rate)?;
            let report = run_rate_experiment(&cfg)?;
            println!("T,mean,stderr,n_replicas,estimator");
            for r in &report.rows {
                println!("{},{},{},{},{}", r.t, r.mean, r.stderr, r.n_replicas, r.estimator.name());
            }
            println!(
                "slope {:.4} ± {:.4}, expected {:.4} ± {:.2}: {}",
                report.fit.slope,
                report.fit.slope_stderr,
                report.expected_slope,
                report.tolerance,
                verdict(report.pass)
            );
            if let Some(out) = &cfg.out {
                report.write_csv(out)?;
                write_summary(&summary_path(out), &Summary { config: &cfg, report: &report })?;
            }
            Ok(report.pass)
        }
        Command::Renorm(opts) => {
            let cfg = opts.into_config(ExperimentKind::Renorm)?;
            let report = run_renorm_experiment(&cfg)?;
            println!("T,ratio,stderr");
            for r in &report.rows {
                println!("{},{},{}", r.t, r.ratio, r.stderr);
            }
            if let Some(c) = &report.ot_check {
                println!("grid transport at T={} (n={}): ratio {:.5}", c.t, c.grid_n, c.ratio);
            }
            println!(
                "target {:.6}; closer at end: {}; gap at end {:.1}%: {}",
                report.target,
                report.closer_at_end,
                100.0 * report.relative_gap_at_end,
                verdict(report.pass)
            );
            if let Some(out) = &cfg.out {
                report.write_csv(out)?;
                write_summary(&summary_path(out), &Summary { config: &cfg, report: &report })?;
            }
            Ok(report.pass)
        }
        Command::Deviation(opts) => {
            let cfg = opts.into_config(ExperimentKind::Deviation)?;
            let report = run_deviation_experiment(&cfg)?;
            for table in &report.tables {
                println!("T={} replicas={}", table.t, table.replicas);
                println!("xi,empirical_tail,cp_upper,bound");
                for r in &table.rows {
                    println!("{},{},{},{}", r.xi, r.empirical_tail, r.cp_upper, r.bound);
                }
            }
            println!(
                "gamma {:.4e}; validation {}/{}: {}",
                report.params.gamma,
                report.validation_passed,
                report.validation_points,
                verdict(report.pass)
            );
            if let Some(out) = &cfg.out {
                report.write_csv(out)?;
                write_summary(&summary_path(out), &Summary { config: &cfg, report: &report })?;
            }
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
