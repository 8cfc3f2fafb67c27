//! Benchmark harness: `T` seeded trials per manifold, several estimators,
//! mean squared error and mean percentage error per cell.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationCache;
use crate::error::{Error, Result};
use crate::global::{estimate_global, GlobalConfig};
use crate::levina_bickel::{lb_global, LbConfig};
use crate::local::{default_k, LocalConfig, Method};
use crate::manifolds::{generate, ManifoldId};
use crate::rng::{derive_seed, DEFAULT_SEED};

/// Discard fraction used by the `+H` estimators unless overridden.
pub const DEFAULT_H_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    Basic,
    #[serde(rename = "B+H")]
    BasicH,
    Kernel,
    #[serde(rename = "K+H")]
    KernelH,
    #[serde(rename = "LB")]
    LevinaBickel,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Self::Basic,
        Self::BasicH,
        Self::Kernel,
        Self::KernelH,
        Self::LevinaBickel,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::Basic => "Basic",
            Self::BasicH => "B+H",
            Self::Kernel => "Kernel",
            Self::KernelH => "K+H",
            Self::LevinaBickel => "LB",
        }
    }

    pub fn needs_cache(self) -> bool {
        matches!(self, Self::Kernel | Self::KernelH)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "basic" => Ok(Self::Basic),
            "bh" | "b+h" => Ok(Self::BasicH),
            "kernel" => Ok(Self::Kernel),
            "kh" | "k+h" => Ok(Self::KernelH),
            "lb" => Ok(Self::LevinaBickel),
            other => Err(Error::Config(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub manifolds: Vec<ManifoldId>,
    pub trials: usize,
    pub n: usize,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    /// Neighbour count for the angle estimators; `None` means `default_k(n)`.
    pub k: Option<usize>,
    /// Centre count; `None` means `default_c(n)`.
    pub c: Option<usize>,
    pub h_fraction: f64,
    pub lb: LbConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            manifolds: ManifoldId::ALL.to_vec(),
            trials: 50,
            n: 2500,
            estimators: Estimator::ALL.to_vec(),
            seed: DEFAULT_SEED,
            k: None,
            c: None,
            h_fraction: DEFAULT_H_FRACTION,
            lb: LbConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn resolved_k(&self) -> usize {
        self.k.unwrap_or_else(|| default_k(self.n))
    }

    /// Largest ambient dimension among the configured manifolds.
    pub fn max_ambient(&self) -> usize {
        self.manifolds.iter().map(|m| m.spec().m).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub manifold: ManifoldId,
    pub estimator: Estimator,
    pub true_d: u32,
    /// Per-trial estimates in trial order.
    pub estimates: Vec<u32>,
    pub mse: f64,
    /// Percent.
    pub mpe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub k: usize,
    pub manifolds: Vec<ManifoldId>,
    pub estimators: Vec<Estimator>,
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    pub fn cell(&self, manifold: ManifoldId, estimator: Estimator) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.manifold == manifold && c.estimator == estimator)
    }
}

/// `(1/T) Σ (d̂_i − d_i)²`.
pub fn mse(estimates: &[u32], truths: &[u32]) -> f64 {
    assert_eq!(estimates.len(), truths.len());
    let sum: f64 = estimates
        .iter()
        .zip(truths)
        .map(|(&e, &d)| (f64::from(e) - f64::from(d)).powi(2))
        .sum();
    sum / estimates.len() as f64
}

/// `(100/T) Σ |d̂_i − d_i| / d_i`.
pub fn mpe(estimates: &[u32], truths: &[u32]) -> f64 {
    assert_eq!(estimates.len(), truths.len());
    let sum: f64 = estimates
        .iter()
        .zip(truths)
        .map(|(&e, &d)| (f64::from(e) - f64::from(d)).abs() / f64::from(d))
        .sum();
    100.0 * sum / estimates.len() as f64
}

fn validate(cfg: &BenchConfig, cache: Option<&CalibrationCache>) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    if cfg.n < 10 {
        return Err(Error::Config(format!("n = {} is below the minimum of 10", cfg.n)));
    }
    if !(0.0..1.0).contains(&cfg.h_fraction) {
        return Err(Error::Config(format!(
            "discard fraction {} is outside [0, 1)",
            cfg.h_fraction
        )));
    }
    if cfg.estimators.iter().any(|e| e.needs_cache()) {
        let cache = cache.ok_or_else(|| {
            Error::CalibrationMismatch("kernel estimators need a calibration cache".into())
        })?;
        cache.check_compatible(cfg.resolved_k(), cfg.max_ambient() as u32)?;
    }
    Ok(())
}

fn run_trial(
    cfg: &BenchConfig,
    manifold: ManifoldId,
    trial: usize,
    cache: Option<&CalibrationCache>,
) -> Result<Vec<u32>> {
    let path = [u64::from(manifold.number()), trial as u64];
    let cloud = generate(manifold, cfg.n, derive_seed(cfg.seed, &path))?;
    let center_seed = derive_seed(cfg.seed, &[path[0], path[1], 1]);
    cfg.estimators
        .iter()
        .map(|&est| {
            let (method, fraction) = match est {
                Estimator::LevinaBickel => return Ok(lb_global(&cloud, &cfg.lb)?.d_hat),
                Estimator::Basic => (Method::Basic, 0.0),
                Estimator::BasicH => (Method::Basic, cfg.h_fraction),
                Estimator::Kernel => (Method::Kernel, 0.0),
                Estimator::KernelH => (Method::Kernel, cfg.h_fraction),
            };
            let global = GlobalConfig {
                c: cfg.c,
                discard_fraction: fraction,
                local: LocalConfig {
                    k: Some(cfg.resolved_k()),
                    d_max: None,
                    method,
                },
                seed: center_seed,
                ..GlobalConfig::default()
            };
            Ok(estimate_global(&cloud, &global, cache)?.d_hat)
        })
        .collect()
}

/// Runs every (manifold, trial) and tabulates the errors. Trial `t` of
/// manifold `μ` draws its data from the stream `(seed, μ, t)`.
pub fn run_bench(cfg: &BenchConfig, cache: Option<&CalibrationCache>) -> Result<BenchReport> {
    validate(cfg, cache)?;
    let mut cells = Vec::with_capacity(cfg.manifolds.len() * cfg.estimators.len());
    for &manifold in &cfg.manifolds {
        let per_trial = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, manifold, t, cache))
            .collect::<Result<Vec<_>>>()?;
        let truth = manifold.spec().d;
        for (col, &estimator) in cfg.estimators.iter().enumerate() {
            let estimates: Vec<u32> = per_trial.iter().map(|row| row[col]).collect();
            let truths = vec![truth; estimates.len()];
            cells.push(BenchCell {
                manifold,
                estimator,
                true_d: truth,
                mse: mse(&estimates, &truths),
                mpe: mpe(&estimates, &truths),
                estimates,
            });
        }
    }
    Ok(BenchReport {
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        k: cfg.resolved_k(),
        manifolds: cfg.manifolds.clone(),
        estimators: cfg.estimators.clone(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

fn markdown_table(report: &BenchReport, title: &str, value: impl Fn(&BenchCell) -> f64) -> String {
    let mut out = format!("**{title}**\n\n| Estimator |");
    for m in &report.manifolds {
        let _ = write!(out, " {m} |");
    }
    out.push_str(" Mean |\n|---|");
    for _ in &report.manifolds {
        out.push_str("---|");
    }
    out.push_str("---|\n");
    for &est in &report.estimators {
        let _ = write!(out, "| {est} |");
        let mut total = 0.0;
        for &m in &report.manifolds {
            let v = report.cell(m, est).map(&value).unwrap_or(f64::NAN);
            total += v;
            let _ = write!(out, " {v:.2} |");
        }
        let mean = total / report.manifolds.len() as f64;
        let _ = writeln!(out, " {mean:.2} |");
    }
    out
}

pub fn render_report(report: &BenchReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Json => serde_json::to_string_pretty(report)? + "\n",
        ReportFormat::Csv => {
            let mut out = String::from("estimator,manifold,true_d,trials,mse,mpe\n");
            for &est in &report.estimators {
                for &m in &report.manifolds {
                    if let Some(cell) = report.cell(m, est) {
                        let _ = writeln!(
                            out,
                            "{est},{m},{},{},{},{}",
                            cell.true_d,
                            cell.estimates.len(),
                            cell.mse,
                            cell.mpe
                        );
                    }
                }
            }
            out
        }
        ReportFormat::Markdown => {
            let header = format!(
                "n = {}, T = {}, k = {}, seed = {}\n\n",
                report.n, report.trials, report.k, report.seed
            );
            header
                + &markdown_table(report, "Mean square error", |c| c.mse)
                + "\n"
                + &markdown_table(report, "Mean percentage error", |c| c.mpe)
        }
    })
}
