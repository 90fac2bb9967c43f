//! Split Gelman-Rubin potential scale reduction.
//!
//! The draws here are exact and i.i.d., so the diagnostic is a sanity gate
//! on the sampling code rather than a convergence test in the MCMC sense.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate applied to every monitored stream.
pub const RC_THRESHOLD: f64 = 1.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoredStream {
    pub name: String,
    /// Potential scale reduction, clipped below at 1.
    pub rc: f64,
    /// Unclipped estimate.
    pub raw_rc: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub streams: Vec<MonitoredStream>,
    pub passed: bool,
}

impl ConvergenceReport {
    pub fn new() -> Self {
        ConvergenceReport {
            streams: Vec::new(),
            passed: true,
        }
    }

    pub fn push(&mut self, name: impl Into<String>, raw_rc: f64) {
        let rc = if raw_rc.is_nan() { raw_rc } else { raw_rc.max(1.0) };
        self.passed &= rc < RC_THRESHOLD;
        self.streams.push(MonitoredStream {
            name: name.into(),
            rc,
            raw_rc,
        });
    }

    pub fn max_rc(&self) -> f64 {
        self.streams.iter().map(|s| s.rc).fold(1.0, f64::max)
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Potential scale reduction of `draws` split into `n_chains` consecutive
/// chains of equal length; trailing draws that do not fill a chain are
/// dropped.
pub fn split_rhat(draws: &[f64], n_chains: usize) -> Result<f64> {
    if n_chains < 2 {
        return Err(Error::InvalidArgument("need at least two chains".into()));
    }
    let len = draws.len() / n_chains;
    if len < 2 {
        return Err(Error::TooFewSamples {
            needed: 2 * n_chains,
            got: draws.len(),
        });
    }
    let stats: Vec<(f64, f64)> = draws
        .chunks_exact(len)
        .take(n_chains)
        .map(mean_var)
        .collect();
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let n = len as f64;
    let between = n * mean_var(&means).1;
    let within = stats.iter().map(|s| s.1).sum::<f64>() / n_chains as f64;

    if within == 0.0 {
        // Constant chains: identical constants agree perfectly.
        return Ok(if between == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let pooled = (n - 1.0) / n * within + between / n;
    Ok((pooled / within).sqrt())
}

/// Split-chain diagnostic on one stream of draws.
pub fn gelman_rubin(draws: &[f64], n_chains: usize) -> Result<ConvergenceReport> {
    let rc = split_rhat(draws, n_chains)?;
    let mut report = ConvergenceReport::new();
    report.push("draws", rc);
    Ok(report)
}
