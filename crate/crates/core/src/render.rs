//! Human-readable output.
//!
//! Values are shown in percentage points. The MU is shown with two
//! significant digits. Point estimates and means are rounded to the power of
//! ten at or above MU/10, so no digit is finer than the uncertainty allows.
//! HPD endpoints use the MU's own resolution.

use serde::{Deserialize, Serialize};

use crate::metrics::MetricPosterior;

const PP: f64 = 100.0;

fn round_to(x: f64, step: f64) -> f64 {
    let r = (x / step).round() * step;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn decimals_for(step: f64) -> usize {
    (-step.log10().round()).max(0.0) as usize
}

/// Rounds `x` to `digits` significant digits; returns the value and the
/// step it was rounded to.
fn round_sig(x: f64, digits: i32) -> (f64, f64) {
    let mut step = 10f64.powi(x.abs().log10().floor() as i32 - digits + 1);
    let mut r = round_to(x, step);
    // 9.96 rounds up to 10.0, which needs a coarser step.
    let recheck = 10f64.powi(r.abs().log10().floor() as i32 - digits + 1);
    if recheck > step {
        step = recheck;
        r = round_to(x, step);
    }
    (r, step)
}

/// Rounding step (in pp) of a MU rendered at two significant digits.
pub fn mu_step(mu: f64) -> Option<f64> {
    let pp = mu * PP;
    (pp > 0.0 && pp.is_finite()).then(|| round_sig(pp, 2).1)
}

/// Rounding step (in pp) for point values carrying an uncertainty of `mu`.
pub fn value_step(mu: f64) -> Option<f64> {
    let pp = mu * PP;
    (pp > 0.0 && pp.is_finite()).then(|| 10f64.powf((pp / 10.0).log10().ceil()))
}

pub fn format_mu(mu: f64) -> String {
    match mu_step(mu) {
        Some(step) => {
            let (r, _) = round_sig(mu * PP, 2);
            format!("{:.*}", decimals_for(step), r)
        }
        None => "0".to_string(),
    }
}

/// Exactly known values: up to six significant digits, trailing zeros trimmed.
fn format_exact(x: f64) -> String {
    let pp = x * PP;
    if pp == 0.0 {
        return "0".to_string();
    }
    let (r, step) = round_sig(pp, 6);
    let s = format!("{:.*}", decimals_for(step), r);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn format_value(x: f64, mu: f64) -> String {
    match value_step(mu) {
        Some(step) => format!("{:.*}", decimals_for(step), round_to(x * PP, step)),
        None => format_exact(x),
    }
}

pub fn format_hpd(low: f64, high: f64, mu: f64) -> String {
    match mu_step(mu) {
        Some(step) => {
            let d = decimals_for(step);
            format!(
                "[{:.*}, {:.*}]",
                d,
                round_to(low * PP, step),
                d,
                round_to(high * PP, step)
            )
        }
        None => format!("[{}, {}]", format_exact(low), format_exact(high)),
    }
}

/// Rendered strings for one metric, all in percentage points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rendered {
    pub estimate: String,
    pub mean: String,
    pub hpd: String,
    pub mu: String,
}

impl Rendered {
    pub fn new(estimate: f64, mean: f64, low: f64, high: f64, mu: f64) -> Self {
        Rendered {
            estimate: format_value(estimate, mu),
            mean: format_value(mean, mu),
            hpd: format_hpd(low, high, mu),
            mu: format_mu(mu),
        }
    }
}

/// Equal-width histogram normalised to unit area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSeries {
    pub metric: crate::cm::MetricId,
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub hpd_low: f64,
    pub hpd_high: f64,
    pub mu: f64,
}

pub const DEFAULT_BINS: usize = 200;

pub fn histogram(post: &MetricPosterior, bins: usize) -> HistogramSeries {
    let bins = bins.max(1);
    let s = &post.samples;
    let (mut lo, mut hi) = (s[0], s[s.len() - 1]);
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        // Degenerate stream: one narrow bin holding all the mass.
        let half = 0.5e-6_f64.max(lo.abs() * 1e-9);
        lo -= half;
        hi += half;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in s {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let total = s.len() as f64;
    let bin_edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let densities = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    HistogramSeries {
        metric: post.metric,
        bin_edges,
        densities,
        hpd_low: post.hpd_low,
        hpd_high: post.hpd_high,
        mu: post.mu,
    }
}

impl HistogramSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,density\n");
        for (i, d) in self.densities.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.bin_edges[i], self.bin_edges[i + 1], d));
        }
        out
    }
}
