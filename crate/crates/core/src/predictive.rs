//! Posterior-predictive confusion matrices.
//!
//! A synthetic confusion matrix `V` is one multinomial draw of size `n` from
//! a CPM sampled out of the posterior. Metrics computed on `V/n` describe
//! what repeated experiments of size `n` would report. Their spread is wider
//! than the posterior of the metric itself: for a Dirichlet posterior with
//! total concentration `α0`, `Var(V_i/n) = (1 + α0/n)·Var(θ_i)`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cm::{MetricId, CPM_COMPONENTS};
use crate::error::{Error, Result};
use crate::posterior::{CpmSampler, PosteriorModel};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCmSet {
    /// Count vectors in CPM order, each summing to `n_synth`.
    pub draws: Vec<[u64; 4]>,
    pub n_synth: u64,
    pub source: PosteriorModel,
    pub seed: u64,
}

/// One multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, theta: &[f64; 4]) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut left = n;
    let mut mass = 1.0;
    for i in 0..3 {
        if left == 0 {
            break;
        }
        let p = if mass > 0.0 {
            (theta[i] / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = Binomial::new(left, p)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        out[i] = k;
        left -= k;
        mass -= theta[i];
    }
    out[3] = left;
    out
}

fn check_sizes(n_synth: u64, draws: usize) -> Result<()> {
    if n_synth == 0 {
        return Err(Error::InvalidArgument(
            "synthetic sample size must be at least 1".into(),
        ));
    }
    if draws == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    Ok(())
}

/// Paired `(θ, V)` draws.
fn paired_draws(
    model: &PosteriorModel,
    n_synth: u64,
    draws: usize,
    seed: u64,
) -> Result<Vec<([f64; 4], [u64; 4])>> {
    check_sizes(n_synth, draws)?;
    let sampler = CpmSampler::new(model)?;
    let shards: Vec<(u64, usize)> = rng::shards(draws).collect();
    Ok(shards
        .par_iter()
        .map(|&(idx, len)| {
            let mut rng = rng::shard_rng(seed, idx);
            (0..len)
                .map(|_| {
                    let theta = sampler.draw(&mut rng);
                    let v = multinomial(&mut rng, n_synth, &theta);
                    (theta, v)
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect())
}

pub fn synthesize_cms(
    model: &PosteriorModel,
    n_synth: u64,
    draws: usize,
    seed: u64,
) -> Result<SyntheticCmSet> {
    let pairs = paired_draws(model, n_synth, draws, seed)?;
    Ok(SyntheticCmSet {
        draws: pairs.into_iter().map(|(_, v)| v).collect(),
        n_synth,
        source: *model,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub value: f64,
    pub count: usize,
    pub probability: f64,
}

/// Discrete distribution of a metric over synthetic confusion matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub metric: MetricId,
    pub n_synth: u64,
    pub total: usize,
    /// Draws where the metric had a zero denominator.
    pub undefined: usize,
    /// Ascending by value; probabilities are relative to `total`.
    pub support: Vec<SupportPoint>,
}

impl EmpiricalDistribution {
    pub fn probability_of(&self, value: f64) -> f64 {
        self.support
            .iter()
            .find(|p| (p.value - value).abs() < 1e-9)
            .map_or(0.0, |p| p.probability)
    }

    pub fn values(&self) -> Vec<f64> {
        self.support.iter().map(|p| p.value).collect()
    }
}

pub fn empirical_metric_distribution(set: &SyntheticCmSet, id: MetricId) -> EmpiricalDistribution {
    // Equal ratios can differ in the last ulp depending on the formula path.
    let key = |v: f64| (v * 1e12).round() as i64;
    let mut buckets: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    let mut undefined = 0;
    for v in &set.draws {
        match id.eval_counts(v) {
            Some(x) => buckets.entry(key(x)).or_insert((x, 0)).1 += 1,
            None => undefined += 1,
        }
    }
    let total = set.draws.len();
    EmpiricalDistribution {
        metric: id,
        n_synth: set.n_synth,
        total,
        undefined,
        support: buckets
            .into_values()
            .map(|(value, count)| SupportPoint {
                value,
                count,
                probability: count as f64 / total as f64,
            })
            .collect(),
    }
}

/// Spread of one quantity on synthetic proportions versus the posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceAudit {
    pub quantity: String,
    pub n_synth: u64,
    pub empirical_mean: f64,
    pub true_mean: f64,
    /// Standard error of `empirical_mean − true_mean`.
    pub mean_se: f64,
    /// `Var(V_i/n)` across draws.
    pub empirical_var: f64,
    /// `Var(θ_i)` across the paired posterior draws.
    pub true_var: f64,
    /// `1 + α0/n`; only for linear quantities under the Dirichlet model.
    pub predicted_ratio: Option<f64>,
    pub observed_ratio: f64,
    /// Draws excluded because the quantity was undefined on `V`.
    pub undefined: usize,
}

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn audit(
    quantity: String,
    n_synth: u64,
    empirical: &[f64],
    truth: &[f64],
    undefined: usize,
    predicted_ratio: Option<f64>,
) -> Result<VarianceAudit> {
    if empirical.len() < 2 || truth.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: empirical.len().min(truth.len()),
        });
    }
    let (em, ev) = moments(empirical);
    let (tm, tv) = moments(truth);
    let mean_se = (ev / empirical.len() as f64 + tv / truth.len() as f64).sqrt();
    Ok(VarianceAudit {
        quantity,
        n_synth,
        empirical_mean: em,
        true_mean: tm,
        mean_se,
        empirical_var: ev,
        true_var: tv,
        predicted_ratio,
        observed_ratio: ev / tv,
        undefined,
    })
}

/// Per-component variance inflation of synthetic proportions. Requires the
/// Dirichlet model, for which the inflation factor has a closed form.
pub fn variance_audit(
    model: &PosteriorModel,
    n_synth: u64,
    draws: usize,
    seed: u64,
) -> Result<Vec<VarianceAudit>> {
    let PosteriorModel::Dirichlet(d) = model else {
        return Err(Error::UnsupportedModel {
            model: "three-beta",
            what: "the closed-form variance audit (use the dirichlet model)",
        });
    };
    let predicted = 1.0 + d.alpha0() / n_synth as f64;
    let pairs = paired_draws(model, n_synth, draws, seed)?;
    (0..4)
        .map(|i| {
            let emp: Vec<f64> = pairs
                .iter()
                .map(|(_, v)| v[i] as f64 / n_synth as f64)
                .collect();
            let truth: Vec<f64> = pairs.iter().map(|(t, _)| t[i]).collect();
            audit(
                format!("θ_{}", CPM_COMPONENTS[i]),
                n_synth,
                &emp,
                &truth,
                0,
                Some(predicted),
            )
        })
        .collect()
}

/// Spread audit for any metric and model. A closed-form prediction is only
/// attached for linear metrics under the Dirichlet model.
pub fn metric_spread_audit(
    model: &PosteriorModel,
    id: MetricId,
    n_synth: u64,
    draws: usize,
    seed: u64,
) -> Result<VarianceAudit> {
    let pairs = paired_draws(model, n_synth, draws, seed)?;
    let mut undefined = 0;
    let emp: Vec<f64> = pairs
        .iter()
        .filter_map(|(_, v)| {
            let x = id.eval_counts(v);
            if x.is_none() {
                undefined += 1;
            }
            x
        })
        .collect();
    let truth: Vec<f64> = pairs.iter().filter_map(|(t, _)| id.eval_weights(t)).collect();
    let predicted = match model {
        PosteriorModel::Dirichlet(d) if id.is_linear() => Some(1.0 + d.alpha0() / n_synth as f64),
        _ => None,
    };
    audit(id.to_string(), n_synth, &emp, &truth, undefined, predicted)
}
