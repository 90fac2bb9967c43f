//! Probabilistic leaderboards.
//!
//! Each submission's accuracy gets a Beta posterior from its point accuracy
//! and test-set size. Sampling one accuracy per submission and ranking them
//! gives a synthetic leaderboard; counting positions over many draws gives
//! the probability of every submission holding every rank.

use rand::seq::SliceRandom;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cm::{BetaParams, Prior};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub name: String,
    pub acc_point: f64,
    pub n: u64,
    /// Decimal places the accuracy was reported with.
    pub decimals: u32,
}

/// Decimal places of the shortest representation that round-trips `x`.
pub fn shortest_decimals(x: f64) -> u32 {
    let s = x.to_string();
    s.split_once('.').map_or(0, |(_, frac)| frac.len() as u32)
}

impl Submission {
    /// Reported precision inferred from the shortest decimal form of `acc`.
    pub fn new(name: impl Into<String>, acc: f64, n: u64) -> Result<Self> {
        Self::with_decimals(name, acc, n, shortest_decimals(acc))
    }

    pub fn with_decimals(name: impl Into<String>, acc: f64, n: u64, decimals: u32) -> Result<Self> {
        let name = name.into();
        if !(0.0..=1.0).contains(&acc) {
            return Err(Error::InvalidArgument(format!(
                "accuracy of `{name}` must lie in [0, 1], got {acc}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument(format!(
                "test-set size of `{name}` must be at least 1"
            )));
        }
        let sub = Submission {
            name,
            acc_point: acc,
            n,
            decimals,
        };
        // Some integer count must reproduce the accuracy at its reported
        // precision; otherwise n is wrong.
        let half_unit = 0.5 * 10f64.powi(-(decimals.min(300) as i32));
        if (sub.correct() as f64 / n as f64 - acc).abs() > half_unit + 1e-12 {
            return Err(Error::RoundingInconsistent { accuracy: acc, n });
        }
        Ok(sub)
    }

    pub fn correct(&self) -> u64 {
        (self.acc_point * self.n as f64).round() as u64
    }

    pub fn wrong(&self) -> u64 {
        self.n - self.correct()
    }
}

/// `Beta(correct + α, wrong + β)`.
pub fn acc_posterior(sub: &Submission, prior: Prior) -> Result<BetaParams> {
    let b = prior.params().updated(sub.correct(), sub.wrong());
    if !b.is_proper() {
        return Err(Error::ImproperPosterior {
            rate: "ACC",
            alpha: b.alpha,
            beta: b.beta,
        });
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankProbabilityMatrix {
    pub names: Vec<String>,
    /// `entries[s][p]`: probability submission `s` sits at position `p`
    /// (position 0 is first place).
    pub entries: Vec<Vec<f64>>,
    pub draws: usize,
    pub seed: u64,
}

impl RankProbabilityMatrix {
    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let k = self.entries.len();
        (0..k)
            .map(|p| self.entries.iter().map(|r| r[p]).sum())
            .collect()
    }

    /// Monte Carlo standard error of an entry.
    pub fn standard_error(&self, s: usize, p: usize) -> f64 {
        let q = self.entries[s][p];
        (q * (1.0 - q) / self.draws as f64).sqrt()
    }
}

/// Ranks from posterior `Beta` accuracies; general entry point behind
/// [`rank_distribution`].
pub fn rank_distribution_from_posteriors(
    names: Vec<String>,
    posteriors: &[BetaParams],
    draws: usize,
    seed: u64,
) -> Result<RankProbabilityMatrix> {
    let k = posteriors.len();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "a leaderboard needs at least two submissions".into(),
        ));
    }
    if draws == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let dists: Vec<Beta<f64>> = posteriors
        .iter()
        .map(|b| {
            Beta::new(b.alpha, b.beta)
                .map_err(|e| Error::InvalidArgument(format!("Beta{b:?}: {e}")))
        })
        .collect::<Result<_>>()?;

    let shards: Vec<(u64, usize)> = rng::shards(draws).collect();
    let counts = shards
        .par_iter()
        .map(|&(idx, len)| {
            let mut rng = rng::shard_rng(seed, idx);
            let mut counts = vec![0u64; k * k];
            let mut values = vec![0.0; k];
            let mut order: Vec<usize> = (0..k).collect();
            for _ in 0..len {
                for (v, d) in values.iter_mut().zip(&dists) {
                    *v = d.sample(&mut rng);
                }
                order.sort_unstable_by(|&a, &b| values[b].total_cmp(&values[a]));
                // Uniform tie-breaking within runs of equal values.
                let mut start = 0;
                while start < k {
                    let mut end = start + 1;
                    while end < k && values[order[end]] == values[order[start]] {
                        end += 1;
                    }
                    if end - start > 1 {
                        order[start..end].shuffle(&mut rng);
                    }
                    start = end;
                }
                for (pos, &s) in order.iter().enumerate() {
                    counts[s * k + pos] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; k * k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let entries = counts
        .chunks_exact(k)
        .map(|row| row.iter().map(|&c| c as f64 / draws as f64).collect())
        .collect();
    Ok(RankProbabilityMatrix {
        names,
        entries,
        draws,
        seed,
    })
}

pub fn rank_distribution(
    subs: &[Submission],
    prior: Prior,
    draws: usize,
    seed: u64,
) -> Result<RankProbabilityMatrix> {
    let posteriors = subs
        .iter()
        .map(|s| acc_posterior(s, prior))
        .collect::<Result<Vec<_>>>()?;
    let names = subs.iter().map(|s| s.name.clone()).collect();
    rank_distribution_from_posteriors(names, &posteriors, draws, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbBest {
    pub name: String,
    pub index: usize,
    pub probability: f64,
    pub standard_error: f64,
}

/// Probability that the submission with the highest point accuracy is truly
/// the best one.
pub fn prob_best(subs: &[Submission], matrix: &RankProbabilityMatrix) -> Result<ProbBest> {
    let index = subs
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, s)| match best {
            Some((_, a)) if a >= s.acc_point => best,
            _ => Some((i, s.acc_point)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidArgument("no submissions".into()))?;
    Ok(ProbBest {
        name: subs[index].name.clone(),
        index,
        probability: matrix.entries[index][0],
        standard_error: matrix.standard_error(index, 0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrizeAllocation {
    pub prizes: Vec<f64>,
    /// Expected prize per submission, in matrix row order.
    pub expected: Vec<f64>,
    pub names: Vec<String>,
}

impl PrizeAllocation {
    pub fn total(&self) -> f64 {
        self.expected.iter().sum()
    }
}

/// Expected payout per submission if prizes were weighted by rank probability.
pub fn allocate_prizes(matrix: &RankProbabilityMatrix, prizes: &[f64]) -> Result<PrizeAllocation> {
    let k = matrix.entries.len();
    if prizes.len() > k {
        return Err(Error::InvalidArgument(format!(
            "{} prizes for only {k} positions",
            prizes.len()
        )));
    }
    if prizes.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidArgument("prizes must be non-negative".into()));
    }
    let expected = matrix
        .entries
        .iter()
        .map(|row| row.iter().zip(prizes).map(|(q, p)| q * p).sum())
        .collect();
    Ok(PrizeAllocation {
        prizes: prizes.to_vec(),
        expected,
        names: matrix.names.clone(),
    })
}
