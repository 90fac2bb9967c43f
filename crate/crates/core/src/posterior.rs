//! Posterior construction and exact conjugate sampling of the CPM.
//!
//! Two models are supported:
//!
//! * **Three Beta** (default): independent Beta posteriors for prevalence,
//!   TPR and TNR, recombined into the CPM per draw. Prevalence can be fixed
//!   or replaced by an external distribution.
//! * **Dirichlet**: a single Dirichlet over the four CPM components.
//!
//! All draws are exact; there is no Markov chain involved.

use rand::Rng;
use rand_distr::{Beta, Dirichlet, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cm::{
    rates_to_theta, BetaParams, ConfusionMatrix, Cpm, MetricId, PrevalencePolicy, Prior,
    PriorSpec, CPM_COMPONENTS,
};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

pub const DEFAULT_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    ThreeBeta,
    Dirichlet,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::ThreeBeta => "three-beta",
            ModelKind::Dirichlet => "dirichlet",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "three-beta" | "threebeta" | "beta" => Ok(ModelKind::ThreeBeta),
            "dirichlet" => Ok(ModelKind::Dirichlet),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

/// Posterior of the prevalence marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PrevalencePosterior {
    Beta(BetaParams),
    /// Point mass; sampled as a constant stream.
    Fixed { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeBetaPosterior {
    pub prev: PrevalencePosterior,
    pub tpr: BetaParams,
    pub tnr: BetaParams,
    pub prevalence_policy: PrevalencePolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletPosterior {
    /// Concentration in CPM order.
    pub alpha: [f64; 4],
}

impl DirichletPosterior {
    pub fn alpha0(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Marginal of component `i`: `Beta(α_i, α0 − α_i)`.
    pub fn marginal(&self, i: usize) -> BetaParams {
        BetaParams::new(self.alpha[i], self.alpha0() - self.alpha[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum PosteriorModel {
    ThreeBeta(ThreeBetaPosterior),
    Dirichlet(DirichletPosterior),
}

impl PosteriorModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            PosteriorModel::ThreeBeta(_) => ModelKind::ThreeBeta,
            PosteriorModel::Dirichlet(_) => ModelKind::Dirichlet,
        }
    }

    /// The prior alone, i.e. the posterior after observing nothing.
    pub fn prior_only(
        prior: &PriorSpec,
        prevalence: PrevalencePolicy,
        kind: ModelKind,
    ) -> Result<Self> {
        from_counts([0; 4], prior, prevalence, kind)
    }

    /// Exact mean of the CPM under this posterior.
    pub fn mean_theta(&self) -> [f64; 4] {
        match self {
            PosteriorModel::ThreeBeta(m) => {
                let prev = match m.prev {
                    PrevalencePosterior::Beta(b) => b.mean(),
                    PrevalencePosterior::Fixed { value } => value,
                };
                rates_to_theta(prev, m.tpr.mean(), m.tnr.mean())
            }
            PosteriorModel::Dirichlet(d) => {
                let a0 = d.alpha0();
                d.alpha.map(|a| a / a0)
            }
        }
    }
}

fn proper(rate: &'static str, b: BetaParams) -> Result<BetaParams> {
    if b.is_proper() {
        Ok(b)
    } else {
        Err(Error::ImproperPosterior {
            rate,
            alpha: b.alpha,
            beta: b.beta,
        })
    }
}

pub fn build_posterior(
    cm: &ConfusionMatrix,
    prior: &PriorSpec,
    prevalence: PrevalencePolicy,
    kind: ModelKind,
) -> Result<PosteriorModel> {
    from_counts(cm.cpm_counts(), prior, prevalence, kind)
}

fn from_counts(
    counts: [u64; 4],
    prior: &PriorSpec,
    prevalence: PrevalencePolicy,
    kind: ModelKind,
) -> Result<PosteriorModel> {
    prevalence.validate()?;
    let [tp, fn_, tn, fp] = counts;
    match kind {
        ModelKind::ThreeBeta => {
            let tpr = proper("TPR", prior.tpr.params().updated(tp, fn_))?;
            let tnr = proper("TNR", prior.tnr.params().updated(tn, fp))?;
            let prev = match prevalence {
                PrevalencePolicy::Inferred => PrevalencePosterior::Beta(proper(
                    "PREV",
                    prior.prev.params().updated(tp + fn_, tn + fp),
                )?),
                PrevalencePolicy::Fixed { value } => PrevalencePosterior::Fixed { value },
                PrevalencePolicy::External { alpha, beta } => {
                    PrevalencePosterior::Beta(proper("PREV", BetaParams::new(alpha, beta))?)
                }
            };
            Ok(PosteriorModel::ThreeBeta(ThreeBetaPosterior {
                prev,
                tpr,
                tnr,
                prevalence_policy: prevalence,
            }))
        }
        ModelKind::Dirichlet => {
            if prevalence != PrevalencePolicy::Inferred {
                return Err(Error::UnsupportedModel {
                    model: "dirichlet",
                    what: "a fixed or external prevalence",
                });
            }
            // Success pseudo-counts of the TPR/TNR priors go to TP/TN,
            // failure pseudo-counts to FN/FP.
            let (p, n) = (prior.tpr.params(), prior.tnr.params());
            let pseudo = [p.alpha, p.beta, n.alpha, n.beta];
            let mut alpha = [0.0; 4];
            for i in 0..4 {
                alpha[i] = counts[i] as f64 + pseudo[i];
                if !(alpha[i] > 0.0) {
                    return Err(Error::ImproperPosterior {
                        rate: ["θ_TP", "θ_FN", "θ_TN", "θ_FP"][i],
                        alpha: alpha[i],
                        beta: 0.0,
                    });
                }
            }
            Ok(PosteriorModel::Dirichlet(DirichletPosterior { alpha }))
        }
    }
}

/// Reusable per-model sampler.
pub struct CpmSampler {
    inner: SamplerKind,
}

enum SamplerKind {
    ThreeBeta {
        prev: PrevSampler,
        tpr: Beta<f64>,
        tnr: Beta<f64>,
    },
    Dirichlet(Dirichlet<f64, 4>),
}

enum PrevSampler {
    Beta(Beta<f64>),
    Fixed(f64),
}

fn beta_dist(b: BetaParams) -> Result<Beta<f64>> {
    Beta::new(b.alpha, b.beta).map_err(|e| Error::InvalidArgument(format!("Beta{b:?}: {e}")))
}

impl CpmSampler {
    pub fn new(model: &PosteriorModel) -> Result<Self> {
        let inner = match model {
            PosteriorModel::ThreeBeta(m) => SamplerKind::ThreeBeta {
                prev: match m.prev {
                    PrevalencePosterior::Beta(b) => PrevSampler::Beta(beta_dist(b)?),
                    PrevalencePosterior::Fixed { value } => PrevSampler::Fixed(value),
                },
                tpr: beta_dist(m.tpr)?,
                tnr: beta_dist(m.tnr)?,
            },
            PosteriorModel::Dirichlet(d) => SamplerKind::Dirichlet(
                Dirichlet::new(d.alpha)
                    .map_err(|e| Error::InvalidArgument(format!("Dirichlet: {e}")))?,
            ),
        };
        Ok(CpmSampler { inner })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 4] {
        match &self.inner {
            SamplerKind::ThreeBeta { prev, tpr, tnr } => {
                let prev = match prev {
                    PrevSampler::Beta(b) => b.sample(rng),
                    PrevSampler::Fixed(v) => *v,
                };
                let tpr = tpr.sample(rng);
                let tnr = tnr.sample(rng);
                let theta_tp = tpr * prev;
                let neg = 1.0 - prev;
                let theta_tn = tnr * neg;
                [theta_tp, prev - theta_tp, theta_tn, neg - theta_tn]
            }
            SamplerKind::Dirichlet(d) => d.sample(rng),
        }
    }
}

/// `S` draws of the CPM.
#[derive(Debug, Clone, PartialEq)]
pub struct CpmSampleSet {
    samples: Vec<[f64; 4]>,
    seed: u64,
}

impl CpmSampleSet {
    pub fn from_rows(samples: Vec<[f64; 4]>, seed: u64) -> Self {
        CpmSampleSet { samples, seed }
    }

    pub fn rows(&self) -> &[[f64; 4]] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draws of a single CPM component.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|r| r[i]).collect()
    }

    /// Metric value per draw; `None` where the metric is undefined.
    pub fn metric_values(&self, id: MetricId) -> Vec<Option<f64>> {
        self.samples.iter().map(|r| id.eval_weights(r)).collect()
    }
}

/// Draws `s` CPM samples from `model`, deterministically for a given seed.
pub fn sample_cpm(model: &PosteriorModel, s: usize, seed: u64) -> Result<CpmSampleSet> {
    if s == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let sampler = CpmSampler::new(model)?;
    let shards: Vec<(u64, usize)> = rng::shards(s).collect();
    let samples: Vec<[f64; 4]> = shards
        .par_iter()
        .map(|&(idx, len)| {
            let mut rng: SimRng = rng::shard_rng(seed, idx);
            (0..len).map(|_| sampler.draw(&mut rng)).collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    Ok(CpmSampleSet { samples, seed })
}

/// Checks a row lies on the simplex, for callers validating external data.
pub fn check_row(row: &[f64; 4]) -> Result<Cpm> {
    Cpm::new(*row)
}

/// Human-readable name of CPM component `i`.
pub fn component_name(i: usize) -> &'static str {
    CPM_COMPONENTS[i]
}

/// Shorthand for the common Laplace setup.
pub fn laplace_three_beta(cm: &ConfusionMatrix) -> Result<PosteriorModel> {
    build_posterior(
        cm,
        &PriorSpec::uniform(Prior::Laplace),
        PrevalencePolicy::Inferred,
        ModelKind::ThreeBeta,
    )
}
