//! End-to-end analysis of one confusion matrix.

use serde::{Deserialize, Serialize};

use crate::cm::{ConfusionMatrix, Cpm, MetricId, PrevalencePolicy, Prior, PriorSpec};
use crate::convergence::{split_rhat, ConvergenceReport};
use crate::error::{Error, Result};
use crate::metrics::{bm_assessment, MetricPosterior, DEFAULT_CREDIBILITY};
use crate::posterior::{build_posterior, sample_cpm, ModelKind, PosteriorModel, DEFAULT_SAMPLES};
use crate::render::{histogram, HistogramSeries, Rendered};
use crate::rng;

/// Chains each metric stream is split into for the convergence check.
pub const CONVERGENCE_CHAINS: usize = 4;

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_credibility() -> f64 {
    DEFAULT_CREDIBILITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Prior for every rate unless overridden below.
    #[serde(default)]
    pub prior: Prior,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_prev: Option<Prior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_tpr: Option<Prior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_tnr: Option<Prior>,
    #[serde(default)]
    pub prevalence: PrevalencePolicy,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Drawn from OS entropy when absent; the report records the seed used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_credibility")]
    pub credibility: f64,
    /// Metrics to summarise; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<MetricId>>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            prior: Prior::Laplace,
            prior_prev: None,
            prior_tpr: None,
            prior_tnr: None,
            prevalence: PrevalencePolicy::Inferred,
            model: ModelKind::ThreeBeta,
            samples: DEFAULT_SAMPLES,
            seed: None,
            credibility: DEFAULT_CREDIBILITY,
            metrics: None,
        }
    }
}

impl AnalysisOptions {
    pub fn prior_spec(&self) -> PriorSpec {
        PriorSpec {
            prev: self.prior_prev.unwrap_or(self.prior),
            tpr: self.prior_tpr.unwrap_or(self.prior),
            tnr: self.prior_tnr.unwrap_or(self.prior),
        }
    }

    pub fn metric_list(&self) -> Vec<MetricId> {
        self.metrics.clone().unwrap_or_else(|| MetricId::ALL.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: MetricId,
    /// Plug-in value from the observed counts; absent when undefined.
    pub point_estimate: Option<f64>,
    pub mean: f64,
    pub median: f64,
    pub mode: f64,
    pub hpd_low: f64,
    pub hpd_high: f64,
    pub mu: f64,
    pub invalid_samples: usize,
    pub multimodal: bool,
    pub rendered: Rendered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmSummary {
    /// Posterior probability that BM > 0.
    pub r_inf: f64,
    /// Posterior probability that BM < 0.
    pub r_dec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub cm: ConfusionMatrix,
    pub model: ModelKind,
    pub prior: PriorSpec,
    pub prevalence: PrevalencePolicy,
    pub posterior: PosteriorModel,
    pub samples: usize,
    pub seed: u64,
    pub credibility: f64,
    pub metrics: Vec<MetricSummary>,
    pub bm: Option<BmSummary>,
    pub convergence: ConvergenceReport,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn metric(&self, id: MetricId) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == id)
    }
}

/// Full result: the serialisable report plus the sorted metric samples.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub posteriors: Vec<MetricPosterior>,
}

impl Analysis {
    pub fn histograms(&self, bins: usize) -> Vec<HistogramSeries> {
        self.posteriors.iter().map(|p| histogram(p, bins)).collect()
    }
}

/// Plug-in metric value; with a fixed prevalence the rates come from the
/// counts and the prevalence from the policy.
pub fn point_estimate(cm: &ConfusionMatrix, prevalence: PrevalencePolicy, id: MetricId) -> Option<f64> {
    match prevalence {
        PrevalencePolicy::Fixed { value } => {
            let (p, n) = (cm.positives(), cm.negatives());
            let tpr = (p > 0).then(|| cm.tp() as f64 / p as f64);
            let tnr = (n > 0).then(|| cm.tn() as f64 / n as f64);
            // A rate without data only matters if its class has weight.
            let tpr = tpr.or((value == 0.0).then_some(0.0))?;
            let tnr = tnr.or((value == 1.0).then_some(0.0))?;
            Cpm::from_rates(value, tpr, tnr).ok().and_then(|c| id.eval(&c))
        }
        _ => id.eval_counts(&cm.cpm_counts()),
    }
}

pub fn run_analysis(cm: &ConfusionMatrix, opts: &AnalysisOptions) -> Result<Analysis> {
    if opts.samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 posterior samples are needed, got {}",
            opts.samples
        )));
    }
    if !(opts.credibility > 0.0 && opts.credibility < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "credibility must lie in (0, 1), got {}",
            opts.credibility
        )));
    }
    let prior = opts.prior_spec();
    let model = build_posterior(cm, &prior, opts.prevalence, opts.model)?;
    let seed = opts.seed.unwrap_or_else(rng::entropy_seed);
    let cpm = sample_cpm(&model, opts.samples, seed)?;

    let mut warnings = Vec::new();
    let mut convergence = ConvergenceReport::new();
    let mut metrics = Vec::new();
    let mut posteriors = Vec::new();

    for id in opts.metric_list() {
        let values = cpm.metric_values(id);
        let valid: Vec<f64> = values.iter().flatten().copied().collect();
        if valid.len() >= 2 * CONVERGENCE_CHAINS {
            convergence.push(id.name(), split_rhat(&valid, CONVERGENCE_CHAINS)?);
        }
        let post = match MetricPosterior::from_values(id, values, opts.credibility) {
            Ok(p) => p,
            Err(Error::AllSamplesInvalid { .. }) => {
                warnings.push(format!("{} is undefined in every posterior draw", id.name()));
                continue;
            }
            Err(e) => return Err(e),
        };
        if post.invalid > 0 {
            warnings.push(format!(
                "{} is undefined in {} of {} draws; those draws are excluded",
                id.name(),
                post.invalid,
                opts.samples
            ));
        }
        if post.multimodal {
            warnings.push(format!(
                "{} posterior looks multimodal; the HPD may cover disjoint regions",
                id.name()
            ));
        }
        let estimate = point_estimate(cm, opts.prevalence, id);
        metrics.push(MetricSummary {
            metric: id,
            point_estimate: estimate,
            mean: post.mean,
            median: post.median,
            mode: post.mode_estimate,
            hpd_low: post.hpd_low,
            hpd_high: post.hpd_high,
            mu: post.mu,
            invalid_samples: post.invalid,
            multimodal: post.multimodal,
            rendered: Rendered::new(
                estimate.unwrap_or(post.mode_estimate),
                post.mean,
                post.hpd_low,
                post.hpd_high,
                post.mu,
            ),
        });
        posteriors.push(post);
    }

    let bm = match bm_assessment(&cpm, opts.credibility) {
        Ok(a) => Some(BmSummary {
            r_inf: a.r_inf,
            r_dec: a.r_dec,
        }),
        Err(Error::AllSamplesInvalid { .. }) => None,
        Err(e) => return Err(e),
    };
    if !convergence.passed {
        warnings.push(format!(
            "convergence check failed (max R = {:.4})",
            convergence.max_rc()
        ));
    }

    Ok(Analysis {
        report: AnalysisReport {
            cm: *cm,
            model: opts.model,
            prior,
            prevalence: opts.prevalence,
            posterior: model,
            samples: opts.samples,
            seed,
            credibility: opts.credibility,
            metrics,
            bm,
            convergence,
            warnings,
        },
        posteriors,
    })
}

/// Plain-text table of a report.
pub fn render_table(report: &AnalysisReport) -> String {
    let cm = &report.cm;
    let mut out = format!(
        "confusion matrix: TP={} FN={} FP={} TN={} (n={})\n",
        cm.tp(),
        cm.fn_(),
        cm.fp(),
        cm.tn(),
        cm.n()
    );
    out.push_str(&format!(
        "model: {}, prior: prev={} tpr={} tnr={}, samples: {}, seed: {}\n\n",
        report.model, report.prior.prev, report.prior.tpr, report.prior.tnr, report.samples, report.seed
    ));
    let cred = format!("{:.0}% HPD", report.credibility * 100.0);
    out.push_str(&format!(
        "{:<6} {:>9} {:>9} {:>16} {:>8}\n",
        "metric", "estimate", "mean", cred, "MU"
    ));
    for m in &report.metrics {
        let flag = if m.multimodal { " *" } else { "" };
        out.push_str(&format!(
            "{:<6} {:>9} {:>9} {:>16} {:>8}{}\n",
            m.metric.name(),
            m.rendered.estimate,
            m.rendered.mean,
            m.rendered.hpd,
            m.rendered.mu,
            flag
        ));
    }
    out.push_str("(values in percentage points)\n");
    if let Some(bm) = &report.bm {
        out.push_str(&format!(
            "\nP(informative) = {:.4}   P(deceptive) = {:.4}\n",
            bm.r_inf, bm.r_dec
        ));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}
