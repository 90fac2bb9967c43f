//! Request and response documents.
//!
//! Request fields mirror the command-line flags. Every response carries the
//! seed it was computed with, so any result can be replayed exactly.

use cmu_core::analysis::{AnalysisOptions, AnalysisReport, MetricSummary};
use cmu_core::input::CmInput;
use cmu_core::leaderboard::{PrizeAllocation, ProbBest, RankProbabilityMatrix, Submission};
use cmu_core::predictive::{EmpiricalDistribution, VarianceAudit};
use cmu_core::render::{HistogramSeries, DEFAULT_BINS};
use cmu_core::samplesize::{SampleSizePlan, DEFAULT_SIMS_PER_N};
use cmu_core::{Error, MetricId, ModelKind, PosteriorModel, PrevalencePolicy, Prior, PriorSpec};
use serde::{Deserialize, Serialize};

pub const DEFAULT_PREDICTIVE_DRAWS: usize = 100_000;
pub const DEFAULT_LEADERBOARD_DRAWS: usize = 100_000;

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_predictive_draws() -> usize {
    DEFAULT_PREDICTIVE_DRAWS
}

fn default_leaderboard_draws() -> usize {
    DEFAULT_LEADERBOARD_DRAWS
}

fn default_metric() -> MetricId {
    MetricId::Acc
}

fn default_power() -> f64 {
    0.95
}

fn default_omega() -> f64 {
    0.8
}

fn default_k() -> f64 {
    10.0
}

fn default_credibility() -> f64 {
    0.95
}

fn default_sims() -> usize {
    DEFAULT_SIMS_PER_N
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeRequest {
    pub cm: CmInput,
    #[serde(flatten)]
    pub options: AnalysisOptions,
    /// Histogram bins per metric; 0 omits histograms.
    #[serde(default = "default_bins")]
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    pub report: AnalysisReport,
    pub histograms: Vec<HistogramSeries>,
}

/// Same options as an analysis; the metric list is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmRequest {
    pub cm: CmInput,
    #[serde(flatten)]
    pub options: AnalysisOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmResponse {
    pub seed: u64,
    pub samples: usize,
    pub r_inf: f64,
    pub r_dec: f64,
    pub summary: MetricSummary,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveRequest {
    pub cm: CmInput,
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
    /// Size of each synthetic matrix; the observed total when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_synth: Option<u64>,
    #[serde(default = "default_predictive_draws")]
    pub draws: usize,
    #[serde(default = "default_metric")]
    pub metric: MetricId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PredictiveRequest {
    pub fn prior_spec(&self) -> PriorSpec {
        PriorSpec {
            prev: self.prior_prev.unwrap_or(self.prior),
            tpr: self.prior_tpr.unwrap_or(self.prior),
            tnr: self.prior_tnr.unwrap_or(self.prior),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveResponse {
    pub seed: u64,
    pub n_synth: u64,
    pub draws: usize,
    pub posterior: PosteriorModel,
    /// Distribution of the metric over synthetic matrices.
    pub distribution: EmpiricalDistribution,
    /// Synthetic versus true spread of the metric.
    pub spread: VarianceAudit,
    /// Per-component variance inflation; Dirichlet model only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<VarianceAudit>>,
}

/// A reported accuracy, either numeric or as text (`"0.976"`, `"97.6%"`).
/// Text keeps trailing zeros, which fixes the reported precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AccuracyInput {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionInput {
    pub name: String,
    pub accuracy: AccuracyInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
}

/// Submissions come either as a list or as leaderboard CSV text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRequest {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub submissions: Vec<SubmissionInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Test-set size for submissions that do not state their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default)]
    pub prior: Prior,
    #[serde(default = "default_leaderboard_draws")]
    pub draws: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prizes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardResponse {
    pub seed: u64,
    pub submissions: Vec<Submission>,
    pub matrix: RankProbabilityMatrix,
    pub prob_best: ProbBest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prizes: Option<PrizeAllocation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeRequest {
    pub target_mu: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub prior: Prior,
    #[serde(default = "default_credibility")]
    pub credibility: f64,
    #[serde(default = "default_sims")]
    pub sims: usize,
    /// Candidate sample sizes, ascending; a logarithmic grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeResponse {
    pub seed: u64,
    pub plan: SampleSizePlan,
    /// Sample size from the large-N bound MU ≈ 2/√N, when it applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_n: Option<u64>,
}

/// Size caps on a single request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_samples: usize,
    pub max_draws: usize,
    pub max_bins: usize,
    pub max_grid: usize,
    pub max_sims: usize,
}

impl Limits {
    /// Defaults for the HTTP service; larger jobs belong on the command line.
    pub const SERVICE: Limits = Limits {
        max_samples: 200_000,
        max_draws: 1_000_000,
        max_bins: 2_000,
        max_grid: 40,
        max_sims: 2_000,
    };

    pub const UNBOUNDED: Limits = Limits {
        max_samples: usize::MAX,
        max_draws: usize::MAX,
        max_bins: usize::MAX,
        max_grid: usize::MAX,
        max_sims: usize::MAX,
    };

    pub(crate) fn check(&self, what: &str, value: usize, max: usize) -> Result<(), ApiError> {
        if value > max {
            Err(ApiError::new(
                400,
                "LimitExceeded",
                format!("{what} = {value} exceeds the limit of {max}; run larger jobs from the command line"),
            ))
        } else {
            Ok(())
        }
    }
}

impl Default for Limits {
    fn default() -> Self {
        Limits::SERVICE
    }
}

/// Error document: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
}

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ApiError,
}

impl ApiError {
    pub fn new(status: u16, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn bad_body(e: serde_json::Error) -> Self {
        ApiError::new(400, "ParseError", format!("invalid request body: {e}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::ImproperPosterior { .. } | Error::TargetUnreachable { .. } => 422,
            Error::Io(_) => 500,
            _ => 400,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}
