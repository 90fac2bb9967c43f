use thiserror::Error;

use crate::cm::MetricId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("confusion matrix count `{field}` is negative ({value})")]
    NegativeCount { field: &'static str, value: i64 },

    #[error("confusion matrix is empty (all counts are zero)")]
    EmptyMatrix,

    #[error("CPM vector is not on the simplex: {reason}")]
    SimplexViolation { reason: String },

    #[error("{metric} is undefined at this CPM (zero denominator)")]
    UndefinedMetric { metric: MetricId },

    #[error(
        "improper posterior for {rate}: Beta({alpha}, {beta}); choose Laplace or Jeffreys, \
         or a custom prior with positive pseudo-counts"
    )]
    ImproperPosterior {
        rate: &'static str,
        alpha: f64,
        beta: f64,
    },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid prevalence policy: {0}")]
    InvalidPrevalence(String),

    #[error("the {model} model does not support {what}")]
    UnsupportedModel {
        model: &'static str,
        what: &'static str,
    },

    #[error("need at least {needed} draws for the convergence diagnostic, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("every sample of {metric} was undefined")]
    AllSamplesInvalid { metric: MetricId },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("accuracy {accuracy} is not consistent with any integer count out of n = {n}")]
    RoundingInconsistent { accuracy: f64, n: u64 },

    #[error("bound 2/sqrt(N) is unreliable for N = {n} (requires N > 20)")]
    OutOfRegime { n: u64 },

    #[error(
        "target MU {target} not reached; largest tested N = {largest_n} achieved {achieved}"
    )]
    TargetUnreachable {
        target: f64,
        largest_n: u64,
        achieved: f64,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name, used as the error code on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NegativeCount { .. } => "NegativeCount",
            Error::EmptyMatrix => "EmptyMatrix",
            Error::SimplexViolation { .. } => "SimplexViolation",
            Error::UndefinedMetric { .. } => "UndefinedMetric",
            Error::ImproperPosterior { .. } => "ImproperPosterior",
            Error::InvalidPrior(_) => "InvalidPrior",
            Error::InvalidPrevalence(_) => "InvalidPrevalence",
            Error::UnsupportedModel { .. } => "UnsupportedModel",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::AllSamplesInvalid { .. } => "AllSamplesInvalid",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::RoundingInconsistent { .. } => "RoundingInconsistent",
            Error::OutOfRegime { .. } => "OutOfRegime",
            Error::TargetUnreachable { .. } => "TargetUnreachable",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
