//! Bayesian uncertainty for binary classifier metrics.
//!
//! Starting from a confusion matrix, the crate infers a posterior over the
//! confusion probability matrix (CPM), draws exact samples from it and turns
//! them into metric posteriors: HPD credible intervals, metric uncertainty
//! (MU, the interval length), and the probability that a classifier is
//! informative or deceptive. Around that core sit posterior-predictive
//! synthesis of confusion matrices, a probabilistic leaderboard and
//! sample-size planning.
//!
//! ```
//! use cmu_core::{cm::validate_cm, metrics::metric_posterior, posterior, MetricId};
//!
//! let cm = validate_cm(26, 0, 2, 6).unwrap();
//! let model = posterior::laplace_three_beta(&cm).unwrap();
//! let samples = posterior::sample_cpm(&model, 20_000, 7).unwrap();
//! let tpr = metric_posterior(&samples, MetricId::Tpr, 0.95).unwrap();
//! assert!(tpr.hpd_low > 0.85);
//! ```

pub mod analysis;
pub mod cm;
pub mod convergence;
pub mod error;
pub mod input;
pub mod leaderboard;
pub mod metrics;
pub mod posterior;
pub mod predictive;
pub mod render;
pub mod rng;
pub mod samplesize;

pub use cm::{BetaParams, ConfusionMatrix, Cpm, MetricId, PrevalencePolicy, Prior, PriorSpec};
pub use error::{Error, Result};
pub use posterior::{ModelKind, PosteriorModel};
