//! Confusion-matrix domain types, prior presets and the metric registry.
//!
//! Everything downstream works on the confusion probability matrix (CPM),
//! a point on the 4-simplex stored in the fixed order
//! `(θ_TP, θ_FN, θ_TN, θ_FP)`. Note that this differs from the reading order
//! of the 2×2 table `[[TP, FN], [FP, TN]]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Indices into a CPM / count vector in CPM order.
pub const TP: usize = 0;
pub const FN: usize = 1;
pub const TN: usize = 2;
pub const FP: usize = 3;

/// Component names in CPM order.
pub const CPM_COMPONENTS: [&str; 4] = ["TP", "FN", "TN", "FP"];

const SIMPLEX_TOL: f64 = 1e-9;

/// Counts of a binary classification test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CmRecord", into = "CmRecord")]
pub struct ConfusionMatrix {
    tp: u64,
    fn_: u64,
    fp: u64,
    tn: u64,
}

/// Wire form of a confusion matrix: four named counts, `n` optional on input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmRecord {
    pub tp: i64,
    #[serde(rename = "fn")]
    pub fn_: i64,
    pub fp: i64,
    pub tn: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
}

impl TryFrom<CmRecord> for ConfusionMatrix {
    type Error = Error;

    fn try_from(r: CmRecord) -> Result<Self> {
        let cm = ConfusionMatrix::new(r.tp, r.fn_, r.fp, r.tn)?;
        match r.n {
            Some(n) if n < 0 || n as u64 != cm.n() => Err(Error::parse(
                "n",
                format!("declared n = {n} but counts sum to {}", cm.n()),
            )),
            _ => Ok(cm),
        }
    }
}

impl From<ConfusionMatrix> for CmRecord {
    fn from(cm: ConfusionMatrix) -> Self {
        CmRecord {
            tp: cm.tp as i64,
            fn_: cm.fn_ as i64,
            fp: cm.fp as i64,
            tn: cm.tn as i64,
            n: Some(cm.n() as i64),
        }
    }
}

impl ConfusionMatrix {
    /// Validates raw counts given in table reading order (TP, FN, FP, TN).
    pub fn new(tp: i64, fn_: i64, fp: i64, tn: i64) -> Result<Self> {
        for (field, value) in [("tp", tp), ("fn", fn_), ("fp", fp), ("tn", tn)] {
            if value < 0 {
                return Err(Error::NegativeCount { field, value });
            }
        }
        if tp == 0 && fn_ == 0 && fp == 0 && tn == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(ConfusionMatrix {
            tp: tp as u64,
            fn_: fn_ as u64,
            fp: fp as u64,
            tn: tn as u64,
        })
    }

    /// Builds from a 2×2 table: rows are reference positive/negative,
    /// columns predicted positive/negative.
    pub fn from_table(table: [[i64; 2]; 2]) -> Result<Self> {
        Self::new(table[0][0], table[0][1], table[1][0], table[1][1])
    }

    pub fn tp(&self) -> u64 {
        self.tp
    }

    pub fn fn_(&self) -> u64 {
        self.fn_
    }

    pub fn fp(&self) -> u64 {
        self.fp
    }

    pub fn tn(&self) -> u64 {
        self.tn
    }

    pub fn n(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    /// Counts in CPM order `(TP, FN, TN, FP)`.
    pub fn cpm_counts(&self) -> [u64; 4] {
        [self.tp, self.fn_, self.tn, self.fp]
    }

    /// Scales every count by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        ConfusionMatrix {
            tp: self.tp * k,
            fn_: self.fn_ * k,
            fp: self.fp * k,
            tn: self.tn * k,
        }
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TP={} FN={} FP={} TN={} (N={})",
            self.tp,
            self.fn_,
            self.fp,
            self.tn,
            self.n()
        )
    }
}

pub fn validate_cm(tp: i64, fn_: i64, fp: i64, tn: i64) -> Result<ConfusionMatrix> {
    ConfusionMatrix::new(tp, fn_, fp, tn)
}

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        BetaParams { alpha, beta }
    }

    pub fn is_proper(&self) -> bool {
        self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite()
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    /// Adds observed successes/failures to prior pseudo-counts.
    pub fn updated(&self, successes: u64, failures: u64) -> Self {
        BetaParams {
            alpha: self.alpha + successes as f64,
            beta: self.beta + failures as f64,
        }
    }
}

/// Objective prior presets for a single rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Prior {
    #[default]
    Laplace,
    Jeffreys,
    Haldane,
    Custom { alpha: f64, beta: f64 },
}

impl Prior {
    pub fn custom(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidPrior(format!(
                "custom prior requires finite alpha >= 0 and beta >= 0, got ({alpha}, {beta})"
            )));
        }
        Ok(Prior::Custom { alpha, beta })
    }

    pub fn params(&self) -> BetaParams {
        match *self {
            Prior::Laplace => BetaParams::new(1.0, 1.0),
            Prior::Jeffreys => BetaParams::new(0.5, 0.5),
            Prior::Haldane => BetaParams::new(0.0, 0.0),
            Prior::Custom { alpha, beta } => BetaParams::new(alpha, beta),
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prior::Laplace => f.write_str("laplace"),
            Prior::Jeffreys => f.write_str("jeffreys"),
            Prior::Haldane => f.write_str("haldane"),
            Prior::Custom { alpha, beta } => write!(f, "custom:{alpha},{beta}"),
        }
    }
}

impl FromStr for Prior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "laplace" | "uniform" | "flat" => return Ok(Prior::Laplace),
            "jeffreys" => return Ok(Prior::Jeffreys),
            "haldane" => return Ok(Prior::Haldane),
            _ => {}
        }
        let rest = s
            .strip_prefix("custom:")
            .ok_or_else(|| Error::InvalidPrior(format!("unknown prior `{s}`")))?;
        let (a, b) = rest
            .split_once(',')
            .ok_or_else(|| Error::InvalidPrior(format!("expected custom:a,b, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidPrior(format!("`{v}` is not a number")))
        };
        Prior::custom(parse(a)?, parse(b)?)
    }
}

impl TryFrom<String> for Prior {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Prior> for String {
    fn from(p: Prior) -> Self {
        p.to_string()
    }
}

/// One prior per rate; PREV, TPR and TNR are configured independently.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PriorSpec {
    pub prev: Prior,
    pub tpr: Prior,
    pub tnr: Prior,
}

impl PriorSpec {
    pub fn uniform(prior: Prior) -> Self {
        PriorSpec {
            prev: prior,
            tpr: prior,
            tnr: prior,
        }
    }
}

/// How the prevalence marginal is treated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PrevalencePolicy {
    /// Inferred from the confusion matrix margins.
    #[default]
    Inferred,
    /// Known exactly, e.g. a test set curated to a fixed class ratio.
    Fixed { value: f64 },
    /// Replaced by an externally supplied Beta distribution.
    External { alpha: f64, beta: f64 },
}

impl PrevalencePolicy {
    pub fn fixed(value: f64) -> Result<Self> {
        let p = PrevalencePolicy::Fixed { value };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PrevalencePolicy::Inferred => Ok(()),
            PrevalencePolicy::Fixed { value } => {
                if (0.0..=1.0).contains(&value) {
                    Ok(())
                } else {
                    Err(Error::InvalidPrevalence(format!(
                        "fixed prevalence must lie in [0, 1], got {value}"
                    )))
                }
            }
            PrevalencePolicy::External { alpha, beta } => {
                if BetaParams::new(alpha, beta).is_proper() {
                    Ok(())
                } else {
                    Err(Error::InvalidPrevalence(format!(
                        "external prevalence Beta({alpha}, {beta}) is not proper"
                    )))
                }
            }
        }
    }
}

/// Metrics derivable from a CPM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MetricId {
    Prev,
    Acc,
    Tpr,
    Tnr,
    Ppv,
    Npv,
    F1,
    Mcc,
    Bm,
    Mk,
    Bacc,
}

impl MetricId {
    pub const ALL: [MetricId; 11] = [
        MetricId::Prev,
        MetricId::Acc,
        MetricId::Tpr,
        MetricId::Tnr,
        MetricId::Ppv,
        MetricId::Npv,
        MetricId::F1,
        MetricId::Mcc,
        MetricId::Bm,
        MetricId::Mk,
        MetricId::Bacc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricId::Prev => "PREV",
            MetricId::Acc => "ACC",
            MetricId::Tpr => "TPR",
            MetricId::Tnr => "TNR",
            MetricId::Ppv => "PPV",
            MetricId::Npv => "NPV",
            MetricId::F1 => "F1",
            MetricId::Mcc => "MCC",
            MetricId::Bm => "BM",
            MetricId::Mk => "MK",
            MetricId::Bacc => "BACC",
        }
    }

    /// Lower end of the metric's range; `-1` for the chance-corrected metrics.
    pub fn lower_bound(&self) -> f64 {
        match self {
            MetricId::Mcc | MetricId::Bm | MetricId::Mk => -1.0,
            _ => 0.0,
        }
    }

    /// True when the metric is a linear function of the CPM.
    pub fn is_linear(&self) -> bool {
        matches!(self, MetricId::Prev | MetricId::Acc)
    }

    /// Evaluates the metric on non-negative weights in CPM order.
    ///
    /// Weights need not be normalised: every metric is a ratio, so counts
    /// and probabilities give the same value. `None` marks a zero
    /// denominator.
    pub fn eval_weights(&self, w: &[f64; 4]) -> Option<f64> {
        let (tp, fn_, tn, fp) = (w[TP], w[FN], w[TN], w[FP]);
        let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };
        let total = tp + fn_ + tn + fp;
        match self {
            MetricId::Prev => ratio(tp + fn_, total),
            MetricId::Acc => ratio(tp + tn, total),
            MetricId::Tpr => ratio(tp, tp + fn_),
            MetricId::Tnr => ratio(tn, tn + fp),
            MetricId::Ppv => ratio(tp, tp + fp),
            MetricId::Npv => ratio(tn, tn + fn_),
            MetricId::F1 => ratio(2.0 * tp, 2.0 * tp + fp + fn_),
            MetricId::Mcc => {
                let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
                ratio(tp * tn - fp * fn_, den.sqrt())
            }
            MetricId::Bm => {
                Some(MetricId::Tpr.eval_weights(w)? + MetricId::Tnr.eval_weights(w)? - 1.0)
            }
            MetricId::Mk => {
                Some(MetricId::Ppv.eval_weights(w)? + MetricId::Npv.eval_weights(w)? - 1.0)
            }
            MetricId::Bacc => {
                Some((MetricId::Tpr.eval_weights(w)? + MetricId::Tnr.eval_weights(w)?) / 2.0)
            }
        }
    }

    pub fn eval(&self, theta: &Cpm) -> Option<f64> {
        self.eval_weights(&theta.0)
    }

    pub fn try_eval(&self, theta: &Cpm) -> Result<f64> {
        self.eval(theta)
            .ok_or(Error::UndefinedMetric { metric: *self })
    }

    /// Count-based evaluation, e.g. for point estimates.
    pub fn eval_counts(&self, counts: &[u64; 4]) -> Option<f64> {
        self.eval_weights(&counts.map(|c| c as f64))
    }
}

/// The metric function for `id`, as a plain function on the simplex.
pub fn metric_fn(id: MetricId) -> impl Fn(&Cpm) -> Option<f64> {
    move |theta| id.eval(theta)
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        MetricId::ALL
            .into_iter()
            .find(|m| m.name() == upper)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{s}`")))
    }
}

/// A point on the 4-simplex in CPM order `(θ_TP, θ_FN, θ_TN, θ_FP)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cpm([f64; 4]);

impl Cpm {
    pub fn new(theta: [f64; 4]) -> Result<Self> {
        if let Some(i) = theta.iter().position(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::SimplexViolation {
                reason: format!("component θ_{} = {}", CPM_COMPONENTS[i], theta[i]),
            });
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::SimplexViolation {
                reason: format!("components sum to {sum}"),
            });
        }
        Ok(Cpm(theta))
    }

    /// The CPM implied by prevalence and the two class-conditional rates.
    pub fn from_rates(prev: f64, tpr: f64, tnr: f64) -> Result<Self> {
        for (name, v) in [("PREV", prev), ("TPR", tpr), ("TNR", tnr)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::SimplexViolation {
                    reason: format!("{name} = {v} outside [0, 1]"),
                });
            }
        }
        Cpm::new(rates_to_theta(prev, tpr, tnr))
    }

    /// Empirical proportions of a count vector in CPM order.
    pub fn from_counts(counts: [u64; 4]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        Cpm::new(counts.map(|c| c as f64 / n as f64))
    }

    pub fn components(&self) -> [f64; 4] {
        self.0
    }
}

#[inline]
pub(crate) fn rates_to_theta(prev: f64, tpr: f64, tnr: f64) -> [f64; 4] {
    [
        tpr * prev,
        (1.0 - tpr) * prev,
        tnr * (1.0 - prev),
        (1.0 - tnr) * (1.0 - prev),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        let cm = validate_cm(26, 0, 2, 6).unwrap();
        assert_eq!(cm.n(), 34);
        assert_eq!(validate_cm(0, 0, 0, 0), Err(Error::EmptyMatrix));
        assert_eq!(validate_cm(1, 0, 0, 0).unwrap().n(), 1);
        assert!(matches!(
            validate_cm(1, -1, 0, 0),
            Err(Error::NegativeCount { field: "fn", .. })
        ));
    }

    #[test]
    fn table_layout() {
        let cm = ConfusionMatrix::from_table([[26, 0], [2, 6]]).unwrap();
        assert_eq!(cm, validate_cm(26, 0, 2, 6).unwrap());
        assert_eq!(cm.cpm_counts(), [26, 0, 6, 2]);
    }

    #[test]
    fn random_guess_has_zero_bm() {
        let theta = Cpm::new([0.25; 4]).unwrap();
        assert_eq!(MetricId::Bm.eval(&theta), Some(0.0));
    }

    #[test]
    fn perfect_classifier_boundary() {
        let theta = Cpm::new([0.5, 0.0, 0.5, 0.0]).unwrap();
        assert_eq!(MetricId::Tpr.eval(&theta), Some(1.0));
        assert_eq!(MetricId::Tnr.eval(&theta), Some(1.0));
        assert_eq!(MetricId::Bm.eval(&theta), Some(1.0));
        assert_eq!(MetricId::Mcc.eval(&theta), Some(1.0));
    }

    #[test]
    fn theta_from_point_rates() {
        let prev = 26.0 / 34.0;
        let theta = Cpm::from_rates(prev, 1.0, 0.75).unwrap();
        let c = theta.components();
        for (got, want) in c.iter().zip([0.7647, 0.0, 0.1765, 0.0588]) {
            assert!((got - want).abs() < 1e-4, "{c:?}");
        }
        let acc = MetricId::Acc.eval(&theta).unwrap();
        assert!((acc - 32.0 / 34.0).abs() < 1e-12);
        assert!((acc - 0.9412).abs() < 1e-4);
    }

    #[test]
    fn undefined_denominators() {
        let theta = Cpm::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(MetricId::Tnr.eval(&theta), None);
        assert_eq!(MetricId::Npv.eval(&theta), None);
        assert_eq!(MetricId::Mcc.eval(&theta), None);
        assert_eq!(MetricId::Bm.eval(&theta), None);
        assert_eq!(MetricId::Ppv.eval(&theta), Some(1.0));
        assert!(matches!(
            MetricId::Tnr.try_eval(&theta),
            Err(Error::UndefinedMetric { metric: MetricId::Tnr })
        ));
    }

    #[test]
    fn simplex_violations() {
        assert!(matches!(
            Cpm::new([0.5, 0.5, 0.1, 0.0]),
            Err(Error::SimplexViolation { .. })
        ));
        assert!(matches!(
            Cpm::new([1.1, -0.1, 0.0, 0.0]),
            Err(Error::SimplexViolation { .. })
        ));
        assert!(Cpm::new([0.25 + 1e-10, 0.25, 0.25, 0.25]).is_ok());
    }

    #[test]
    fn prior_parsing() {
        assert_eq!("laplace".parse::<Prior>().unwrap(), Prior::Laplace);
        assert_eq!("Jeffreys".parse::<Prior>().unwrap(), Prior::Jeffreys);
        assert_eq!(
            "custom:2,0.5".parse::<Prior>().unwrap(),
            Prior::Custom { alpha: 2.0, beta: 0.5 }
        );
        assert!("custom:-1,1".parse::<Prior>().is_err());
        assert!("bogus".parse::<Prior>().is_err());
        let p: Prior = serde_json::from_str("\"custom:1,3\"").unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), "\"custom:1,3\"");
    }

    #[test]
    fn cm_record_serde() {
        let cm: ConfusionMatrix =
            serde_json::from_str(r#"{"tp":26,"fn":0,"fp":2,"tn":6}"#).unwrap();
        assert_eq!(cm.n(), 34);
        let json = serde_json::to_string(&cm).unwrap();
        assert_eq!(json, r#"{"tp":26,"fn":0,"fp":2,"tn":6,"n":34}"#);
        assert!(serde_json::from_str::<ConfusionMatrix>(r#"{"tp":1,"fn":0,"fp":2}"#).is_err());
        assert!(
            serde_json::from_str::<ConfusionMatrix>(r#"{"tp":1,"fn":0,"fp":2,"tn":0,"n":4}"#)
                .is_err()
        );
    }

    #[test]
    fn prevalence_policy_serde() {
        let p: PrevalencePolicy = serde_json::from_str(r#"{"mode":"fixed","value":0.5}"#).unwrap();
        assert_eq!(p, PrevalencePolicy::Fixed { value: 0.5 });
        assert!(PrevalencePolicy::fixed(1.5).is_err());
        assert!(PrevalencePolicy::fixed(1.0).is_ok());
    }
}
