//! Metric posteriors from CPM samples.
//!
//! The credible interval is the highest posterior density (HPD) interval,
//! estimated as the narrowest window of order statistics holding
//! `⌈credibility·S⌉` samples. Metric uncertainty (MU) is its length.

use serde::{Deserialize, Serialize};

use crate::cm::MetricId;
use crate::error::{Error, Result};
use crate::posterior::CpmSampleSet;

pub const DEFAULT_CREDIBILITY: f64 = 0.95;

/// Mass of the window whose midpoint serves as the mode estimate.
const MODE_MASS: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPosterior {
    pub metric: MetricId,
    /// Sorted valid samples.
    #[serde(skip)]
    pub samples: Vec<f64>,
    /// Draws at which the metric was undefined (zero denominator).
    pub invalid: usize,
    pub hpd_low: f64,
    pub hpd_high: f64,
    pub mu: f64,
    pub mean: f64,
    pub median: f64,
    pub mode_estimate: f64,
    pub credibility: f64,
    /// Set when the density inside the interval has interior gaps.
    pub multimodal: bool,
}

impl MetricPosterior {
    /// Builds the posterior from per-draw metric values.
    pub fn from_values(
        metric: MetricId,
        values: impl IntoIterator<Item = Option<f64>>,
        credibility: f64,
    ) -> Result<Self> {
        check_credibility(credibility)?;
        let mut invalid = 0;
        let mut samples: Vec<f64> = values
            .into_iter()
            .filter_map(|v| {
                if v.is_none() {
                    invalid += 1;
                }
                v
            })
            .collect();
        if samples.is_empty() {
            return Err(Error::AllSamplesInvalid { metric });
        }
        samples.sort_by(f64::total_cmp);

        let (hpd_low, hpd_high) = hpd_sorted(&samples, credibility);
        let (mean, median, mode_estimate) = summaries_sorted(&samples);
        let multimodal = interior_gaps(&samples, credibility);
        Ok(MetricPosterior {
            metric,
            samples,
            invalid,
            hpd_low,
            hpd_high,
            mu: hpd_high - hpd_low,
            mean,
            median,
            mode_estimate,
            credibility,
            multimodal,
        })
    }

    /// Fraction of samples inside the HPD interval.
    pub fn coverage(&self) -> f64 {
        let inside = self
            .samples
            .iter()
            .filter(|&&x| x >= self.hpd_low && x <= self.hpd_high)
            .count();
        inside as f64 / self.samples.len() as f64
    }
}

fn check_credibility(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "credibility must lie in (0, 1), got {c}"
        )))
    }
}

pub fn metric_posterior(
    cpm: &CpmSampleSet,
    id: MetricId,
    credibility: f64,
) -> Result<MetricPosterior> {
    if cpm.is_empty() {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    MetricPosterior::from_values(id, cpm.metric_values(id), credibility)
}

/// Number of samples an interval of the given mass must contain.
fn window_len(n: usize, mass: f64) -> usize {
    ((mass * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Narrowest interval holding `⌈mass·n⌉` of the sorted samples. Ties go to
/// the smallest lower endpoint.
pub fn hpd_sorted(sorted: &[f64], mass: f64) -> (f64, f64) {
    assert!(!sorted.is_empty());
    let m = window_len(sorted.len(), mass);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for i in 0..=sorted.len() - m {
        let w = sorted[i + m - 1] - sorted[i];
        if w < best_width {
            best_width = w;
            best = i;
        }
    }
    (sorted[best], sorted[best + m - 1])
}

/// HPD interval of unsorted samples.
pub fn hpd(samples: &[f64], mass: f64) -> (f64, f64) {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    hpd_sorted(&s, mass)
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed interval at the given mass.
pub fn equal_tailed_sorted(sorted: &[f64], mass: f64) -> (f64, f64) {
    let tail = (1.0 - mass) / 2.0;
    (
        quantile_sorted(sorted, tail),
        quantile_sorted(sorted, 1.0 - tail),
    )
}

/// Mean taken about the first sample; exact for constant streams.
pub fn shifted_mean(xs: &[f64]) -> f64 {
    let pivot = xs[0];
    pivot + xs.iter().map(|x| x - pivot).sum::<f64>() / xs.len() as f64
}

fn summaries_sorted(sorted: &[f64]) -> (f64, f64, f64) {
    let mean = shifted_mean(sorted);
    let median = quantile_sorted(sorted, 0.5);
    let (lo, hi) = hpd_sorted(sorted, MODE_MASS);
    (mean, median, (lo + hi) / 2.0)
}

/// `(mean, median, mode_estimate)`; the mode estimate is the midpoint of the
/// narrowest window holding 10% of the samples.
pub fn point_summaries(samples: &[f64]) -> Result<(f64, f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample stream".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(summaries_sorted(&s))
}

/// Flags a density valley inside the HPD window.
///
/// The window is cut into blocks of equal sample count; a block's density is
/// its count over its width. For a unimodal density no interior block can be
/// much sparser than the sparser edge block. More than 2% of blocks below half
/// the edge density raises the flag.
fn interior_gaps(sorted: &[f64], credibility: f64) -> bool {
    let m = window_len(sorted.len(), credibility);
    if m < 200 {
        return false;
    }
    let (lo, _) = hpd_sorted(sorted, credibility);
    let start = sorted.partition_point(|&x| x < lo);
    let window = &sorted[start..(start + m).min(sorted.len())];
    let k = (window.len() / 100).max(20);
    let density: Vec<f64> = window
        .chunks_exact(k)
        .map(|b| k as f64 / (b[k - 1] - b[0]))
        .collect();
    if density.len() < 3 {
        return false;
    }
    let edge = density[0].min(density[density.len() - 1]);
    let sparse = density[1..density.len() - 1]
        .iter()
        .filter(|&&d| d < 0.5 * edge)
        .count();
    sparse as f64 > 0.02 * density.len() as f64
}

/// Posterior probabilities that the classifier is informative (BM > 0) or
/// deceptive (BM < 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmAssessment {
    pub r_inf: f64,
    pub r_dec: f64,
    pub posterior: MetricPosterior,
}

pub fn bm_assessment(cpm: &CpmSampleSet, credibility: f64) -> Result<BmAssessment> {
    let posterior = metric_posterior(cpm, MetricId::Bm, credibility)?;
    let n = posterior.samples.len() as f64;
    let dec = posterior.samples.partition_point(|&x| x < 0.0);
    let non_pos = posterior.samples.partition_point(|&x| x <= 0.0);
    let inf = posterior.samples.len() - non_pos;
    Ok(BmAssessment {
        r_inf: inf as f64 / n,
        r_dec: dec as f64 / n,
        posterior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::{validate_cm, PrevalencePolicy, PriorSpec};
    use crate::posterior::{laplace_three_beta, sample_cpm, ModelKind, PosteriorModel};
    use crate::rng::seeded;
    use rand::Rng;
    use rand_distr::{Beta, Distribution};

    fn beta_stream(a: f64, b: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeded(seed);
        let d = Beta::new(a, b).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn hpd_tie_break_prefers_lowest() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(hpd_sorted(&s, 0.5), (0.0, 1.0));
    }

    #[test]
    fn hpd_window_length() {
        assert_eq!(window_len(20_000, 0.95), 19_000);
        assert_eq!(window_len(10, 0.95), 10);
        assert_eq!(window_len(3, 0.01), 1);
    }

    #[test]
    fn small_cm_intervals() {
        let cm = validate_cm(26, 0, 2, 6).unwrap();
        let set = sample_cpm(&laplace_three_beta(&cm).unwrap(), 20_000, 42).unwrap();
        let tpr = metric_posterior(&set, MetricId::Tpr, 0.95).unwrap();
        assert!((tpr.hpd_low - 0.89).abs() <= 0.01, "{}", tpr.hpd_low);
        assert!((tpr.hpd_high - 1.00).abs() <= 0.01, "{}", tpr.hpd_high);
        let tnr = metric_posterior(&set, MetricId::Tnr, 0.95).unwrap();
        assert!((tnr.hpd_low - 0.43).abs() <= 0.02, "{}", tnr.hpd_low);
        assert!((tnr.hpd_high - 0.95).abs() <= 0.02, "{}", tnr.hpd_high);
        assert!(!tpr.multimodal && !tnr.multimodal);
    }

    #[test]
    fn monotone_density_hpd_lower_bound() {
        let s = beta_stream(27.0, 1.0, 20_000, 9);
        let (lo, _) = hpd(&s, 0.95);
        let oracle = 0.05f64.powf(1.0 / 27.0);
        assert!((lo - oracle).abs() < 0.005, "{lo} vs {oracle}");
    }

    #[test]
    fn constant_stream_summaries() {
        assert_eq!(point_summaries(&[0.3; 50]).unwrap(), (0.3, 0.3, 0.3));
        assert!(point_summaries(&[]).is_err());
    }

    #[test]
    fn beta_stream_mean() {
        let s = beta_stream(27.0, 9.0, 20_000, 10);
        let (mean, _, _) = point_summaries(&s).unwrap();
        let var = 27.0 * 9.0 / (36.0f64.powi(2) * 37.0);
        assert!((mean - 0.75).abs() < 3.0 * (var / 20_000.0f64).sqrt());
    }

    #[test]
    fn uniform_stream_median() {
        let mut rng = seeded(11);
        let s: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let (_, median, _) = point_summaries(&s).unwrap();
        assert!((median - 0.5).abs() < 0.01);
    }

    #[test]
    fn coverage_near_credibility() {
        let s = beta_stream(7.0, 3.0, 20_000, 12);
        let mp = MetricPosterior::from_values(MetricId::Tnr, s.into_iter().map(Some), 0.95)
            .unwrap();
        let tol = 4.0 / (20_000.0f64).sqrt();
        assert!((mp.coverage() - 0.95).abs() <= tol);
        assert!(mp.hpd_low <= mp.median && mp.median <= mp.hpd_high);
    }

    #[test]
    fn bimodal_stream_flagged() {
        let mut s = beta_stream(40.0, 160.0, 10_000, 13);
        s.extend(beta_stream(160.0, 40.0, 10_000, 14));
        let mp = MetricPosterior::from_values(MetricId::Acc, s.into_iter().map(Some), 0.95)
            .unwrap();
        assert!(mp.multimodal);
    }

    #[test]
    fn all_invalid_rejected() {
        let err = MetricPosterior::from_values(MetricId::Tnr, vec![None; 10], 0.95).unwrap_err();
        assert_eq!(err, Error::AllSamplesInvalid { metric: MetricId::Tnr });
    }

    #[test]
    fn invalid_samples_counted() {
        let vals = vec![Some(0.5), None, Some(0.7), None];
        let mp = MetricPosterior::from_values(MetricId::Tnr, vals, 0.95).unwrap();
        assert_eq!(mp.invalid, 2);
        assert_eq!(mp.samples.len(), 2);
    }

    #[test]
    fn bad_credibility() {
        assert!(MetricPosterior::from_values(MetricId::Acc, vec![Some(0.1)], 1.0).is_err());
    }

    #[test]
    fn prior_only_bm_is_symmetric() {
        let model = PosteriorModel::prior_only(
            &PriorSpec::default(),
            PrevalencePolicy::Inferred,
            ModelKind::ThreeBeta,
        )
        .unwrap();
        let set = sample_cpm(&model, 20_000, 15).unwrap();
        let bm = bm_assessment(&set, 0.95).unwrap();
        assert!((bm.r_dec - 0.5).abs() <= 0.01, "{}", bm.r_dec);
        assert!((bm.r_inf + bm.r_dec - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strong_classifier_rarely_deceptive() {
        let cm = validate_cm(26, 0, 2, 6).unwrap();
        let set = sample_cpm(&laplace_three_beta(&cm).unwrap(), 20_000, 16).unwrap();
        assert!(bm_assessment(&set, 0.95).unwrap().r_dec < 0.005);
    }
}
