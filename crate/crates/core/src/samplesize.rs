//! Sample-size determination for metrics with a Beta posterior.
//!
//! Two tools:
//!
//! * the closed-form worst case `MU ≲ 2/√N` (the HPD of a near-normal Beta
//!   spans about four standard deviations, and the standard deviation is
//!   largest at a rate of one half), with its inverse `N = ⌈4/MU²⌉`;
//! * a power simulation: draw plausible true rates from a generating Beta
//!   with mode `ω` and concentration `k`, simulate a study of size `N`, and
//!   record the HPD width of the resulting posterior. The `power`-quantile of
//!   those widths is the MU the study achieves with that probability.

use rand_distr::{Beta, Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use crate::cm::{BetaParams, Prior};
use crate::error::{Error, Result};
use crate::metrics::quantile_sorted;
use crate::rng;

pub const MIN_SIMS_PER_N: usize = 200;
pub const DEFAULT_SIMS_PER_N: usize = 1000;

/// Upper bound on MU at sample size `n`; only meaningful for `n > 20`.
pub fn mu_bound(n: u64) -> Result<f64> {
    if n <= 20 {
        return Err(Error::OutOfRegime { n });
    }
    Ok(2.0 / (n as f64).sqrt())
}

/// Sample size at which the worst-case MU drops to `target_mu`.
pub fn n_for_mu(target_mu: f64) -> Result<u64> {
    if !(target_mu > 0.0 && target_mu < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target MU must lie in (0, 1), got {target_mu}"
        )));
    }
    let exact = 4.0 / (target_mu * target_mu);
    // 4/0.001² lands a few ulps either side of 4e6 depending on rounding.
    let nearest = exact.round();
    let n = if (exact - nearest).abs() <= 1e-9 * exact {
        nearest
    } else {
        exact.ceil()
    };
    Ok(n as u64)
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    // The optimum may sit on the boundary (monotone densities).
    [lo, mid, hi]
        .into_iter()
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap()
}

/// Exact HPD interval of a Beta distribution holding `mass`, or `None` when
/// the density is U-shaped and the HPD region is two disjoint pieces.
pub fn beta_hpd(b: BetaParams, mass: f64) -> Option<(f64, f64)> {
    let (a, bb) = (b.alpha, b.beta);
    let q = |p: f64| inv_beta_reg(a, bb, p.clamp(0.0, 1.0));
    if a < 1.0 && bb < 1.0 {
        return None;
    }
    if a <= 1.0 && bb >= 1.0 && !(a == 1.0 && bb == 1.0) {
        return Some((0.0, q(mass)));
    }
    if bb <= 1.0 && a >= 1.0 && !(a == 1.0 && bb == 1.0) {
        return Some((q(1.0 - mass), 1.0));
    }
    if a == 1.0 && bb == 1.0 {
        return Some((0.0, mass));
    }
    let p = golden_min(|p| q(p + mass) - q(p), 0.0, 1.0 - mass);
    Some((q(p), q(p + mass)))
}

/// Total length of the Beta HPD region, including the U-shaped case.
pub fn beta_hpd_width(b: BetaParams, mass: f64) -> f64 {
    match beta_hpd(b, mass) {
        Some((lo, hi)) => hi - lo,
        None => {
            // Excluded middle: the widest interval holding the remaining mass.
            let gap = 1.0 - mass;
            let q = |p: f64| inv_beta_reg(b.alpha, b.beta, p.clamp(0.0, 1.0));
            let p = golden_min(|p| -(q(p + gap) - q(p)), 0.0, mass);
            1.0 - (q(p + gap) - q(p))
        }
    }
}

/// Beta with mode `omega` and concentration `k`.
pub fn generating_beta(omega: f64, k: f64) -> BetaParams {
    BetaParams::new(omega * (k - 2.0) + 1.0, (1.0 - omega) * (k - 2.0) + 1.0)
}

/// Mode of a Beta with both shapes above one.
pub fn beta_mode(b: BetaParams) -> f64 {
    (b.alpha - 1.0) / (b.alpha + b.beta - 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u64,
    /// MU reached with probability `power`.
    pub achieved_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizePlan {
    pub target_mu: f64,
    pub power: f64,
    pub omega: f64,
    pub k: f64,
    pub prior: Prior,
    /// Mass of the HPD interval whose width is MU.
    pub credibility: f64,
    #[serde(default)]
    pub curve: Vec<CurvePoint>,
    #[serde(default)]
    pub result_n: Option<u64>,
    #[serde(default)]
    pub sims_per_n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SampleSizePlan {
    pub fn new(target_mu: f64) -> Self {
        SampleSizePlan {
            target_mu,
            power: 0.95,
            omega: 0.8,
            k: 10.0,
            prior: Prior::Laplace,
            credibility: 0.95,
            curve: Vec::new(),
            result_n: None,
            sims_per_n: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.target_mu > 0.0 && self.target_mu < 0.95) {
            return bad(format!("target MU must lie in (0, 0.95), got {}", self.target_mu));
        }
        if !(self.k > 2.0 && self.k.is_finite()) {
            return bad(format!("concentration k must exceed 2, got {}", self.k));
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return bad(format!("mode omega must lie in (0, 1), got {}", self.omega));
        }
        if !(self.power > 0.0 && self.power < 1.0) {
            return bad(format!("power must lie in (0, 1), got {}", self.power));
        }
        if !(self.credibility > 0.0 && self.credibility < 1.0) {
            return bad(format!("credibility must lie in (0, 1), got {}", self.credibility));
        }
        Ok(())
    }
}

/// Logarithmic grid, six points per decade from 10 to 10⁶.
pub fn default_grid() -> Vec<u64> {
    let mut v: Vec<u64> = (0..=30)
        .map(|i| 10f64.powf(1.0 + i as f64 / 6.0).round() as u64)
        .collect();
    v.dedup();
    v
}

fn check_candidates(ns: &[u64], sims: usize) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::InvalidArgument("no candidate sample sizes".into()));
    }
    if ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "candidate sample sizes must be positive and strictly ascending".into(),
        ));
    }
    if sims < MIN_SIMS_PER_N {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SIMS_PER_N} simulations per N, got {sims}"
        )));
    }
    Ok(())
}

/// HPD widths of `sims` simulated studies of size `n`.
pub fn simulate_widths(plan: &SampleSizePlan, n: u64, sims: usize, seed: u64, stream: u64) -> Vec<f64> {
    let g = generating_beta(plan.omega, plan.k);
    let gen = Beta::new(g.alpha, g.beta).expect("validated plan");
    let prior = plan.prior.params();
    let mut rng = rng::shard_rng(seed, stream);
    (0..sims)
        .map(|_| {
            let rate = gen.sample(&mut rng);
            let z = Binomial::new(n, rate).expect("rate in [0, 1]").sample(&mut rng);
            let post = prior.updated(z, n - z);
            if post.is_proper() {
                beta_hpd_width(post, plan.credibility)
            } else {
                // Improper posterior: nothing learned about the rate.
                1.0
            }
        })
        .collect()
}

/// Achieved MU at each candidate sample size.
pub fn power_curve(
    plan: &SampleSizePlan,
    candidate_ns: &[u64],
    sims_per_n: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    plan.validate()?;
    check_candidates(candidate_ns, sims_per_n)?;
    Ok(candidate_ns
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut widths = simulate_widths(plan, n, sims_per_n, seed, i as u64);
            widths.sort_by(f64::total_cmp);
            CurvePoint {
                n,
                achieved_mu: quantile_sorted(&widths, plan.power),
            }
        })
        .collect())
}

/// Fills the plan's curve and the smallest sufficient N.
pub fn power_simulation(
    plan: &SampleSizePlan,
    candidate_ns: &[u64],
    sims_per_n: usize,
    seed: u64,
) -> Result<SampleSizePlan> {
    let curve = power_curve(plan, candidate_ns, sims_per_n, seed)?;
    let result_n = curve
        .iter()
        .find(|c| c.achieved_mu <= plan.target_mu)
        .map(|c| c.n);
    let mut out = plan.clone();
    out.curve = curve;
    out.result_n = result_n;
    out.sims_per_n = sims_per_n;
    out.seed = seed;
    match result_n {
        Some(_) => Ok(out),
        None => {
            let last = out.curve.last().expect("non-empty grid");
            Err(Error::TargetUnreachable {
                target: plan.target_mu,
                largest_n: last.n,
                achieved: last.achieved_mu,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        assert!((mu_bound(100).unwrap() - 0.2).abs() < 1e-15);
        assert!((mu_bound(4_000_000).unwrap() - 0.001).abs() < 1e-15);
        assert!(mu_bound(10_000_000_000).unwrap() <= 2e-5);
        assert!(matches!(mu_bound(20), Err(Error::OutOfRegime { n: 20 })));
    }

    #[test]
    fn inversion() {
        assert_eq!(n_for_mu(0.2).unwrap(), 100);
        assert_eq!(n_for_mu(0.001).unwrap(), 4_000_000);
        assert_eq!(n_for_mu(0.02).unwrap(), 10_000);
        assert_eq!(n_for_mu(0.00001).unwrap(), 40_000_000_000);
        assert!(n_for_mu(0.0).is_err());
        assert!(n_for_mu(1.0).is_err());
    }

    #[test]
    fn mode_round_trip() {
        for (omega, k) in [(0.8, 10.0), (0.5, 3.0), (0.1, 1000.0)] {
            assert!((beta_mode(generating_beta(omega, k)) - omega).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_hpd_closed_form() {
        let (lo, hi) = beta_hpd(BetaParams::new(27.0, 1.0), 0.95).unwrap();
        assert!((lo - 0.05f64.powf(1.0 / 27.0)).abs() < 1e-9);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn symmetric_hpd_is_central() {
        let b = BetaParams::new(5.0, 5.0);
        let (lo, hi) = beta_hpd(b, 0.95).unwrap();
        assert!((lo + hi - 1.0).abs() < 1e-7, "{lo} {hi}");
        assert!((inv_beta_reg(5.0, 5.0, 0.025) - lo).abs() < 1e-7);
    }

    #[test]
    fn large_n_width_matches_normal() {
        // Beta(N/2, N/2): width ≈ 2·1.96·0.5/√(N+1).
        let n = 1_000_000.0;
        let w = beta_hpd_width(BetaParams::new(n / 2.0, n / 2.0), 0.95);
        let normal = 2.0 * 1.959_963_985 * 0.5 / (n + 1.0f64).sqrt();
        assert!((w - normal).abs() / normal < 1e-3, "{w} vs {normal}");
    }

    #[test]
    fn u_shaped_width() {
        let w = beta_hpd_width(BetaParams::new(0.5, 0.5), 0.95);
        // Arcsine law: the central 5% mass is the excluded gap.
        let gap = (1.0 - (std::f64::consts::PI * 0.475).cos()) / 2.0;
        let gap = 1.0 - 2.0 * gap;
        assert!((w - (1.0 - gap)).abs() < 1e-6, "{w} {gap}");
    }

    #[test]
    fn plan_validation() {
        let mut p = SampleSizePlan::new(0.1);
        assert!(p.validate().is_ok());
        p.k = 2.0;
        assert!(p.validate().is_err());
        let mut p = SampleSizePlan::new(0.96);
        assert!(p.validate().is_err());
        p.target_mu = 0.1;
        p.omega = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn candidate_checks() {
        let p = SampleSizePlan::new(0.1);
        assert!(power_curve(&p, &[100, 50], 200, 0).is_err());
        assert!(power_curve(&p, &[100], 199, 0).is_err());
        assert!(power_curve(&p, &[], 500, 0).is_err());
    }

    #[test]
    fn unreachable_target() {
        let p = SampleSizePlan::new(0.01);
        let err = power_simulation(&p, &[10, 100], 200, 1).unwrap_err();
        assert!(matches!(err, Error::TargetUnreachable { largest_n: 100, .. }));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid();
        assert_eq!(g.first(), Some(&10));
        assert_eq!(g.last(), Some(&1_000_000));
        assert_eq!(g.len(), 31);
        assert!(g.contains(&100) && g.contains(&1000) && g.contains(&10_000));
    }
}
