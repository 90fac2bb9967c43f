//! The operation behind each endpoint. Pure functions of their request, so
//! the command-line tool calls them directly.

use cmu_core::analysis::run_analysis;
use cmu_core::input::{parse_accuracy, parse_leaderboard_csv};
use cmu_core::leaderboard::{allocate_prizes, prob_best, rank_distribution, Submission};
use cmu_core::posterior::build_posterior;
use cmu_core::predictive::{
    empirical_metric_distribution, metric_spread_audit, synthesize_cms, variance_audit,
};
use cmu_core::samplesize::{default_grid, n_for_mu, power_simulation, SampleSizePlan};
use cmu_core::{rng, Error, MetricId, PosteriorModel};

use crate::api::*;

pub fn analyze(req: AnalyzeRequest, limits: &Limits) -> Result<AnalyzeResponse, ApiError> {
    limits.check("samples", req.options.samples, limits.max_samples)?;
    limits.check("bins", req.bins, limits.max_bins)?;
    let cm = req.cm.to_cm()?;
    let analysis = run_analysis(&cm, &req.options)?;
    let histograms = if req.bins == 0 {
        Vec::new()
    } else {
        analysis.histograms(req.bins)
    };
    Ok(AnalyzeResponse {
        report: analysis.report,
        histograms,
    })
}

pub fn bm(req: BmRequest, limits: &Limits) -> Result<BmResponse, ApiError> {
    limits.check("samples", req.options.samples, limits.max_samples)?;
    let cm = req.cm.to_cm()?;
    let mut options = req.options;
    options.metrics = Some(vec![MetricId::Bm]);
    let report = run_analysis(&cm, &options)?.report;
    let (Some(bm), Some(summary)) = (report.bm.clone(), report.metric(MetricId::Bm).cloned()) else {
        return Err(Error::AllSamplesInvalid { metric: MetricId::Bm }.into());
    };
    Ok(BmResponse {
        seed: report.seed,
        samples: report.samples,
        r_inf: bm.r_inf,
        r_dec: bm.r_dec,
        summary,
        warnings: report.warnings,
    })
}

pub fn predictive(req: PredictiveRequest, limits: &Limits) -> Result<PredictiveResponse, ApiError> {
    limits.check("draws", req.draws, limits.max_draws)?;
    let cm = req.cm.to_cm()?;
    let model = build_posterior(&cm, &req.prior_spec(), req.prevalence, req.model)?;
    let n_synth = req.n_synth.unwrap_or_else(|| cm.n());
    let seed = req.seed.unwrap_or_else(rng::entropy_seed);
    let set = synthesize_cms(&model, n_synth, req.draws, seed)?;
    let distribution = empirical_metric_distribution(&set, req.metric);
    let spread = metric_spread_audit(&model, req.metric, n_synth, req.draws, seed)?;
    let components = match model {
        PosteriorModel::Dirichlet(_) => Some(variance_audit(&model, n_synth, req.draws, seed)?),
        PosteriorModel::ThreeBeta(_) => None,
    };
    Ok(PredictiveResponse {
        seed,
        n_synth,
        draws: req.draws,
        posterior: model,
        distribution,
        spread,
        components,
    })
}

fn submissions(req: &LeaderboardRequest) -> Result<Vec<Submission>, ApiError> {
    match (&req.csv, req.submissions.is_empty()) {
        (Some(text), true) => Ok(parse_leaderboard_csv(text, req.n)?),
        (None, false) => req
            .submissions
            .iter()
            .map(|s| {
                let n = s.n.or(req.n).ok_or_else(|| {
                    Error::InvalidArgument(format!("no test-set size for `{}`", s.name))
                })?;
                let sub = match &s.accuracy {
                    AccuracyInput::Number(acc) => Submission::new(s.name.clone(), *acc, n),
                    AccuracyInput::Text(t) => {
                        let (acc, decimals) = parse_accuracy(t.trim()).ok_or_else(|| {
                            Error::InvalidArgument(format!(
                                "accuracy `{t}` of `{}` is not a number",
                                s.name
                            ))
                        })?;
                        Submission::with_decimals(s.name.clone(), acc, n, decimals)
                    }
                };
                Ok(sub?)
            })
            .collect(),
        _ => Err(ApiError::new(
            400,
            "InvalidArgument",
            "give either `submissions` or `csv`, not both or neither",
        )),
    }
}

pub fn leaderboard(req: LeaderboardRequest, limits: &Limits) -> Result<LeaderboardResponse, ApiError> {
    limits.check("draws", req.draws, limits.max_draws)?;
    let subs = submissions(&req)?;
    let seed = req.seed.unwrap_or_else(rng::entropy_seed);
    let matrix = rank_distribution(&subs, req.prior, req.draws, seed)?;
    let best = prob_best(&subs, &matrix)?;
    let prizes = if req.prizes.is_empty() {
        None
    } else {
        Some(allocate_prizes(&matrix, &req.prizes)?)
    };
    Ok(LeaderboardResponse {
        seed,
        submissions: subs,
        matrix,
        prob_best: best,
        prizes,
    })
}

pub fn samplesize(req: SampleSizeRequest, limits: &Limits) -> Result<SampleSizeResponse, ApiError> {
    let ns = req.ns.clone().unwrap_or_else(default_grid);
    limits.check("candidate grid size", ns.len(), limits.max_grid)?;
    limits.check("sims", req.sims, limits.max_sims)?;
    let plan = SampleSizePlan {
        power: req.power,
        omega: req.omega,
        k: req.k,
        prior: req.prior,
        credibility: req.credibility,
        ..SampleSizePlan::new(req.target_mu)
    };
    plan.validate()?;
    let seed = req.seed.unwrap_or_else(rng::entropy_seed);
    let plan = power_simulation(&plan, &ns, req.sims, seed)?;
    Ok(SampleSizeResponse {
        seed,
        plan,
        bound_n: n_for_mu(req.target_mu).ok(),
    })
}
