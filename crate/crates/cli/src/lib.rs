//! The `cmu` command line.
//!
//! Every subcommand except `serve` builds the same request document the HTTP
//! service accepts and runs the same operation, so the two surfaces agree.

use std::fmt::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cmu_core::analysis::{render_table, AnalysisOptions};
use cmu_core::input::{parse_cm, CmInput};
use cmu_core::render::DEFAULT_BINS;
use cmu_core::samplesize::DEFAULT_SIMS_PER_N;
use cmu_core::{Error, MetricId, ModelKind, PrevalencePolicy, Prior};
use cmu_service::api::*;
use cmu_service::{ops, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "cmu", version, about = "Bayesian uncertainty of binary classifier metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Posterior summaries of every metric for one confusion matrix.
    Analyze(AnalyzeArgs),
    /// Probability that a classifier is informative or deceptive.
    Bm(BmArgs),
    /// Posterior-predictive synthetic confusion matrices.
    Predictive(PredictiveArgs),
    /// Rank probabilities for a leaderboard of reported accuracies.
    Leaderboard(LeaderboardArgs),
    /// Test-set size needed for a target metric uncertainty.
    Samplesize(SampleSizeArgs),
    /// Run the HTTP JSON service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Confusion matrix: a file (JSON or CSV) or inline `tp,fn,fp,tn`.
    #[arg(long)]
    pub cm: String,
    /// Prior for every rate: laplace, jeffreys, haldane or custom:a,b.
    #[arg(long, default_value = "laplace")]
    pub prior: Prior,
    #[arg(long)]
    pub prior_prev: Option<Prior>,
    #[arg(long)]
    pub prior_tpr: Option<Prior>,
    #[arg(long)]
    pub prior_tnr: Option<Prior>,
    /// Treat the prevalence as known exactly.
    #[arg(long, conflicts_with = "prev_counts")]
    pub prev_fixed: Option<f64>,
    /// Take the prevalence from external counts `positives,negatives`.
    #[arg(long, value_parser = parse_pair)]
    pub prev_counts: Option<(u64, u64)>,
    #[arg(long, default_value = "three-beta")]
    pub model: ModelKind,
}

fn parse_pair(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let p = |x: &str| x.trim().parse::<u64>().map_err(|_| format!("`{x}` is not a count"));
    Ok((p(a)?, p(b)?))
}

impl ModelArgs {
    fn cm(&self) -> Result<CmInput, ApiError> {
        Ok(CmInput::Record(parse_cm(&self.cm)?.into()))
    }

    fn prevalence(&self) -> PrevalencePolicy {
        match (self.prev_fixed, self.prev_counts) {
            (Some(value), _) => PrevalencePolicy::Fixed { value },
            (None, Some((pos, neg))) => {
                let b = self.prior_prev.unwrap_or(self.prior).params().updated(pos, neg);
                PrevalencePolicy::External {
                    alpha: b.alpha,
                    beta: b.beta,
                }
            }
            (None, None) => PrevalencePolicy::Inferred,
        }
    }
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = cmu_core::posterior::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.95)]
    pub credibility: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Comma-separated subset of metrics, e.g. `TPR,TNR`.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricId>>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Directory to write one histogram CSV per metric into.
    #[arg(long)]
    pub histograms: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct BmArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PredictiveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Size of each synthetic matrix; the observed total by default.
    #[arg(long)]
    pub n_synth: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_PREDICTIVE_DRAWS)]
    pub draws: usize,
    #[arg(long, default_value = "ACC")]
    pub metric: MetricId,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct LeaderboardArgs {
    /// CSV with a `name,accuracy[,n]` header.
    #[arg(long)]
    pub csv: PathBuf,
    /// Test-set size when the CSV has no `n` column.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value = "laplace")]
    pub prior: Prior,
    #[arg(long, default_value_t = DEFAULT_LEADERBOARD_DRAWS)]
    pub draws: usize,
    /// Comma-separated prize amounts for ranks 1, 2, ...
    #[arg(long, value_delimiter = ',')]
    pub prizes: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SampleSizeArgs {
    #[arg(long)]
    pub target_mu: f64,
    #[arg(long, default_value_t = 0.95)]
    pub power: f64,
    /// Mode of the anticipated metric value.
    #[arg(long, default_value_t = 0.8)]
    pub omega: f64,
    /// Concentration of the anticipated metric value.
    #[arg(long, default_value_t = 10.0)]
    pub k: f64,
    #[arg(long, default_value = "laplace")]
    pub prior: Prior,
    #[arg(long, default_value_t = 0.95)]
    pub credibility: f64,
    #[arg(long, default_value_t = DEFAULT_SIMS_PER_N)]
    pub sims: usize,
    /// Comma-separated ascending candidate sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<u64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Origin allowed to call the API from a browser, or `*`.
    #[arg(long)]
    pub allow_origin: Option<String>,
}

fn options(model: &ModelArgs, sampling: &SamplingArgs) -> AnalysisOptions {
    AnalysisOptions {
        prior: model.prior,
        prior_prev: model.prior_prev,
        prior_tpr: model.prior_tpr,
        prior_tnr: model.prior_tnr,
        prevalence: model.prevalence(),
        model: model.model,
        samples: sampling.samples,
        seed: sampling.seed,
        credibility: sampling.credibility,
        metrics: None,
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialise");
    s.push('\n');
    s
}

fn io_error(path: &Path, e: std::io::Error) -> ApiError {
    Error::Io(format!("{}: {e}", path.display())).into()
}

fn write_histograms(dir: &Path, resp: &AnalyzeResponse) -> Result<(), ApiError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    for h in &resp.histograms {
        let path = dir.join(format!("{}.csv", h.metric.name().to_ascii_lowercase()));
        std::fs::write(&path, h.to_csv()).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

/// Builds the request a subcommand stands for. `None` for `serve`.
pub fn request_json(command: &Command) -> Result<Option<serde_json::Value>, ApiError> {
    let to_value = |v: serde_json::Result<serde_json::Value>| v.expect("documents serialise");
    Ok(match command {
        Command::Analyze(a) => Some(to_value(serde_json::to_value(analyze_request(a)?))),
        Command::Bm(a) => Some(to_value(serde_json::to_value(bm_request(a)?))),
        Command::Predictive(a) => Some(to_value(serde_json::to_value(predictive_request(a)?))),
        Command::Leaderboard(a) => Some(to_value(serde_json::to_value(leaderboard_request(a)?))),
        Command::Samplesize(a) => Some(to_value(serde_json::to_value(samplesize_request(a)))),
        Command::Serve(_) => None,
    })
}

fn analyze_request(a: &AnalyzeArgs) -> Result<AnalyzeRequest, ApiError> {
    let mut opts = options(&a.model, &a.sampling);
    opts.metrics = a.metrics.clone();
    Ok(AnalyzeRequest {
        cm: a.model.cm()?,
        options: opts,
        bins: if a.histograms.is_some() { a.bins } else { 0 },
    })
}

fn bm_request(a: &BmArgs) -> Result<BmRequest, ApiError> {
    Ok(BmRequest {
        cm: a.model.cm()?,
        options: options(&a.model, &a.sampling),
    })
}

fn predictive_request(a: &PredictiveArgs) -> Result<PredictiveRequest, ApiError> {
    Ok(PredictiveRequest {
        cm: a.model.cm()?,
        prior: a.model.prior,
        prior_prev: a.model.prior_prev,
        prior_tpr: a.model.prior_tpr,
        prior_tnr: a.model.prior_tnr,
        prevalence: a.model.prevalence(),
        model: a.model.model,
        n_synth: a.n_synth,
        draws: a.draws,
        metric: a.metric,
        seed: a.seed,
    })
}

fn leaderboard_request(a: &LeaderboardArgs) -> Result<LeaderboardRequest, ApiError> {
    let text = std::fs::read_to_string(&a.csv).map_err(|e| io_error(&a.csv, e))?;
    Ok(LeaderboardRequest {
        submissions: Vec::new(),
        csv: Some(text),
        n: a.n,
        prior: a.prior,
        draws: a.draws,
        prizes: a.prizes.clone().unwrap_or_default(),
        seed: a.seed,
    })
}

fn samplesize_request(a: &SampleSizeArgs) -> SampleSizeRequest {
    SampleSizeRequest {
        target_mu: a.target_mu,
        power: a.power,
        omega: a.omega,
        k: a.k,
        prior: a.prior,
        credibility: a.credibility,
        sims: a.sims,
        ns: a.ns.clone(),
        seed: a.seed,
    }
}

/// Runs a subcommand and returns what it prints on success.
pub fn run(cli: Cli) -> Result<String, ApiError> {
    let limits = Limits::UNBOUNDED;
    match cli.command {
        Command::Analyze(a) => {
            let resp = ops::analyze(analyze_request(&a)?, &limits)?;
            if let Some(dir) = &a.histograms {
                write_histograms(dir, &resp)?;
            }
            Ok(match a.format {
                Format::Json => json(&resp.report),
                Format::Table => render_table(&resp.report),
            })
        }
        Command::Bm(a) => {
            let resp = ops::bm(bm_request(&a)?, &limits)?;
            Ok(match a.format {
                Format::Json => json(&resp),
                Format::Table => bm_table(&resp),
            })
        }
        Command::Predictive(a) => {
            let resp = ops::predictive(predictive_request(&a)?, &limits)?;
            Ok(match a.format {
                Format::Json => json(&resp),
                Format::Table => predictive_table(&resp),
            })
        }
        Command::Leaderboard(a) => {
            let resp = ops::leaderboard(leaderboard_request(&a)?, &limits)?;
            Ok(match a.format {
                Format::Json => json(&resp),
                Format::Table => leaderboard_table(&resp),
            })
        }
        Command::Samplesize(a) => {
            let resp = ops::samplesize(samplesize_request(&a), &limits)?;
            Ok(match a.format {
                Format::Json => json(&resp),
                Format::Table => samplesize_table(&resp),
            })
        }
        Command::Serve(a) => {
            let config = ServiceConfig {
                limits: Limits::SERVICE,
                allow_origin: a.allow_origin,
            };
            let addr = SocketAddr::new(a.host, a.port);
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Io(e.to_string()))?;
            eprintln!("listening on http://{addr}");
            rt.block_on(cmu_service::serve(addr, config))
                .map_err(|e| Error::Io(e.to_string()))?;
            Ok(String::new())
        }
    }
}

fn bm_table(r: &BmResponse) -> String {
    let s = &r.summary;
    let mut out = format!(
        "P(informative) = {:.4}\nP(deceptive)   = {:.4}\nBM {} HPD {} MU {} (percentage points)\nsamples: {}, seed: {}\n",
        r.r_inf, r.r_dec, s.rendered.estimate, s.rendered.hpd, s.rendered.mu, r.samples, r.seed
    );
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

const MAX_SUPPORT_ROWS: usize = 60;

fn predictive_table(r: &PredictiveResponse) -> String {
    let d = &r.distribution;
    let mut out = format!(
        "{} over {} synthetic matrices of size {} (seed {})\n",
        d.metric, r.draws, r.n_synth, r.seed
    );
    if d.support.len() <= MAX_SUPPORT_ROWS {
        let _ = writeln!(out, "{:>12} {:>12}", "value", "probability");
        for p in &d.support {
            let _ = writeln!(out, "{:>12.6} {:>12.6}", p.value, p.probability);
        }
    } else {
        let _ = writeln!(
            out,
            "{} distinct values (use --format json for the full distribution)",
            d.support.len()
        );
    }
    if d.undefined > 0 {
        let _ = writeln!(out, "undefined in {} synthetic matrices", d.undefined);
    }
    let mut audits = vec![&r.spread];
    if let Some(c) = &r.components {
        audits.extend(c);
    }
    let _ = writeln!(
        out,
        "\n{:<8} {:>12} {:>12} {:>10} {:>10}",
        "quantity", "synth var", "true var", "ratio", "predicted"
    );
    for a in audits {
        let predicted = a.predicted_ratio.map_or("-".to_string(), |p| format!("{p:.4}"));
        let _ = writeln!(
            out,
            "{:<8} {:>12.4e} {:>12.4e} {:>10.4} {:>10}",
            a.quantity, a.empirical_var, a.true_var, a.observed_ratio, predicted
        );
    }
    out
}

fn leaderboard_table(r: &LeaderboardResponse) -> String {
    let m = &r.matrix;
    let width = m.names.iter().map(String::len).max().unwrap_or(4).max(4);
    let mut out = format!("rank probabilities ({} draws, seed {})\n", m.draws, r.seed);
    let _ = write!(out, "{:<width$} {:>8}", "name", "acc");
    for p in 0..m.names.len() {
        let _ = write!(out, " {:>7}", format!("#{}", p + 1));
    }
    out.push('\n');
    for (s, row) in m.entries.iter().enumerate() {
        let _ = write!(out, "{:<width$} {:>8}", m.names[s], r.submissions[s].acc_point);
        for q in row {
            let _ = write!(out, " {q:>7.4}");
        }
        out.push('\n');
    }
    let b = &r.prob_best;
    let _ = writeln!(
        out,
        "\nP({} is truly best) = {:.4} ± {:.4}",
        b.name, b.probability, b.standard_error
    );
    if let Some(p) = &r.prizes {
        out.push_str("\nexpected prize\n");
        for (name, e) in p.names.iter().zip(&p.expected) {
            let _ = writeln!(out, "{name:<width$} {e:>12.2}");
        }
    }
    out
}

fn samplesize_table(r: &SampleSizeResponse) -> String {
    let p = &r.plan;
    let mut out = format!(
        "target MU {} at power {} (omega {}, k {}, {} sims per N, seed {})\n",
        p.target_mu, p.power, p.omega, p.k, p.sims_per_n, r.seed
    );
    let _ = writeln!(out, "{:>10} {:>12}", "N", "achieved MU");
    for c in &p.curve {
        let _ = writeln!(out, "{:>10} {:>12.4}", c.n, c.achieved_mu);
    }
    if let Some(n) = p.result_n {
        let _ = writeln!(out, "\nsmallest sufficient N: {n}");
    }
    if let Some(n) = r.bound_n {
        let _ = writeln!(out, "large-N bound 2/sqrt(N) gives N = {n}");
    }
    out
}
