//! Command-line front end: dataset ingestion and simulation, posterior
//! fitting, prior sensitivity reports, prior inspection and plotting,
//! and chat-based prior elicitation.
//!
//! Exit codes partition the failure classes: 2 for argument problems,
//! 3 for data and file problems, 4 for inference or elicitation
//! failures, 5 when MCMC diagnostics reject the run.

mod plot;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coxprior::cox::TiesPolicy;
use coxprior::dataset::{self, SimulationConfig};
use coxprior::elicitation::{self, ElicitError, ProviderConfig, SanityBounds};
use coxprior::inference::{
    self, PosteriorSummary, QuadratureConfig, SamplerConfig, SummaryMethod, SummaryRecord,
};
use coxprior::priors::{self, LogHrPrior};
use coxprior::sensitivity::{self, ReportFormat, SensitivityError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const RHAT_LIMIT: f64 = 1.01;

enum CliError {
    Arg(String),
    Data(String),
    Inference(String),
    Diagnostics(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Arg(_) => 2,
            CliError::Data(_) => 3,
            CliError::Inference(_) => 4,
            CliError::Diagnostics(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Arg(m)
            | CliError::Data(m)
            | CliError::Inference(m)
            | CliError::Diagnostics(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "coxprior",
    version,
    about = "Bayesian two-group Cox hazard-ratio analysis with log-normal priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the hazard-ratio posterior for a single prior
    Fit(FitArgs),
    /// Fit a set of priors and report posterior stability
    Sensitivity(SensitivityArgs),
    /// Inspect bundled or custom priors
    Priors(PriorsArgs),
    /// Elicit a prior pair from a chat model
    Elicit(ElicitArgs),
    /// Generate a synthetic two-arm survival dataset
    Simulate(SimulateArgs),
    /// Emit prior density curves as CSV or SVG
    PlotPriors(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Quadrature,
    Mcmc,
}

impl From<MethodArg> for SummaryMethod {
    fn from(m: MethodArg) -> SummaryMethod {
        match m {
            MethodArg::Quadrature => SummaryMethod::Quadrature,
            MethodArg::Mcmc => SummaryMethod::Mcmc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TiesArg {
    Breslow,
    Efron,
}

impl From<TiesArg> for TiesPolicy {
    fn from(t: TiesArg) -> TiesPolicy {
        match t {
            TiesArg::Breslow => TiesPolicy::Breslow,
            TiesArg::Efron => TiesPolicy::Efron,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
    Table,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::MarkdownTable,
            FormatArg::Table => ReportFormat::PlainTable,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Survival CSV with columns group, time_os_months, event
    #[arg(long)]
    data: PathBuf,
    /// Preset label or lognormal:MU,SIGMA
    #[arg(long)]
    prior: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Quadrature)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = TiesArg::Breslow)]
    ties: TiesArg,
    /// MCMC chains
    #[arg(long, default_value_t = 4)]
    chains: usize,
    /// Post-warmup MCMC draws per chain
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    /// Warmup draws per chain, discarded
    #[arg(long, default_value_t = 2000)]
    warmup: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the summary JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SensitivityArgs {
    /// Survival CSV with columns group, time_os_months, event
    #[arg(long)]
    data: PathBuf,
    /// `all` for the six bundled presets, or a priors JSON file
    #[arg(long)]
    priors: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Quadrature)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = TiesArg::Breslow)]
    ties: TiesArg,
    /// Posterior probability treated as a decisive finding
    #[arg(long, default_value_t = 0.95)]
    threshold: f64,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    #[arg(long, default_value_t = 2000)]
    warmup: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PriorsArgs {
    #[command(subcommand)]
    action: PriorsAction,
}

#[derive(Subcommand)]
enum PriorsAction {
    /// Print the bundled prior parameters
    List {
        /// Emit the priors-file JSON instead of a table
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median and central 95% interval on the HR scale
    Summarize {
        /// Preset label, lognormal:MU,SIGMA, or `all`
        #[arg(long, default_value = "all")]
        prior: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ElicitArgs {
    /// Provider config JSON file for a live call
    #[arg(long, conflicts_with = "mock")]
    provider: Option<PathBuf>,
    /// Use the bundled canned response for this model (chatgpt, gemini, grok)
    #[arg(long)]
    mock: Option<String>,
    /// Where to write the elicited prior pair (priors-file JSON)
    #[arg(long)]
    out: PathBuf,
    /// Where to write the prompt/response transcript
    #[arg(long, default_value = "elicit-transcript.txt")]
    transcript: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Patients in the reference arm
    #[arg(long, default_value_t = 8)]
    n_crt: usize,
    /// Patients in the comparison arm
    #[arg(long, default_value_t = 20)]
    n_hfrt: usize,
    /// True log hazard ratio of HFRT versus CRT
    #[arg(long, default_value_t = 0.0)]
    log_hr: f64,
    /// Weibull shape of the baseline hazard
    #[arg(long, default_value_t = 1.5)]
    shape: f64,
    /// Weibull scale of the baseline hazard, in months
    #[arg(long, default_value_t = 15.0)]
    scale: f64,
    /// Expected fraction of censored records, in [0, 1)
    #[arg(long, default_value_t = 0.1)]
    censor_rate: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// `all` for the six bundled presets, or a priors JSON file
    #[arg(long, default_value = "all")]
    priors: String,
    #[arg(long, default_value_t = 0.01)]
    hr_min: f64,
    #[arg(long, default_value_t = 5.0)]
    hr_max: f64,
    /// Grid points per prior
    #[arg(long, default_value_t = 500)]
    points: usize,
    /// Output file; a .svg extension selects SVG, anything else CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fit(args) => cmd_fit(args),
        Command::Sensitivity(args) => cmd_sensitivity(args),
        Command::Priors(args) => cmd_priors(args),
        Command::Elicit(args) => cmd_elicit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::PlotPriors(args) => cmd_plot_priors(args),
    }
}

fn resolve_prior(text: &str) -> Result<LogHrPrior, CliError> {
    if let Some(rest) = text.strip_prefix("lognormal:") {
        let (mu_text, sigma_text) = rest.split_once(',').ok_or_else(|| {
            CliError::Arg(format!("expected lognormal:MU,SIGMA, got `{text}`"))
        })?;
        let mu: f64 = mu_text.trim().parse().map_err(|_| {
            CliError::Arg(format!("could not parse MU in `{text}` as a number"))
        })?;
        let sigma: f64 = sigma_text.trim().parse().map_err(|_| {
            CliError::Arg(format!("could not parse SIGMA in `{text}` as a number"))
        })?;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(CliError::Arg("sigma must be positive".to_string()));
        }
        LogHrPrior::custom(mu, sigma).map_err(|e| CliError::Arg(e.to_string()))
    } else {
        priors::preset(text).ok_or_else(|| {
            let labels: Vec<String> = priors::preset_priors()
                .into_iter()
                .map(|p| p.label)
                .collect();
            CliError::Arg(format!(
                "unknown prior `{text}`; use lognormal:MU,SIGMA or one of: {}",
                labels.join(", ")
            ))
        })
    }
}

fn resolve_prior_set(text: &str) -> Result<Vec<LogHrPrior>, CliError> {
    if text == "all" {
        return Ok(priors::preset_priors());
    }
    let raw = std::fs::read_to_string(text)
        .map_err(|e| CliError::Data(format!("could not read priors file `{text}`: {e}")))?;
    priors::read_priors_json(&raw)
        .map_err(|e| CliError::Data(format!("priors file `{text}`: {e}")))
}

fn load_dataset(path: &Path) -> Result<dataset::Dataset, CliError> {
    let raw = std::fs::read_to_string(path).map_err(|e| {
        CliError::Data(format!("could not read `{}`: {e}", path.display()))
    })?;
    let parsed = dataset::parse_csv_named(&raw, &path.display().to_string())
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for warning in &parsed.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(parsed.dataset)
}

/// Structured output goes to `--out` when given, stdout otherwise.
fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            CliError::Data(format!("could not write `{}`: {e}", path.display()))
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn summary_row(label: &str, s: &PosteriorSummary) -> String {
    let mut row = format!(
        "{label}: Pr(HR > 1) = {:.3}, median HR = {:.3}, 95% CrI ({:.3}, {:.3})",
        s.pr_hr_gt_1, s.median_hr, s.hr_2_5, s.hr_97_5
    );
    if let Some(d) = s.diagnostics {
        row.push_str(&format!(
            ", R-hat = {:.4}, ESS = {:.0}, acceptance = {:.2}",
            d.rhat, d.ess, d.acceptance_rate
        ));
    }
    row
}

/// Prints per-prior diagnostics and fails with exit class 5 when any
/// MCMC run has split-chain R-hat at or above the limit.
fn check_diagnostics<'a, I>(rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = (&'a str, &'a PosteriorSummary)>,
{
    let mut failed = Vec::new();
    for (label, summary) in rows {
        if let Some(d) = summary.diagnostics {
            if d.rhat >= RHAT_LIMIT {
                eprintln!(
                    "diagnostics: {label}: R-hat = {:.4} (limit {RHAT_LIMIT}), \
                     ESS = {:.0}, acceptance = {:.2}: chains have not mixed",
                    d.rhat, d.ess, d.acceptance_rate
                );
                failed.push(label.to_string());
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Diagnostics(format!(
            "split-chain R-hat >= {RHAT_LIMIT} for: {}; rerun with more iterations",
            failed.join(", ")
        )))
    }
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let prior = resolve_prior(&args.prior)?;
    let data = load_dataset(&args.data)?;
    let ties = args.ties.into();
    let summary = match args.method {
        MethodArg::Quadrature => inference::quadrature_posterior(
            &data,
            &prior,
            ties,
            &QuadratureConfig::default(),
        )
        .map_err(|e| CliError::Inference(e.to_string()))?,
        MethodArg::Mcmc => {
            let config = SamplerConfig {
                chains: args.chains,
                iterations: args.iters,
                warmup: args.warmup,
                seed: args.seed,
                ..SamplerConfig::default()
            };
            inference::sample_posterior(&data, &prior, ties, &config)
                .and_then(|run| run.summary())
                .map_err(|e| CliError::Inference(e.to_string()))?
        }
    };
    eprintln!("{}", summary_row(&prior.label, &summary));
    let record = SummaryRecord::new(&prior.label, &summary);
    let json = serde_json::to_string_pretty(&record)
        .map_err(|e| CliError::Inference(e.to_string()))?;
    write_output(args.out.as_deref(), &format!("{json}\n"))?;
    check_diagnostics([(prior.label.as_str(), &summary)])
}

fn cmd_sensitivity(args: SensitivityArgs) -> Result<(), CliError> {
    if !(args.threshold > 0.0 && args.threshold < 1.0) {
        return Err(CliError::Arg(format!(
            "threshold must lie strictly between 0 and 1, got {}",
            args.threshold
        )));
    }
    let prior_set = resolve_prior_set(&args.priors)?;
    let data = load_dataset(&args.data)?;
    let sampler = SamplerConfig {
        chains: args.chains,
        iterations: args.iters,
        warmup: args.warmup,
        seed: args.seed,
        ..SamplerConfig::default()
    };
    let report = sensitivity::run_sensitivity(
        &data,
        &prior_set,
        args.ties.into(),
        args.method.into(),
        &sampler,
        args.threshold,
    )
    .map_err(|e| match e {
        SensitivityError::Inference { .. } => CliError::Inference(e.to_string()),
        SensitivityError::InvalidThreshold { .. } => CliError::Arg(e.to_string()),
        _ => CliError::Data(e.to_string()),
    })?;
    eprintln!(
        "spread Pr(HR > 1): {:.3}; spread median HR: {:.3}; unanimous at {}: {}",
        report.spread_pr,
        report.spread_median,
        report.decision_threshold,
        if report.unanimous_decision { "yes" } else { "no" }
    );
    let rendered = sensitivity::render_report(&report, args.format.into());
    write_output(args.out.as_deref(), &rendered)?;
    check_diagnostics(
        report
            .rows
            .iter()
            .map(|row| (row.label.as_str(), &row.summary)),
    )
}

/// Interval endpoints span 27 orders of magnitude across the bundled
/// priors, so fall back to scientific notation outside a sane window.
fn format_hr(value: f64) -> String {
    if value != 0.0 && (value.abs() < 0.01 || value.abs() >= 1000.0) {
        format!("{value:.3e}")
    } else {
        format!("{value:.2}")
    }
}

fn cmd_priors(args: PriorsArgs) -> Result<(), CliError> {
    match args.action {
        PriorsAction::List { json, out } => {
            let set = priors::preset_priors();
            if json {
                let text = priors::write_priors_json(&set);
                write_output(out.as_deref(), &format!("{text}\n"))
            } else {
                let mut text = String::from("label                   source   kind            mu     sigma\n");
                for p in &set {
                    text.push_str(&format!(
                        "{:<23} {:<8} {:<14} {:>6} {:>9}\n",
                        p.label,
                        format!("{:?}", p.source).to_lowercase(),
                        format!("{:?}", p.kind).to_lowercase(),
                        p.mu,
                        p.sigma
                    ));
                }
                write_output(out.as_deref(), &text)
            }
        }
        PriorsAction::Summarize { prior, out } => {
            let set = if prior == "all" {
                priors::preset_priors()
            } else {
                vec![resolve_prior(&prior)?]
            };
            let mut text = String::new();
            for p in &set {
                let s = priors::prior_summary(p)
                    .map_err(|e| CliError::Inference(e.to_string()))?;
                text.push_str(&format!(
                    "{}: median HR {}, 95% interval ({}, {})\n",
                    p.label,
                    format_hr(s.median_hr),
                    format_hr(s.hr_2_5),
                    format_hr(s.hr_97_5)
                ));
            }
            write_output(out.as_deref(), &text)
        }
    }
}

fn cmd_elicit(args: ElicitArgs) -> Result<(), CliError> {
    let provider = match (&args.provider, &args.mock) {
        (Some(path), None) => {
            let raw = std::fs::read_to_string(path).map_err(|e| {
                CliError::Data(format!("could not read `{}`: {e}", path.display()))
            })?;
            let config: ProviderConfig = serde_json::from_str(&raw).map_err(|e| {
                CliError::Arg(format!("provider config `{}`: {e}", path.display()))
            })?;
            config
        }
        (None, Some(model)) => ProviderConfig::mock(model),
        _ => {
            return Err(CliError::Arg(
                "exactly one of --provider or --mock is required".to_string(),
            ))
        }
    };
    let prompt = elicitation::build_prompt();
    let response = elicitation::elicit(&provider, &prompt).map_err(|e| match e {
        ElicitError::InvalidProviderConfig { .. }
        | ElicitError::UnknownMockModel { .. }
        | ElicitError::MissingApiKey { .. } => CliError::Arg(e.to_string()),
        other => CliError::Inference(other.to_string()),
    })?;

    // The transcript lands on disk before parsing so a parse failure
    // still leaves the full exchange for inspection.
    let transcript = format!("# prompt\n\n{prompt}\n# response\n\n{response}");
    std::fs::write(&args.transcript, &transcript).map_err(|e| {
        CliError::Data(format!(
            "could not write `{}`: {e}",
            args.transcript.display()
        ))
    })?;

    let result = elicitation::parse_response(&response, &provider.model_name)
        .map_err(|e| CliError::Inference(e.to_string()))?;
    for warning in elicitation::sanity_check(&result, &SanityBounds::default()) {
        eprintln!("warning: {warning}");
    }
    let pair = vec![result.informative.clone(), result.noninformative.clone()];
    let json = priors::write_priors_json(&pair);
    std::fs::write(&args.out, format!("{json}\n")).map_err(|e| {
        CliError::Data(format!("could not write `{}`: {e}", args.out.display()))
    })?;
    eprintln!(
        "elicited {}: LogNormal({}, {}) and {}: LogNormal({}, {}); transcript in {}",
        result.informative.label,
        result.informative.mu,
        result.informative.sigma,
        result.noninformative.label,
        result.noninformative.mu,
        result.noninformative.sigma,
        args.transcript.display()
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config = SimulationConfig {
        n_crt: args.n_crt,
        n_hfrt: args.n_hfrt,
        true_log_hr: args.log_hr,
        baseline_shape: args.shape,
        baseline_scale: args.scale,
        censor_rate: args.censor_rate,
        seed: args.seed,
    };
    let data = dataset::simulate(&config).map_err(|e| CliError::Arg(e.to_string()))?;
    eprintln!(
        "simulated {} records ({} events): {}",
        data.len(),
        data.n_events(),
        data.provenance()
    );
    write_output(args.out.as_deref(), &dataset::write_csv(&data))
}

fn cmd_plot_priors(args: PlotArgs) -> Result<(), CliError> {
    let set = resolve_prior_set(&args.priors)?;
    let mut series = Vec::with_capacity(set.len());
    for p in &set {
        let curve = priors::density_curve(p, args.hr_min, args.hr_max, args.points)
            .map_err(|e| CliError::Arg(e.to_string()))?;
        series.push(plot::Series {
            label: p.label.clone(),
            kind: p.kind,
            points: curve,
        });
    }
    let svg_requested = args
        .out
        .as_deref()
        .and_then(Path::extension)
        .is_some_and(|ext| ext.eq_ignore_ascii_case("svg"));
    let content = if svg_requested {
        plot::render_svg(&series)
    } else {
        plot::render_csv(&series)
    };
    write_output(args.out.as_deref(), &content)
}
