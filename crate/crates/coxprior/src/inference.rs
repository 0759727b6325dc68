//! Posterior inference for the log hazard ratio: a deterministic
//! quadrature path and an adaptive random-walk Metropolis sampler, with
//! split-chain convergence diagnostics and draw summaries.
//!
//! The posterior is always proper because the prior is proper, even
//! when the likelihood alone has no finite maximizer, so both paths
//! work on separated or event-free data.

use crate::cox::{PartialLikelihood, TiesPolicy};
use crate::dataset::Dataset;
use crate::math::{quantile_sorted, splitmix64};
use crate::priors::{log_density_beta, LogHrPrior, PriorError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error("invalid sampler config: {reason}")]
    InvalidSamplerConfig { reason: String },
    #[error("posterior mode search did not converge in {iterations} iterations")]
    ModeSearchFailed { iterations: u32 },
    #[error("log posterior is not finite at beta = {beta}")]
    NonFiniteLogPosterior { beta: f64 },
    #[error("posterior mass underflowed to zero on the quadrature grid")]
    ZeroPosteriorMass,
    #[error("chain {chain} accepted no proposals during warmup")]
    ChainStuck { chain: usize },
    #[error("need at least {need} draws to summarize, got {got}")]
    TooFewDraws { got: usize, need: usize },
}

/// Which algorithm produced a posterior summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryMethod {
    Quadrature,
    Mcmc,
}

/// Split-chain convergence diagnostics for a sampler run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rhat: f64,
    pub ess: f64,
    pub acceptance_rate: f64,
}

/// Posterior functionals on the hazard-ratio scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub pr_hr_gt_1: f64,
    pub median_hr: f64,
    pub hr_2_5: f64,
    pub hr_97_5: f64,
    pub method: SummaryMethod,
    pub diagnostics: Option<Diagnostics>,
}

/// Random-walk Metropolis settings. The step size adapts toward
/// `target_acceptance` during warmup only; warmup draws are discarded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    /// Post-warmup draws kept per chain.
    pub iterations: usize,
    pub warmup: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub target_acceptance: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            iterations: 5000,
            warmup: 2000,
            seed: 0,
            initial_step: 0.5,
            target_acceptance: 0.44,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        let fail = |reason: &str| {
            Err(InferenceError::InvalidSamplerConfig {
                reason: reason.to_string(),
            })
        };
        if self.chains == 0 {
            return fail("chains must be at least 1");
        }
        if self.iterations == 0 {
            return fail("iterations must be at least 1");
        }
        if self.warmup == 0 {
            return fail("warmup must be at least 1");
        }
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return fail("initial_step must be positive and finite");
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return fail("target_acceptance must lie strictly between 0 and 1");
        }
        Ok(())
    }
}

/// Grid settings for the quadrature path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Half-width in posterior (and prior) standard deviations.
    pub halfwidth: f64,
    /// Target grid spacing in beta.
    pub step: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            halfwidth: 12.0,
            step: 1e-3,
        }
    }
}

/// Post-warmup draws of beta, kept per chain for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    chains: Vec<Vec<f64>>,
}

impl PosteriorDraws {
    pub fn new(chains: Vec<Vec<f64>>) -> Self {
        PosteriorDraws { chains }
    }

    pub fn chains(&self) -> &[Vec<f64>] {
        &self.chains
    }

    pub fn n_total(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut all = Vec::with_capacity(self.n_total());
        for c in &self.chains {
            all.extend_from_slice(c);
        }
        all
    }
}

/// A finished sampler run.
#[derive(Debug, Clone)]
pub struct McmcRun {
    pub draws: PosteriorDraws,
    pub diagnostics: Diagnostics,
}

impl McmcRun {
    /// Draw summary with this run's diagnostics attached.
    pub fn summary(&self) -> Result<PosteriorSummary, InferenceError> {
        let mut s = summarize(&self.draws)?;
        s.diagnostics = Some(self.diagnostics);
        Ok(s)
    }
}

/// Log posterior density of beta, up to the normalizing constant.
pub fn log_posterior(dataset: &Dataset, prior: &LogHrPrior, beta: f64, ties: TiesPolicy) -> f64 {
    PartialLikelihood::new(dataset, ties).log_likelihood(beta) + log_density_beta(prior, beta)
}

/// Newton search for the posterior mode. The target is strictly
/// concave (curvature at least 1/sigma^2), so this converges from any
/// start; failure to do so is reported rather than papered over.
pub fn posterior_mode(
    dataset: &Dataset,
    prior: &LogHrPrior,
    ties: TiesPolicy,
) -> Result<f64, InferenceError> {
    prior.validate()?;
    let like = PartialLikelihood::new(dataset, ties);
    mode_search(&like, prior)
}

fn mode_search(like: &PartialLikelihood, prior: &LogHrPrior) -> Result<f64, InferenceError> {
    const MAX_ITER: u32 = 200;
    let inv_var = 1.0 / (prior.sigma * prior.sigma);
    let target = |b: f64| like.log_likelihood(b) + log_density_beta(prior, b);
    let mut beta = prior.mu;
    let mut value = target(beta);
    for _ in 0..MAX_ITER {
        let grad = like.score(beta) - (beta - prior.mu) * inv_var;
        if grad.abs() < 1e-11 {
            return Ok(beta);
        }
        let curv = like.observed_information(beta) + inv_var;
        let dir = grad / curv;
        let mut scale = 1.0;
        let mut next = beta + dir;
        let mut next_value = target(next);
        let mut halvings = 0;
        while !(next_value >= value) && halvings < 60 {
            scale *= 0.5;
            next = beta + scale * dir;
            next_value = target(next);
            halvings += 1;
        }
        let moved = (next - beta).abs();
        beta = next;
        value = next_value;
        if moved < 1e-13 * (1.0 + beta.abs()) {
            return Ok(beta);
        }
    }
    Err(InferenceError::ModeSearchFailed {
        iterations: MAX_ITER,
    })
}

/// Deterministic posterior summary by trapezoid quadrature on a dense
/// beta grid.
///
/// The grid is centered on the posterior mode with half-width
/// `halfwidth` posterior standard deviations, widened if needed to
/// cover mu +/- `halfwidth` prior standard deviations, so neither a
/// dominant likelihood nor a dominant prior can fall off the grid.
pub fn quadrature_posterior(
    dataset: &Dataset,
    prior: &LogHrPrior,
    ties: TiesPolicy,
    config: &QuadratureConfig,
) -> Result<PosteriorSummary, InferenceError> {
    prior.validate()?;
    let like = PartialLikelihood::new(dataset, ties);
    let inv_var = 1.0 / (prior.sigma * prior.sigma);
    let mode = mode_search(&like, prior)?;
    let post_sd = 1.0 / (like.observed_information(mode) + inv_var).sqrt();

    let lo = (mode - config.halfwidth * post_sd).min(prior.mu - config.halfwidth * prior.sigma);
    let hi = (mode + config.halfwidth * post_sd).max(prior.mu + config.halfwidth * prior.sigma);
    let n = (((hi - lo) / config.step).ceil() as usize).max(8) + 1;
    let h = (hi - lo) / (n - 1) as f64;

    let mut log_dens = Vec::with_capacity(n);
    let mut max_ld = f64::NEG_INFINITY;
    for i in 0..n {
        let beta = lo + i as f64 * h;
        let ld = like.log_likelihood(beta) + log_density_beta(prior, beta);
        if ld.is_nan() {
            return Err(InferenceError::NonFiniteLogPosterior { beta });
        }
        max_ld = max_ld.max(ld);
        log_dens.push(ld);
    }
    if !max_ld.is_finite() {
        return Err(InferenceError::ZeroPosteriorMass);
    }

    let dens: Vec<f64> = log_dens.iter().map(|ld| (ld - max_ld).exp()).collect();
    // Cumulative trapezoid sums; the common factor h cancels in every
    // ratio so it is never applied.
    let mut cum = Vec::with_capacity(n);
    cum.push(0.0);
    for i in 1..n {
        let prev = cum[i - 1];
        cum.push(prev + 0.5 * (dens[i - 1] + dens[i]));
    }
    let total = cum[n - 1];
    if !(total.is_finite() && total > 0.0) {
        return Err(InferenceError::ZeroPosteriorMass);
    }

    let cdf_at = |x: f64| -> f64 {
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let pos = (x - lo) / h;
        let k = (pos.floor() as usize).min(n - 2);
        let frac = pos - k as f64;
        let d_x = dens[k] + frac * (dens[k + 1] - dens[k]);
        (cum[k] + 0.5 * (dens[k] + d_x) * frac) / total
    };
    let quantile = |q: f64| -> f64 {
        let target = q * total;
        let mut idx = cum.partition_point(|&c| c < target);
        if idx == 0 {
            return lo;
        }
        if idx >= n {
            idx = n - 1;
        }
        let span = cum[idx] - cum[idx - 1];
        let frac = if span > 0.0 {
            (target - cum[idx - 1]) / span
        } else {
            1.0
        };
        lo + (idx - 1) as f64 * h + frac * h
    };

    Ok(PosteriorSummary {
        pr_hr_gt_1: 1.0 - cdf_at(0.0),
        median_hr: quantile(0.5).exp(),
        hr_2_5: quantile(0.025).exp(),
        hr_97_5: quantile(0.975).exp(),
        method: SummaryMethod::Quadrature,
        diagnostics: None,
    })
}

/// Adaptive random-walk Metropolis over beta.
///
/// Chains start from independent prior draws. Each chain's seed is
/// `splitmix64(seed + chain_index)`, so runs are reproducible and
/// chains decorrelated. During warmup the proposal scale follows a
/// Robbins-Monro recursion toward the target acceptance rate and is
/// frozen afterwards.
pub fn sample_posterior(
    dataset: &Dataset,
    prior: &LogHrPrior,
    ties: TiesPolicy,
    config: &SamplerConfig,
) -> Result<McmcRun, InferenceError> {
    prior.validate()?;
    config.validate()?;
    let like = PartialLikelihood::new(dataset, ties);
    let target = |b: f64| like.log_likelihood(b) + log_density_beta(prior, b);

    let mut chains = Vec::with_capacity(config.chains);
    let mut accepted_total = 0usize;
    for chain in 0..config.chains {
        let chain_seed = splitmix64(config.seed.wrapping_add(chain as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(chain_seed);

        let mut beta = 0.0;
        let mut current = f64::NAN;
        for _ in 0..100 {
            let z: f64 = rng.sample(StandardNormal);
            beta = prior.mu + prior.sigma * z;
            current = target(beta);
            if current.is_finite() {
                break;
            }
        }
        if !current.is_finite() {
            return Err(InferenceError::NonFiniteLogPosterior { beta });
        }

        let mut log_step = config.initial_step.ln();
        let mut draws = Vec::with_capacity(config.iterations);
        let mut accepted_warmup = 0usize;
        for t in 0..config.warmup + config.iterations {
            let z: f64 = rng.sample(StandardNormal);
            let proposal = beta + log_step.exp() * z;
            let proposed = target(proposal);
            let log_ratio = proposed - current;
            let alpha = if log_ratio >= 0.0 {
                1.0
            } else {
                log_ratio.exp()
            };
            let u: f64 = rng.random();
            let accept = proposed.is_finite() && u < alpha;
            if accept {
                beta = proposal;
                current = proposed;
            }
            if t < config.warmup {
                if accept {
                    accepted_warmup += 1;
                }
                let eta = ((t + 1) as f64).powf(-0.6);
                log_step = (log_step + eta * (alpha - config.target_acceptance))
                    .clamp(-23.0, 14.0);
            } else {
                if accept {
                    accepted_total += 1;
                }
                draws.push(beta);
            }
        }
        if accepted_warmup == 0 {
            return Err(InferenceError::ChainStuck { chain });
        }
        chains.push(draws);
    }

    let acceptance_rate = accepted_total as f64 / (config.chains * config.iterations) as f64;
    let draws = PosteriorDraws::new(chains);
    let (rhat, ess) = split_diagnostics(draws.chains());
    Ok(McmcRun {
        draws,
        diagnostics: Diagnostics {
            rhat,
            ess,
            acceptance_rate,
        },
    })
}

/// Summarizes beta draws on the HR scale. Quantiles use the
/// interpolated sample-quantile rule from [`quantile_sorted`].
pub fn summarize(draws: &PosteriorDraws) -> Result<PosteriorSummary, InferenceError> {
    const MIN_DRAWS: usize = 100;
    let flat = draws.flatten();
    if flat.len() < MIN_DRAWS {
        return Err(InferenceError::TooFewDraws {
            got: flat.len(),
            need: MIN_DRAWS,
        });
    }
    let n_pos = flat.iter().filter(|&&b| b > 0.0).count();
    let mut hrs: Vec<f64> = flat.iter().map(|b| b.exp()).collect();
    hrs.sort_by(|a, b| a.partial_cmp(b).expect("draws are finite"));
    Ok(PosteriorSummary {
        pr_hr_gt_1: n_pos as f64 / flat.len() as f64,
        median_hr: quantile_sorted(&hrs, 0.5),
        hr_2_5: quantile_sorted(&hrs, 0.025),
        hr_97_5: quantile_sorted(&hrs, 0.975),
        method: SummaryMethod::Mcmc,
        diagnostics: None,
    })
}

/// Splits each chain in half and returns (split R-hat, bulk ESS).
fn split_diagnostics(chains: &[Vec<f64>]) -> (f64, f64) {
    let half = chains.iter().map(|c| c.len() / 2).min().unwrap_or(0);
    if half < 2 {
        let total: usize = chains.iter().map(Vec::len).sum();
        return (1.0, total as f64);
    }
    let mut seqs: Vec<&[f64]> = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        seqs.push(&c[..half]);
        seqs.push(&c[half..2 * half]);
    }
    (rhat(&seqs), ess(&seqs))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Potential scale reduction over equal-length sequences, clamped to
/// at least 1.
fn rhat(seqs: &[&[f64]]) -> f64 {
    let n = seqs[0].len() as f64;
    let means: Vec<f64> = seqs.iter().map(|s| mean(s)).collect();
    let vars: Vec<f64> = seqs
        .iter()
        .zip(&means)
        .map(|(s, &m)| sample_var(s, m))
        .collect();
    let w = mean(&vars);
    let between = sample_var(&means, mean(&means));
    let var_plus = (n - 1.0) / n * w + between;
    if !(w > 0.0 && var_plus.is_finite()) {
        return 1.0;
    }
    (var_plus / w).sqrt().max(1.0)
}

/// Effective sample size via the initial monotone positive-pairs
/// truncation of the pooled autocorrelation.
fn ess(seqs: &[&[f64]]) -> f64 {
    let m = seqs.len();
    let n = seqs[0].len();
    let total = (m * n) as f64;
    if n < 4 {
        return total;
    }
    let means: Vec<f64> = seqs.iter().map(|s| mean(s)).collect();
    let vars: Vec<f64> = seqs
        .iter()
        .zip(&means)
        .map(|(s, &m0)| sample_var(s, m0))
        .collect();
    let w = mean(&vars);
    let between = sample_var(&means, mean(&means));
    let var_plus = (n as f64 - 1.0) / n as f64 * w + between;
    if !(var_plus > 0.0 && var_plus.is_finite()) {
        return total;
    }

    // Pooled autocovariance at a lag, biased (divisor n) per sequence.
    let acov = |t: usize| -> f64 {
        let mut acc = 0.0;
        for (s, &m0) in seqs.iter().zip(&means) {
            let mut c = 0.0;
            for i in 0..n - t {
                c += (s[i] - m0) * (s[i + t] - m0);
            }
            acc += c / n as f64;
        }
        acc / m as f64
    };
    let rho = |t: usize| 1.0 - (w - acov(t)) / var_plus;

    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum_pairs += pair;
        prev_pair = pair;
        t += 2;
    }
    let tau = (2.0 * sum_pairs - 1.0).max(1e-3);
    total / tau
}

/// One line of a structured results file: a labeled posterior summary
/// with diagnostics flattened in. `rhat` and `ess` are null for
/// quadrature results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub prior_label: String,
    pub method: SummaryMethod,
    pub pr_hr_gt_1: f64,
    pub median_hr: f64,
    pub hr_2_5: f64,
    pub hr_97_5: f64,
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
}

impl SummaryRecord {
    pub fn new(prior_label: impl Into<String>, summary: &PosteriorSummary) -> Self {
        SummaryRecord {
            prior_label: prior_label.into(),
            method: summary.method,
            pr_hr_gt_1: summary.pr_hr_gt_1,
            median_hr: summary.median_hr,
            hr_2_5: summary.hr_2_5,
            hr_97_5: summary.hr_97_5,
            rhat: summary.diagnostics.map(|d| d.rhat),
            ess: summary.diagnostics.map(|d| d.ess),
        }
    }
}
