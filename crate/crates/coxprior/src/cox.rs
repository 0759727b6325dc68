//! Cox partial likelihood for a single binary covariate, with Breslow
//! and Efron handling of tied event times, plus a Newton maximizer.
//!
//! With only two arms the likelihood depends on the data through one
//! count vector per distinct event time: how many of each arm are still
//! at risk and how many of each arm die there. Everything (value,
//! score, observed information) is evaluated from those counts in O(1)
//! per event time, so grid scans over beta stay cheap even for large
//! datasets.
//!
//! Exponentials are arranged so no intermediate overflows for any
//! finite beta: the linear predictor only ever enters through
//! `log(n0 + n1 * exp(beta))` and the corresponding probabilities,
//! computed in log space once |beta| is extreme.

use crate::dataset::{Dataset, Group};
use crate::math::logaddexp;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoxError {
    #[error(
        "separation: the partial likelihood is monotone in beta and has \
         no finite maximizer"
    )]
    Separation,
}

/// How tied event times contribute to the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiesPolicy {
    #[default]
    Breslow,
    Efron,
}

/// Maximizer output. `standard_error` is the inverse square root of the
/// observed information at the estimate (infinite when the information
/// vanishes, e.g. single-arm data).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleResult {
    pub beta_hat: f64,
    pub standard_error: f64,
    pub iterations: u32,
    pub converged: bool,
}

/// Counts for one distinct event time: arm totals still at risk and arm
/// totals among the deaths there.
#[derive(Debug, Clone, Copy)]
struct EventBlock {
    /// Reference-arm records at risk.
    n0: f64,
    /// HFRT records at risk.
    n1: f64,
    /// Reference-arm deaths at this time.
    d0: f64,
    /// HFRT deaths at this time.
    d1: f64,
}

impl EventBlock {
    fn deaths(&self) -> f64 {
        self.d0 + self.d1
    }
}

/// The partial likelihood of a dataset under a ties policy, reduced to
/// per-event-time counts at construction.
#[derive(Debug, Clone)]
pub struct PartialLikelihood {
    blocks: Vec<EventBlock>,
    ties: TiesPolicy,
}

/// log(n0 + n1 * exp(beta)), exact for single-arm risk sets and safe
/// for any finite beta.
fn log_denominator(n0: f64, n1: f64, beta: f64) -> f64 {
    if n1 == 0.0 {
        return n0.ln();
    }
    if n0 == 0.0 {
        return n1.ln() + beta;
    }
    if beta.abs() <= 600.0 {
        (n0 + n1 * beta.exp()).ln()
    } else {
        logaddexp(n0.ln(), n1.ln() + beta)
    }
}

/// P(death is from HFRT) and its complement for a risk set with the
/// given arm counts; both tails stay accurate for extreme beta.
fn hfrt_share(n0: f64, n1: f64, beta: f64) -> (f64, f64) {
    if n1 == 0.0 {
        return (0.0, 1.0);
    }
    if n0 == 0.0 {
        return (1.0, 0.0);
    }
    if beta.abs() <= 600.0 {
        let den = n0 + n1 * beta.exp();
        (n1 * beta.exp() / den, n0 / den)
    } else {
        let ld = logaddexp(n0.ln(), n1.ln() + beta);
        ((n1.ln() + beta - ld).exp(), (n0.ln() - ld).exp())
    }
}

impl PartialLikelihood {
    pub fn new(dataset: &Dataset, ties: TiesPolicy) -> Self {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        let records = dataset.records();
        order.sort_by(|&a, &b| {
            records[b]
                .time
                .partial_cmp(&records[a].time)
                .expect("record times are finite")
        });

        // Walk times in descending order so the running totals are the
        // at-risk counts when each block closes.
        let mut blocks = Vec::new();
        let (mut n0, mut n1) = (0.0_f64, 0.0_f64);
        let mut i = 0;
        while i < order.len() {
            let t = records[order[i]].time;
            let (mut d0, mut d1) = (0.0_f64, 0.0_f64);
            while i < order.len() && records[order[i]].time == t {
                let r = &records[order[i]];
                match r.group {
                    Group::Crt => n0 += 1.0,
                    Group::Hfrt => n1 += 1.0,
                }
                if r.event {
                    match r.group {
                        Group::Crt => d0 += 1.0,
                        Group::Hfrt => d1 += 1.0,
                    }
                }
                i += 1;
            }
            if d0 + d1 > 0.0 {
                blocks.push(EventBlock { n0, n1, d0, d1 });
            }
        }
        blocks.reverse();
        PartialLikelihood { blocks, ties }
    }

    /// True when the dataset has no events, making the likelihood
    /// constant in beta.
    pub fn is_degenerate(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn ties(&self) -> TiesPolicy {
        self.ties
    }

    pub fn log_likelihood(&self, beta: f64) -> f64 {
        let mut ll = 0.0;
        for b in &self.blocks {
            ll += beta * b.d1;
            match self.ties {
                TiesPolicy::Breslow => {
                    ll -= b.deaths() * log_denominator(b.n0, b.n1, beta);
                }
                TiesPolicy::Efron => {
                    let d = b.deaths();
                    let mut k = 0.0;
                    while k < d {
                        let f = k / d;
                        ll -= log_denominator(b.n0 - f * b.d0, b.n1 - f * b.d1, beta);
                        k += 1.0;
                    }
                }
            }
        }
        ll
    }

    pub fn score(&self, beta: f64) -> f64 {
        let mut s = 0.0;
        for b in &self.blocks {
            s += b.d1;
            match self.ties {
                TiesPolicy::Breslow => {
                    let (p, _) = hfrt_share(b.n0, b.n1, beta);
                    s -= b.deaths() * p;
                }
                TiesPolicy::Efron => {
                    let d = b.deaths();
                    let mut k = 0.0;
                    while k < d {
                        let f = k / d;
                        let (p, _) = hfrt_share(b.n0 - f * b.d0, b.n1 - f * b.d1, beta);
                        s -= p;
                        k += 1.0;
                    }
                }
            }
        }
        s
    }

    pub fn observed_information(&self, beta: f64) -> f64 {
        let mut info = 0.0;
        for b in &self.blocks {
            match self.ties {
                TiesPolicy::Breslow => {
                    let (p, q) = hfrt_share(b.n0, b.n1, beta);
                    info += b.deaths() * p * q;
                }
                TiesPolicy::Efron => {
                    let d = b.deaths();
                    let mut k = 0.0;
                    while k < d {
                        let f = k / d;
                        let (p, q) = hfrt_share(b.n0 - f * b.d0, b.n1 - f * b.d1, beta);
                        info += p * q;
                        k += 1.0;
                    }
                }
            }
        }
        info
    }

    /// Newton maximization from beta = 0 with step halving. Converges
    /// when |score| < 1e-10 or the step shrinks below 1e-12, capped at
    /// 100 iterations. A monotone likelihood walks beta past the guard
    /// at |beta| = 50 and is reported as separation.
    pub fn mle(&self) -> Result<MleResult, CoxError> {
        const GUARD: f64 = 50.0;
        if self.is_degenerate() {
            return Ok(MleResult {
                beta_hat: 0.0,
                standard_error: f64::INFINITY,
                iterations: 0,
                converged: true,
            });
        }
        // The score is strictly decreasing whenever some risk set holds
        // both arms, so its two limits bracket every attainable value:
        // beta -> -inf sends the HFRT share of each mixed block to
        // zero, beta -> +inf to one. A zero outside the open interval
        // between the limits means the likelihood is monotone.
        let mut mixed = false;
        let mut score_at_neg_inf = 0.0;
        let mut score_at_pos_inf = 0.0;
        for b in &self.blocks {
            mixed |= b.n0 > 0.0 && b.n1 > 0.0;
            score_at_neg_inf += b.d1 - if b.n0 == 0.0 { b.deaths() } else { 0.0 };
            score_at_pos_inf += b.d1 - if b.n1 > 0.0 { b.deaths() } else { 0.0 };
        }
        if !mixed {
            // Every risk set is single-arm: the likelihood is constant
            // in beta, so the group effect is unidentified.
            return Ok(MleResult {
                beta_hat: 0.0,
                standard_error: f64::INFINITY,
                iterations: 0,
                converged: true,
            });
        }
        if score_at_neg_inf <= 0.0 || score_at_pos_inf >= 0.0 {
            return Err(CoxError::Separation);
        }
        let mut beta = 0.0;
        let mut ll = self.log_likelihood(beta);
        let mut iterations = 0u32;
        let mut converged = false;
        while iterations < 100 {
            iterations += 1;
            let g = self.score(beta);
            if g.abs() < 1e-10 {
                converged = true;
                break;
            }
            let h = self.observed_information(beta);
            let dir = if h.is_finite() && h > 0.0 {
                (g / h).clamp(-10.0, 10.0)
            } else {
                g.signum()
            };
            let mut scale = 1.0;
            let mut next = beta + dir;
            let mut next_ll = self.log_likelihood(next);
            let mut halvings = 0;
            // NaN from an absurd trial point also lands in the halving
            // branch.
            while !(next_ll >= ll) && halvings < 60 {
                scale *= 0.5;
                next = beta + scale * dir;
                next_ll = self.log_likelihood(next);
                halvings += 1;
            }
            let step = (next - beta).abs();
            beta = next;
            ll = next_ll;
            if beta.abs() > GUARD {
                return Err(CoxError::Separation);
            }
            if step < 1e-12 {
                converged = true;
                break;
            }
        }
        let info = self.observed_information(beta);
        let standard_error = if info > 0.0 {
            1.0 / info.sqrt()
        } else {
            f64::INFINITY
        };
        Ok(MleResult {
            beta_hat: beta,
            standard_error,
            iterations,
            converged,
        })
    }
}

/// Log partial likelihood of `dataset` at `beta`.
pub fn log_partial_likelihood(dataset: &Dataset, beta: f64, ties: TiesPolicy) -> f64 {
    PartialLikelihood::new(dataset, ties).log_likelihood(beta)
}

/// First derivative of the log partial likelihood in beta.
pub fn score(dataset: &Dataset, beta: f64, ties: TiesPolicy) -> f64 {
    PartialLikelihood::new(dataset, ties).score(beta)
}

/// Negative second derivative of the log partial likelihood in beta.
pub fn observed_information(dataset: &Dataset, beta: f64, ties: TiesPolicy) -> f64 {
    PartialLikelihood::new(dataset, ties).observed_information(beta)
}

/// Maximum partial-likelihood estimate of beta.
pub fn mle(dataset: &Dataset, ties: TiesPolicy) -> Result<MleResult, CoxError> {
    PartialLikelihood::new(dataset, ties).mle()
}
