//! Bayesian two-group survival comparison under a Cox proportional
//! hazards model with a log-normal prior on the hazard ratio.
//!
//! The crate covers the full path from data to decision: parsing and
//! simulating right-censored two-arm datasets ([`dataset`]), the
//! binary-covariate Cox partial likelihood with Breslow and Efron tie
//! handling ([`cox`]), the bundled and custom hazard-ratio priors
//! ([`priors`]), posterior inference by deterministic quadrature or
//! adaptive random-walk Metropolis ([`inference`]), prior sensitivity
//! reports ([`sensitivity`]), and chat-based prior elicitation
//! ([`elicitation`]).

pub mod cox;
pub mod dataset;
pub mod elicitation;
pub mod inference;
pub mod math;
pub mod priors;
pub mod sensitivity;

pub use cox::{CoxError, MleResult, PartialLikelihood, TiesPolicy};
pub use dataset::{DataError, Dataset, Group, ParsedCsv, SimulationConfig, SurvivalRecord};
pub use elicitation::{ElicitError, ElicitationResult, ProviderConfig, SanityBounds};
pub use inference::{
    Diagnostics, InferenceError, PosteriorSummary, SamplerConfig, SummaryMethod, SummaryRecord,
};
pub use priors::{LogHrPrior, PriorError, PriorKind, PriorSource};
pub use sensitivity::{ReportFormat, SensitivityError, SensitivityReport, SensitivityRow};
